#ifndef CCN_RANGE_CODER_H_
#define CCN_RANGE_CODER_H_

#include <cstdint>
#include <span>
#include <vector>

namespace ccn {

inline constexpr int kPmfBits = 16;
inline constexpr uint32_t kPmfTotal = 1u << kPmfBits;

// Integer symbol frequencies summing to kPmfTotal, every symbol >= 1.
class FixedPmf {
 public:
  FixedPmf() = default;
  // Throws std::invalid_argument unless counts are all >= 1 and sum to
  // kPmfTotal.
  explicit FixedPmf(std::span<const uint32_t> counts);

  int size() const { return static_cast<int>(cumulative_.size()) - 1; }
  uint32_t low(int s) const { return cumulative_[s]; }
  uint32_t high(int s) const { return cumulative_[s + 1]; }
  uint32_t count(int s) const { return cumulative_[s + 1] - cumulative_[s]; }
  // Symbol whose interval contains `target` (< kPmfTotal).
  int find(uint32_t target) const;

  std::vector<uint32_t> counts() const;

 private:
  std::vector<uint32_t> cumulative_;  // size L + 1, front 0, back kPmfTotal
};

// Largest-remainder apportionment of kPmfTotal counts: floor(p * 2^16) per
// symbol raised to at least 1, leftover counts handed out by descending
// fractional remainder (ties to the lower index). Exact given identical
// inputs because scaling by 2^16 is exact. Throws std::invalid_argument if
// the pmf has more than kPmfTotal entries or is not finite and nonnegative.
FixedPmf quantize_pmf(std::span<const double> pmf);

// Binary pmf (1 - p, p) with p clamped to [2^-16, 1 - 2^-16].
FixedPmf quantize_bernoulli(double p_one);

// Carry-propagating range encoder: 32-bit range, 33-bit low with a pending
// byte cache, byte-wise renormalization.
class RangeEncoder {
 public:
  // Throws std::invalid_argument if `symbol` is outside the pmf.
  void encode(const FixedPmf& pmf, int symbol);
  // Flushes the coder state and returns the stream. The encoder must not be
  // used afterwards.
  std::vector<uint8_t> finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool leading_ = true;  // first cached byte is always zero and not stored
  std::vector<uint8_t> bytes_;
};

class RangeDecoder {
 public:
  // Throws FormatError if the stream is shorter than the coder preamble.
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  // Throws FormatError on reading past the end of the stream or an
  // inconsistent code value.
  int decode(const FixedPmf& pmf);

  size_t consumed() const { return pos_; }

 private:
  uint8_t next_byte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
};

}  // namespace ccn

#endif  // CCN_RANGE_CODER_H_
