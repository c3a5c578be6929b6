#include "ccn/range_coder.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ccn/codeblock.h"

namespace ccn {
namespace {

constexpr uint32_t kTop = 1u << 24;

}  // namespace

FixedPmf::FixedPmf(std::span<const uint32_t> counts) {
  if (counts.empty()) throw std::invalid_argument("empty pmf");
  cumulative_.resize(counts.size() + 1, 0);
  for (size_t s = 0; s < counts.size(); ++s) {
    if (counts[s] == 0) throw std::invalid_argument("zero-frequency symbol");
    cumulative_[s + 1] = cumulative_[s] + counts[s];
    if (cumulative_[s + 1] > kPmfTotal) {
      throw std::invalid_argument("pmf counts exceed total");
    }
  }
  if (cumulative_.back() != kPmfTotal) {
    throw std::invalid_argument("pmf counts do not sum to total");
  }
}

int FixedPmf::find(uint32_t target) const {
  const auto it =
      std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), target);
  return static_cast<int>(it - cumulative_.begin()) - 1;
}

std::vector<uint32_t> FixedPmf::counts() const {
  std::vector<uint32_t> out(size());
  for (int s = 0; s < size(); ++s) out[s] = count(s);
  return out;
}

FixedPmf quantize_pmf(std::span<const double> pmf) {
  const size_t n = pmf.size();
  if (n == 0 || n > kPmfTotal) {
    throw std::invalid_argument("pmf size must be in [1, 65536]");
  }
  std::vector<uint32_t> counts(n);
  std::vector<double> remainder(n);
  int64_t total = 0;
  for (size_t s = 0; s < n; ++s) {
    if (!(pmf[s] >= 0.0) || !std::isfinite(pmf[s])) {
      throw std::invalid_argument("pmf entries must be finite and nonnegative");
    }
    const double scaled = std::min(pmf[s], 1.0) * kPmfTotal;
    const double whole = std::floor(scaled);
    remainder[s] = scaled - whole;
    counts[s] = std::max<uint32_t>(1, static_cast<uint32_t>(whole));
    total += counts[s];
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (total < kPmfTotal) {
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return remainder[a] > remainder[b];
    });
    for (size_t k = 0; total < kPmfTotal; k = (k + 1) % n) {
      ++counts[order[k]];
      ++total;
    }
  } else if (total > kPmfTotal) {
    // Only reachable when the floors of 1 or rounding overshoot: take back
    // from the smallest remainders first.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return remainder[a] < remainder[b];
    });
    while (total > kPmfTotal) {
      bool progressed = false;
      for (size_t k = 0; k < n && total > kPmfTotal; ++k) {
        if (counts[order[k]] > 1) {
          --counts[order[k]];
          --total;
          progressed = true;
        }
      }
      if (!progressed) throw std::invalid_argument("pmf too large to quantize");
    }
  }
  return FixedPmf(counts);
}

FixedPmf quantize_bernoulli(double p_one) {
  const double p = std::clamp(p_one, 1.0 / kPmfTotal, 1.0 - 1.0 / kPmfTotal);
  const double pmf[2] = {1.0 - p, p};
  return quantize_pmf(pmf);
}

void RangeEncoder::encode(const FixedPmf& pmf, int symbol) {
  if (symbol < 0 || symbol >= pmf.size()) {
    throw std::invalid_argument("symbol outside pmf");
  }
  const uint32_t r = range_ >> kPmfBits;
  low_ += static_cast<uint64_t>(r) * pmf.low(symbol);
  range_ = r * pmf.count(symbol);
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t pending = cache_;
    do {
      if (leading_) {
        leading_ = false;
      } else {
        bytes_.push_back(static_cast<uint8_t>(pending + carry));
      }
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int k = 0; k < 5; ++k) shift_low();
  return std::move(bytes_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  if (bytes.size() < 4) throw FormatError("arithmetic-coded stream too short");
  for (int k = 0; k < 4; ++k) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) {
    throw FormatError("arithmetic decoder read past end of stream");
  }
  return bytes_[pos_++];
}

int RangeDecoder::decode(const FixedPmf& pmf) {
  const uint32_t r = range_ >> kPmfBits;
  const uint32_t target = code_ / r;
  if (target >= kPmfTotal) throw FormatError("corrupt arithmetic-coded stream");
  const int symbol = pmf.find(target);
  code_ -= r * pmf.low(symbol);
  range_ = r * pmf.count(symbol);
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return symbol;
}

}  // namespace ccn
