#ifndef CCN_CODEC_H_
#define CCN_CODEC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ccn/codeblock.h"
#include "ccn/model.h"

namespace ccn {

enum class PayloadMode : uint8_t { kLossless = 0, kMog = 1 };

inline constexpr uint16_t kPayloadVersion = 1;

// Container for coded blocks:
//   "CCNB" | version u16 | mode u8 | M, H, W u32 | R u16 | model digest (8) |
//   R*R body lengths u32 | bodies
// Lossless payloads hold one body per patch in raster tile order.
struct CodedPayload {
  PayloadMode mode = PayloadMode::kLossless;
  BlockDims dims;
  int grid = 1;
  ModelDigest digest{};
  std::vector<std::vector<uint8_t>> bodies;

  size_t body_bytes() const;
};

std::vector<uint8_t> serialize_payload(const CodedPayload& payload);
// Throws FormatError on bad magic, version, mode, inconsistent sizes or
// truncation.
CodedPayload parse_payload(std::span<const uint8_t> bytes);

// What the decoder saw for every symbol, in coding order. For Bernoulli
// models `probs` holds the single head output; for MoG models the L-entry
// pmf row.
struct CodingTrace {
  std::vector<Coordinate> coords;
  std::vector<std::vector<double>> probs;
  std::vector<uint16_t> symbols;
};

// How the decoder obtains each group's distributions. All three give
// identical results.
enum class DecodeStrategy : uint8_t {
  kFullPass,   // whole-block forward pass per group
  kBandPass,   // per group, only the receptive band of the group
  kWavefront,  // every layer evaluated once per coordinate
};

struct DecodeOptions {
  uint16_t placeholder = 0;  // symbol held by undecoded positions
  DecodeStrategy strategy = DecodeStrategy::kWavefront;
  CodingTrace* trace = nullptr;
};

// Entropy-codes one block under `model` in schedule order. The block must
// match the model's planes and alphabet.
std::vector<uint8_t> encode_block(const CodeBlock3D& block, const Model& model,
                                  CodingTrace* trace = nullptr);
CodeBlock3D decode_block(std::span<const uint8_t> body, const BlockDims& dims,
                         const Model& model, const DecodeOptions& options = {});

// Pixel image to payload; grid > 1 codes R x R patches independently.
CodedPayload encode_lossless(const GrayImage& img, const Model& model, int grid = 1);
// Throws FormatError on digest or mode mismatch or a corrupt stream.
GrayImage decode_lossless(const CodedPayload& payload, const Model& model,
                          const DecodeOptions& options = {});

CodedPayload encode_mog(const CodeBlock3D& block, const Model& model);
CodeBlock3D decode_mog(const CodedPayload& payload, const Model& model,
                       const DecodeOptions& options = {});

// Code length estimate of `block` under `model` in bits.
double estimate_bits(const CodeBlock3D& block, const Model& model);

}  // namespace ccn

#endif  // CCN_CODEC_H_
