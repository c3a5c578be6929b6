#ifndef CCN_MODEL_H_
#define CCN_MODEL_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccn/network.h"

namespace ccn {

enum class ModelMode : uint8_t { kBernoulli = 0, kMog = 1 };

// A trained entropy model: one Bernoulli network, or three MoG networks
// (weights, means, variances) plus per-channel quantization centers.
struct Model {
  ModelMode mode = ModelMode::kBernoulli;
  std::vector<Network> networks;
  std::vector<std::vector<double>> centers;  // M x L, MoG only

  static Model bernoulli(Network network);
  static Model mog(Network weights, Network means, Network variances,
                   std::vector<std::vector<double>> centers);

  const NetworkSpec& spec() const { return networks.front().spec(); }
  int planes() const { return spec().planes; }
  int levels() const {
    return mode == ModelMode::kMog ? static_cast<int>(centers.front().size()) : 2;
  }
  int components() const { return spec().out_blocks; }

  // Rounds parameters and centers to 32-bit floats so the in-memory model
  // equals what a save/load cycle produces.
  void round_to_float();
};

inline constexpr uint16_t kModelVersion = 1;

// File layout, little-endian:
//   "CCNM" | version u16 | mode u8 |
//   T, S, N, M, C, L, order, residual count (u32 each) |
//   residual (from, to) pairs (u32 each) |
//   per network: per layer weights, biases (f32) ; then T PReLU slopes (f32) |
//   MoG only: M x L centers (f32) |
//   CRC-32 of everything before it (u32)
std::vector<uint8_t> serialize_model(const Model& model);
// Throws FormatError on bad magic, version, checksum, truncation, or a
// nonzero weight at a masked position.
Model parse_model(std::span<const uint8_t> bytes);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

using ModelDigest = std::array<uint8_t, 8>;
// 64-bit FNV-1a of the serialized model, little-endian.
ModelDigest model_digest(const Model& model);

}  // namespace ccn

#endif  // CCN_MODEL_H_
