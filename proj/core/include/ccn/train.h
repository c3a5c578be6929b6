#ifndef CCN_TRAIN_H_
#define CCN_TRAIN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ccn/codeblock.h"
#include "ccn/model.h"
#include "ccn/network.h"

namespace ccn {

// Plateau schedule: multiply the rate by `decay` once the epoch loss has
// improved by less than `min_improvement` (relative to the best epoch) for
// `patience` epochs in a row; stop when it falls below `minimum`.
struct LrSchedule {
  double initial = 1e-4;
  double minimum = 1e-6;
  double decay = 0.1;
  int patience = 3;
  double min_improvement = 1e-3;
};

struct EpochReport {
  int epoch = 0;
  double bpp = 0.0;  // mean training loss over the epoch, bits per code
  double learning_rate = 0.0;
  double seconds = 0.0;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 8;
  LrSchedule lr;
  uint64_t seed = 1;
  bool light = false;  // lossless: N = 4, S = 3 preset
  int grid = 1;        // lossless: train on R x R patches
  CodingOrder order = CodingOrder::kZigzag3D;
  double time_budget_seconds = 0.0;  // 0 = unlimited
  std::function<void(const EpochReport&)> on_epoch;

  // Throws std::invalid_argument on non-positive counts.
  void validate() const;
};

struct TrainResult {
  Model model;
  std::vector<EpochReport> history;
};

// Adam on mean bits per pixel of the bit-plane blocks. Throws
// std::invalid_argument on an empty corpus and NumericError, with the epoch
// and batch in the message, if the loss becomes non-finite.
TrainResult train_lossless(std::span<const GrayImage> corpus,
                           const TrainConfig& config,
                           const NetworkSpec* spec_override = nullptr);

struct MogConfig {
  int levels = 8;          // L
  int components = 3;      // C
  int feature_blocks = 8;  // N
  int kernel = 5;          // S
  double center_weight = 1.0;  // weight of the quantization MSE term
};

// Quantizes the latent fields with trainable centers and fits the three
// mixture networks to the rate of the quantized symbols. Centers start
// evenly spaced over the first batch's range.
TrainResult train_mog(std::span<const FeatureField> corpus, const MogConfig& mog,
                      const TrainConfig& config);

// Spreads the means head biases evenly over each channel's center span and
// sets the variance head biases to a standard deviation of span / C.
void init_mog_heads(Network& means, Network& variances,
                    const std::vector<std::vector<double>>& centers);

}  // namespace ccn

#endif  // CCN_TRAIN_H_
