#ifndef CCN_QUANTIZER_H_
#define CCN_QUANTIZER_H_

#include <span>
#include <vector>

#include "ccn/codeblock.h"
#include "ccn/network.h"

namespace ccn {

// omega_0 = a_0, omega_l = omega_{l-1} + softplus(a_l).
std::vector<double> materialize_centers(std::span<const double> raw);

// d omega_l / d a_m chained: returns dL/da given dL/domega.
std::vector<double> centers_backward(std::span<const double> raw,
                                     std::span<const double> grad_centers);

// Per-channel trainable centers held as unconstrained raw parameters.
class QuantizerCenters {
 public:
  QuantizerCenters() = default;
  QuantizerCenters(int planes, int levels);

  // Evenly spaced centers spanning [lo[r], hi[r]]; a degenerate range is
  // widened to +-1 around its value.
  static QuantizerCenters uniform(std::span<const double> lo,
                                  std::span<const double> hi, int levels);

  int planes() const { return static_cast<int>(raw_.size()); }
  int levels() const { return levels_; }

  std::vector<double>& raw(int r) { return raw_[r]; }
  const std::vector<double>& raw(int r) const { return raw_[r]; }

  std::vector<std::vector<double>> centers() const;

 private:
  int levels_ = 0;
  std::vector<std::vector<double>> raw_;
};

struct QuantizedBlock {
  CodeBlock3D indices;
  FeatureField values;  // (1, M, H, W) dequantized centers
};

// Nearest center per code, ties to the lower index. `z` is a (1, M, H, W)
// field. Throws NumericError on non-finite input.
QuantizedBlock quantize(const FeatureField& z,
                        const std::vector<std::vector<double>>& centers);

// Backward pass of hard quantization: identity.
FeatureField straight_through_grad(const FeatureField& grad_wrt_y);

struct CenterLoss {
  double mse = 0.0;
  std::vector<std::vector<double>> raw_grads;  // per channel, per level
};

// Mean squared quantization error with assignments held fixed, and its
// gradient with respect to the raw center parameters.
CenterLoss center_loss_and_grads(const FeatureField& z,
                                 const CodeBlock3D& assignments,
                                 const QuantizerCenters& centers);

}  // namespace ccn

#endif  // CCN_QUANTIZER_H_
