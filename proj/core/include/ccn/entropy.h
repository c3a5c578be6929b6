#ifndef CCN_ENTROPY_H_
#define CCN_ENTROPY_H_

#include <span>
#include <vector>

#include "ccn/codeblock.h"
#include "ccn/network.h"

namespace ccn {

// Smallest probability any symbol may carry, before coding and in losses.
inline constexpr double kProbFloor = 1.0 / 65536.0;

// Standard normal CDF and density.
double normal_cdf(double x);
double normal_pdf(double x);

// Code length in bits of a binary block under per-code Bernoulli means
// (a (1, M, H, W) field), each clamped to [kProbFloor, 1 - kProbFloor].
double bernoulli_nll(const CodeBlock3D& block, const FeatureField& means);

// d bernoulli_nll / d mean, same shape as `means`. Zero where the clamp is
// active.
FeatureField bernoulli_nll_grad(const CodeBlock3D& block,
                                const FeatureField& means);

// One code's mixture: `weights`, `means`, `variances` each hold C entries.
struct MogView {
  std::span<const double> weights;
  std::span<const double> means;
  std::span<const double> variances;
};

// Discretized mixture over the quantization bins of `centers`
// (nondecreasing). Bin l spans [(w_{l-1}+w_l)/2, (w_l+w_{l+1})/2] with
// infinite outer edges. The result is floored as
// P' = kProbFloor + (1 - L kProbFloor) P, so it sums to one and every entry
// is at least kProbFloor. Throws std::invalid_argument on non-monotone
// centers.
void mog_pmf(std::span<const double> centers, const MogView& mog,
             std::span<double> out);
std::vector<double> mog_pmf(std::span<const double> centers, const MogView& mog);

// Gradient of -log2 P'(symbol) with respect to the mixture parameters.
struct MogGrad {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;
};
double mog_symbol_bits(std::span<const double> centers, const MogView& mog,
                       int symbol, MogGrad* grad = nullptr);

// Categorical distributions, one row of L probabilities per code.
class PmfTable {
 public:
  PmfTable() = default;
  PmfTable(size_t codes, int levels)
      : levels_(levels), probs_(codes * levels, 0.0) {}

  int levels() const { return levels_; }
  size_t codes() const { return levels_ ? probs_.size() / levels_ : 0; }
  std::span<double> row(size_t code) {
    return {probs_.data() + code * levels_, static_cast<size_t>(levels_)};
  }
  std::span<const double> row(size_t code) const {
    return {probs_.data() + code * levels_, static_cast<size_t>(levels_)};
  }

 private:
  int levels_ = 0;
  std::vector<double> probs_;
};

// Head outputs of the three MoG networks, each a (C, M, H, W) field.
struct MogField {
  FeatureField weights;
  FeatureField means;
  FeatureField variances;

  int components() const { return weights.shape().blocks; }
  // Gathers the C parameters of code (r, p, q) into the scratch buffers.
  MogView code(int r, int p, int q, std::vector<double>& scratch) const;
};

// Per-code pmf rows in block index order (r, p, q).
PmfTable mog_pmf_table(const MogField& field,
                       const std::vector<std::vector<double>>& centers);

// -sum log2 P(observed symbol).
double mog_nll(const CodeBlock3D& block, const PmfTable& pmf);

// Bits of `block` under `field`, with gradients with respect to the three
// head outputs when `grads` is non-null.
double mog_nll_with_grads(const CodeBlock3D& block, const MogField& field,
                          const std::vector<std::vector<double>>& centers,
                          MogField* grads);

}  // namespace ccn

#endif  // CCN_ENTROPY_H_
