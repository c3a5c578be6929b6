#include "ccn/entropy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ccn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_bernoulli(const CodeBlock3D& block, const FeatureField& means) {
  const FieldShape& s = means.shape();
  if (block.alphabet_size() != 2 || s.blocks != 1 || s.planes != block.planes() ||
      s.height != block.height() || s.width != block.width()) {
    throw std::invalid_argument("Bernoulli field does not match block");
  }
}

// Upper tail 1 - Phi(x).
double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Phi(b) - Phi(a) for a <= b, evaluated on the side with less cancellation.
double normal_mass(double a, double b) {
  if (a >= 0) return normal_sf(a) - normal_sf(b);
  return normal_cdf(b) - normal_cdf(a);
}

// phi(u) * u, zero at the infinite bin edges.
double pdf_times(double u) { return std::isfinite(u) ? normal_pdf(u) * u : 0.0; }

void check_centers(std::span<const double> centers) {
  if (centers.empty()) throw std::invalid_argument("no quantization centers");
  for (size_t l = 1; l < centers.size(); ++l) {
    if (!(centers[l - 1] <= centers[l])) {
      throw std::invalid_argument("quantization centers must be nondecreasing");
    }
  }
}

double lower_edge(std::span<const double> centers, size_t l) {
  return l == 0 ? -kInf : 0.5 * (centers[l - 1] + centers[l]);
}
double upper_edge(std::span<const double> centers, size_t l) {
  return l + 1 == centers.size() ? kInf : 0.5 * (centers[l] + centers[l + 1]);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double bernoulli_nll(const CodeBlock3D& block, const FeatureField& means) {
  check_bernoulli(block, means);
  const auto v = means.values();
  const auto y = block.symbols();
  double bits = 0.0;
  for (size_t k = 0; k < y.size(); ++k) {
    const double p = std::clamp(v[k], kProbFloor, 1.0 - kProbFloor);
    bits -= y[k] ? std::log2(p) : std::log2(1.0 - p);
  }
  return bits;
}

FeatureField bernoulli_nll_grad(const CodeBlock3D& block,
                                const FeatureField& means) {
  check_bernoulli(block, means);
  FeatureField grad(means.shape());
  const auto v = means.values();
  const auto y = block.symbols();
  auto g = grad.values();
  for (size_t k = 0; k < y.size(); ++k) {
    if (v[k] < kProbFloor || v[k] > 1.0 - kProbFloor) continue;
    g[k] = y[k] ? -1.0 / (v[k] * std::numbers::ln2)
                : 1.0 / ((1.0 - v[k]) * std::numbers::ln2);
  }
  return grad;
}

void mog_pmf(std::span<const double> centers, const MogView& mog,
             std::span<double> out) {
  check_centers(centers);
  if (out.size() != centers.size()) {
    throw std::invalid_argument("pmf row size mismatch");
  }
  const size_t levels = centers.size();
  const size_t components = mog.weights.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (size_t i = 0; i < components; ++i) {
    const double sigma = std::sqrt(mog.variances[i]);
    for (size_t l = 0; l < levels; ++l) {
      const double a = (lower_edge(centers, l) - mog.means[i]) / sigma;
      const double b = (upper_edge(centers, l) - mog.means[i]) / sigma;
      out[l] += mog.weights[i] * normal_mass(a, b);
    }
  }
  const double scale = 1.0 - static_cast<double>(levels) * kProbFloor;
  for (double& p : out) p = kProbFloor + scale * p;
}

std::vector<double> mog_pmf(std::span<const double> centers, const MogView& mog) {
  std::vector<double> out(centers.size());
  mog_pmf(centers, mog, out);
  return out;
}

double mog_symbol_bits(std::span<const double> centers, const MogView& mog,
                       int symbol, MogGrad* grad) {
  check_centers(centers);
  const size_t levels = centers.size();
  if (symbol < 0 || static_cast<size_t>(symbol) >= levels) {
    throw std::invalid_argument("symbol outside alphabet");
  }
  const size_t components = mog.weights.size();
  const double lo = lower_edge(centers, symbol);
  const double hi = upper_edge(centers, symbol);
  const double scale = 1.0 - static_cast<double>(levels) * kProbFloor;

  double mass = 0.0;
  for (size_t i = 0; i < components; ++i) {
    const double sigma = std::sqrt(mog.variances[i]);
    mass += mog.weights[i] * normal_mass((lo - mog.means[i]) / sigma,
                                         (hi - mog.means[i]) / sigma);
  }
  const double prob = kProbFloor + scale * mass;
  if (grad) {
    grad->weights.assign(components, 0.0);
    grad->means.assign(components, 0.0);
    grad->variances.assign(components, 0.0);
    // d(-log2 P') / d mass
    const double outer = -scale / (prob * std::numbers::ln2);
    for (size_t i = 0; i < components; ++i) {
      const double sigma = std::sqrt(mog.variances[i]);
      const double a = (lo - mog.means[i]) / sigma;
      const double b = (hi - mog.means[i]) / sigma;
      const double pa = std::isfinite(a) ? normal_pdf(a) : 0.0;
      const double pb = std::isfinite(b) ? normal_pdf(b) : 0.0;
      grad->weights[i] = outer * normal_mass(a, b);
      grad->means[i] = outer * mog.weights[i] * (pa - pb) / sigma;
      grad->variances[i] = outer * mog.weights[i] *
                           (pdf_times(a) - pdf_times(b)) / (2.0 * mog.variances[i]);
    }
  }
  return -std::log2(prob);
}

MogView MogField::code(int r, int p, int q, std::vector<double>& scratch) const {
  const int c = components();
  scratch.resize(3 * static_cast<size_t>(c));
  for (int i = 0; i < c; ++i) {
    scratch[i] = weights.at(i, r, p, q);
    scratch[c + i] = means.at(i, r, p, q);
    scratch[2 * c + i] = variances.at(i, r, p, q);
  }
  const std::span<const double> all(scratch);
  return {all.subspan(0, c), all.subspan(c, c), all.subspan(2 * c, c)};
}

PmfTable mog_pmf_table(const MogField& field,
                       const std::vector<std::vector<double>>& centers) {
  const FieldShape& s = field.weights.shape();
  if (static_cast<int>(centers.size()) != s.planes) {
    throw std::invalid_argument("centers do not match field planes");
  }
  const int levels = static_cast<int>(centers.front().size());
  PmfTable table(static_cast<size_t>(s.planes) * s.height * s.width, levels);
  std::vector<double> scratch;
  size_t code = 0;
  for (int r = 0; r < s.planes; ++r) {
    for (int p = 0; p < s.height; ++p) {
      for (int q = 0; q < s.width; ++q, ++code) {
        mog_pmf(centers[r], field.code(r, p, q, scratch), table.row(code));
      }
    }
  }
  return table;
}

double mog_nll(const CodeBlock3D& block, const PmfTable& pmf) {
  if (pmf.codes() != block.size() || pmf.levels() != block.alphabet_size()) {
    throw std::invalid_argument("pmf table does not match block");
  }
  double bits = 0.0;
  const auto y = block.symbols();
  for (size_t k = 0; k < y.size(); ++k) bits -= std::log2(pmf.row(k)[y[k]]);
  return bits;
}

double mog_nll_with_grads(const CodeBlock3D& block, const MogField& field,
                          const std::vector<std::vector<double>>& centers,
                          MogField* grads) {
  const FieldShape& s = field.weights.shape();
  if (s.planes != block.planes() || s.height != block.height() ||
      s.width != block.width() || field.means.shape() != s ||
      field.variances.shape() != s) {
    throw std::invalid_argument("MoG field does not match block");
  }
  if (grads) {
    grads->weights = FeatureField(s);
    grads->means = FeatureField(s);
    grads->variances = FeatureField(s);
  }
  double bits = 0.0;
  std::vector<double> scratch;
  MogGrad grad;
  for (int r = 0; r < s.planes; ++r) {
    for (int p = 0; p < s.height; ++p) {
      for (int q = 0; q < s.width; ++q) {
        const MogView view = field.code(r, p, q, scratch);
        bits += mog_symbol_bits(centers[r], view, block.at(r, p, q),
                                grads ? &grad : nullptr);
        if (!grads) continue;
        for (int i = 0; i < s.blocks; ++i) {
          grads->weights.at(i, r, p, q) = grad.weights[i];
          grads->means.at(i, r, p, q) = grad.means[i];
          grads->variances.at(i, r, p, q) = grad.variances[i];
        }
      }
    }
  }
  return bits;
}

}  // namespace ccn
