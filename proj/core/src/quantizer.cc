#include "ccn/quantizer.h"

#include <cmath>
#include <stdexcept>

namespace ccn {
namespace {

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  return y > 30 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<double> materialize_centers(std::span<const double> raw) {
  std::vector<double> centers(raw.size());
  for (size_t l = 0; l < raw.size(); ++l) {
    centers[l] = l == 0 ? raw[0] : centers[l - 1] + softplus(raw[l]);
  }
  return centers;
}

std::vector<double> centers_backward(std::span<const double> raw,
                                     std::span<const double> grad_centers) {
  // omega_l depends on a_m (m <= l), so dL/da_m sums dL/domega_l over l >= m.
  std::vector<double> grad(raw.size(), 0.0);
  double suffix = 0.0;
  for (size_t l = raw.size(); l-- > 0;) {
    suffix += grad_centers[l];
    grad[l] = l == 0 ? suffix : suffix * sigmoid(raw[l]);
  }
  return grad;
}

QuantizerCenters::QuantizerCenters(int planes, int levels)
    : levels_(levels), raw_(planes, std::vector<double>(levels, 0.0)) {
  if (planes < 1 || levels < 1) {
    throw std::invalid_argument("quantizer needs at least one plane and level");
  }
}

QuantizerCenters QuantizerCenters::uniform(std::span<const double> lo,
                                           std::span<const double> hi,
                                           int levels) {
  if (lo.size() != hi.size()) throw std::invalid_argument("range size mismatch");
  QuantizerCenters q(static_cast<int>(lo.size()), levels);
  for (size_t r = 0; r < lo.size(); ++r) {
    double a = lo[r];
    double b = hi[r];
    if (!(b > a)) {
      a -= 1.0;
      b = a + 2.0;
    }
    q.raw_[r][0] = levels == 1 ? 0.5 * (a + b) : a;
    if (levels > 1) {
      const double step = (b - a) / (levels - 1);
      for (int l = 1; l < levels; ++l) q.raw_[r][l] = inverse_softplus(step);
    }
  }
  return q;
}

std::vector<std::vector<double>> QuantizerCenters::centers() const {
  std::vector<std::vector<double>> out;
  out.reserve(raw_.size());
  for (const auto& raw : raw_) out.push_back(materialize_centers(raw));
  return out;
}

QuantizedBlock quantize(const FeatureField& z,
                        const std::vector<std::vector<double>>& centers) {
  const FieldShape& s = z.shape();
  if (s.blocks != 1 || static_cast<int>(centers.size()) != s.planes) {
    throw std::invalid_argument("quantizer input shape mismatch");
  }
  const int levels = static_cast<int>(centers.front().size());
  std::vector<uint16_t> indices(static_cast<size_t>(s.planes) * s.plane_size());
  FeatureField values(s);
  for (int r = 0; r < s.planes; ++r) {
    const auto& omega = centers[r];
    const auto zr = z.plane(0, r);
    auto vr = values.plane(0, r);
    for (size_t k = 0; k < zr.size(); ++k) {
      const double x = zr[k];
      if (!std::isfinite(x)) throw NumericError("non-finite value in quantizer input");
      int best = 0;
      double best_dist = (x - omega[0]) * (x - omega[0]);
      for (int l = 1; l < levels; ++l) {
        const double d = (x - omega[l]) * (x - omega[l]);
        if (d < best_dist) {
          best = l;
          best_dist = d;
        }
      }
      indices[r * zr.size() + k] = static_cast<uint16_t>(best);
      vr[k] = omega[best];
    }
  }
  return {CodeBlock3D({s.planes, s.height, s.width}, levels, std::move(indices)),
          std::move(values)};
}

FeatureField straight_through_grad(const FeatureField& grad_wrt_y) {
  return grad_wrt_y;
}

CenterLoss center_loss_and_grads(const FeatureField& z,
                                 const CodeBlock3D& assignments,
                                 const QuantizerCenters& centers) {
  const FieldShape& s = z.shape();
  if (s.blocks != 1 || s.planes != assignments.planes() ||
      s.height != assignments.height() || s.width != assignments.width() ||
      centers.planes() != s.planes ||
      centers.levels() != assignments.alphabet_size()) {
    throw std::invalid_argument("center loss shape mismatch");
  }
  const auto omega = centers.centers();
  const double n = static_cast<double>(s.planes) * s.plane_size();
  CenterLoss loss;
  loss.raw_grads.reserve(s.planes);
  for (int r = 0; r < s.planes; ++r) {
    std::vector<double> grad_centers(centers.levels(), 0.0);
    const auto zr = z.plane(0, r);
    for (size_t k = 0; k < zr.size(); ++k) {
      const int l = assignments.symbols()[r * zr.size() + k];
      const double e = zr[k] - omega[r][l];
      loss.mse += e * e / n;
      grad_centers[l] -= 2.0 * e / n;
    }
    loss.raw_grads.push_back(centers_backward(centers.raw(r), grad_centers));
  }
  return loss;
}

}  // namespace ccn
