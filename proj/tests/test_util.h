#ifndef CCN_TEST_UTIL_H_
#define CCN_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <random>

#include "ccn/codeblock.h"
#include "ccn/network.h"

namespace ccn::testing {

// Every unmasked weight, every bias and every slope drawn at random, so no
// layer is degenerate.
inline void randomize(Network& net, uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  const int h = net.spec().kernel / 2;
  for (int t = 0; t < net.spec().depth; ++t) {
    LayerParams& layer = net.layers()[t];
    const MaskSet& mask = net.mask(t);
    for (int i = 0; i < layer.out_blocks; ++i)
      for (int j = 0; j < layer.in_blocks; ++j)
        for (int r = 0; r < layer.planes; ++r)
          for (int s = 0; s < layer.planes; ++s)
            for (int mu = -h; mu <= h; ++mu)
              for (int nu = -h; nu <= h; ++nu)
                if (mask.at(r, s, mu, nu))
                  layer.weights[layer.weight_index(i, j, r, s, mu, nu)] = u(rng);
    for (double& b : layer.biases) b = u(rng);
    layer.prelu_slope = 0.25 + 0.5 * u(rng);
  }
}

inline CodeBlock3D random_block(const BlockDims& dims, int levels, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<uint16_t> symbols(dims.count());
  for (auto& s : symbols) s = static_cast<uint16_t>(rng() % levels);
  return CodeBlock3D(dims, levels, std::move(symbols));
}

inline GrayImage random_image(int h, int w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  GrayImage img(h, w);
  for (auto& px : img.pixels()) px = static_cast<uint8_t>(rng() & 0xFF);
  return img;
}

inline FeatureField random_field(const FieldShape& shape, uint64_t seed,
                                 double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  FeatureField f(shape);
  for (double& v : f.values()) v = u(rng);
  return f;
}

// Relative error with a floor on the denominator so that near-zero
// gradients are compared on an absolute scale.
inline double rel_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double dot(const FeatureField& a, const FeatureField& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += a.values()[k] * b.values()[k];
  return s;
}

}  // namespace ccn::testing

#endif  // CCN_TEST_UTIL_H_
