#ifndef CCN_SYNTHETIC_H_
#define CCN_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "ccn/codeblock.h"
#include "ccn/network.h"

namespace ccn {

// Piecewise-smooth grayscale images: a linear ramp background with a few
// flat rectangles and ellipses and mild additive noise.
std::vector<GrayImage> structured_images(int count, int height, int width,
                                         uint64_t seed);

// Spatially and inter-channel correlated Gaussian fields of shape
// (1, M, H, W): white noise smoothed by a 5x5 binomial kernel, mixed across
// channels, normalized to zero mean and unit variance per channel.
std::vector<FeatureField> correlated_fields(int count, int planes, int height,
                                            int width, uint64_t seed);

// I.i.d. standard normal fields of shape (1, M, H, W).
std::vector<FeatureField> gaussian_fields(int count, int planes, int height,
                                          int width, uint64_t seed);

// Same values with positions permuted at random within each channel across
// the whole corpus: identical marginals, no spatial structure.
std::vector<FeatureField> shuffle_fields(const std::vector<FeatureField>& fields,
                                         uint64_t seed);

}  // namespace ccn

#endif  // CCN_SYNTHETIC_H_
