#include "ccn/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ccn {
namespace {

void check_dims(int count, int planes, int height, int width) {
  if (count < 0 || planes < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("invalid synthetic corpus dimensions");
  }
}

}  // namespace

std::vector<GrayImage> structured_images(int count, int height, int width,
                                         uint64_t seed) {
  check_dims(count, 1, height, width);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.5);
  std::vector<GrayImage> out;
  out.reserve(count);
  for (int n = 0; n < count; ++n) {
    std::vector<double> canvas(static_cast<size_t>(height) * width);
    const double base = 40.0 + 120.0 * unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    const double slope = 60.0 * unit(rng) / std::max(height, width);
    for (int p = 0; p < height; ++p) {
      for (int q = 0; q < width; ++q) {
        canvas[p * width + q] =
            base + slope * (std::cos(angle) * p + std::sin(angle) * q);
      }
    }
    const int shapes = 2 + static_cast<int>(unit(rng) * 4);
    for (int k = 0; k < shapes; ++k) {
      const double level = 255.0 * unit(rng);
      const double cy = height * unit(rng);
      const double cx = width * unit(rng);
      const double ry = 4.0 + 0.3 * height * unit(rng);
      const double rx = 4.0 + 0.3 * width * unit(rng);
      const bool ellipse = unit(rng) < 0.5;
      for (int p = 0; p < height; ++p) {
        for (int q = 0; q < width; ++q) {
          const double dy = (p - cy) / ry;
          const double dx = (q - cx) / rx;
          const bool inside = ellipse ? dy * dy + dx * dx <= 1.0
                                      : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
          if (inside) canvas[p * width + q] = level;
        }
      }
    }
    GrayImage img(height, width);
    auto px = img.pixels();
    for (size_t k = 0; k < canvas.size(); ++k) {
      px[k] = static_cast<uint8_t>(
          std::clamp(std::lround(canvas[k] + noise(rng)), 0L, 255L));
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<FeatureField> correlated_fields(int count, int planes, int height,
                                            int width, uint64_t seed) {
  check_dims(count, planes, height, width);
  static constexpr double kTaps[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<FeatureField> out;
  out.reserve(count);
  const int ph = height + 4;
  const int pw = width + 4;
  for (int n = 0; n < count; ++n) {
    FeatureField field({1, planes, height, width});
    std::vector<double> white(static_cast<size_t>(ph) * pw);
    std::vector<double> rows(static_cast<size_t>(ph) * width);
    for (int r = 0; r < planes; ++r) {
      for (double& v : white) v = gauss(rng);
      for (int p = 0; p < ph; ++p) {
        for (int q = 0; q < width; ++q) {
          double acc = 0.0;
          for (int k = 0; k < 5; ++k) acc += kTaps[k] * white[p * pw + q + k];
          rows[p * width + q] = acc;
        }
      }
      auto dst = field.plane(0, r);
      for (int p = 0; p < height; ++p) {
        for (int q = 0; q < width; ++q) {
          double acc = 0.0;
          for (int k = 0; k < 5; ++k) acc += kTaps[k] * rows[(p + k) * width + q];
          dst[p * width + q] = acc;
        }
      }
      if (r > 0) {
        const auto prev = field.plane(0, r - 1);
        for (size_t k = 0; k < dst.size(); ++k) dst[k] = 0.8 * prev[k] + 0.6 * dst[k];
      }
    }
    for (int r = 0; r < planes; ++r) {
      auto v = field.plane(0, r);
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = std::sqrt(var / static_cast<double>(v.size()));
      for (double& x : v) x = (x - mean) / sd;
    }
    out.push_back(std::move(field));
  }
  return out;
}

std::vector<FeatureField> gaussian_fields(int count, int planes, int height,
                                          int width, uint64_t seed) {
  check_dims(count, planes, height, width);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<FeatureField> out;
  out.reserve(count);
  for (int n = 0; n < count; ++n) {
    FeatureField field({1, planes, height, width});
    for (double& v : field.values()) v = gauss(rng);
    out.push_back(std::move(field));
  }
  return out;
}

std::vector<FeatureField> shuffle_fields(const std::vector<FeatureField>& fields,
                                         uint64_t seed) {
  if (fields.empty()) return {};
  const FieldShape shape = fields.front().shape();
  for (const auto& f : fields) {
    if (!(f.shape() == shape)) throw std::invalid_argument("fields differ in shape");
  }
  std::mt19937_64 rng(seed);
  std::vector<FeatureField> out = fields;
  std::vector<double> pool;
  for (int r = 0; r < shape.planes; ++r) {
    pool.clear();
    for (const auto& f : fields) {
      const auto v = f.plane(0, r);
      pool.insert(pool.end(), v.begin(), v.end());
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    size_t k = 0;
    for (auto& f : out) {
      for (double& v : f.plane(0, r)) v = pool[k++];
    }
  }
  return out;
}

}  // namespace ccn
