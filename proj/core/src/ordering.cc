#include "ccn/ordering.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ccn {

std::string_view order_name(CodingOrder order) {
  switch (order) {
    case CodingOrder::kRaster2D:
      return "raster2d";
    case CodingOrder::kZigzag2D:
      return "zigzag2d";
    case CodingOrder::kZigzag3D:
      return "zigzag3d";
    case CodingOrder::kRaster3DByRow:
      return "raster3d-by-row";
  }
  return "unknown";
}

CodingOrder parse_order(std::string_view name) {
  for (CodingOrder order :
       {CodingOrder::kRaster2D, CodingOrder::kZigzag2D, CodingOrder::kZigzag3D,
        CodingOrder::kRaster3DByRow}) {
    if (order_name(order) == name) return order;
  }
  throw std::invalid_argument("unknown coding order '" + std::string(name) + "'");
}

bool is_2d(CodingOrder order) {
  return order == CodingOrder::kRaster2D || order == CodingOrder::kZigzag2D;
}

MaskSet::MaskSet(int planes, int kernel)
    : planes_(planes),
      kernel_(kernel),
      bits_(static_cast<size_t>(planes) * planes * kernel * kernel, 0) {}

size_t MaskSet::count_ones() const {
  return static_cast<size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

MaskSet build_mask(CodingOrder order, int kernel, int planes, LayerKind kind) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("mask kernel size must be odd");
  }
  if (planes < 1) throw std::invalid_argument("mask needs at least one plane");
  if (is_2d(order) && planes != 1) {
    throw std::invalid_argument("2D coding orders require a single plane");
  }
  const bool hidden = kind == LayerKind::kHidden;
  MaskSet mask(planes, kernel);
  const int h = kernel / 2;
  for (int r = 0; r < planes; ++r) {
    for (int s = 0; s < planes; ++s) {
      for (int mu = -h; mu <= h; ++mu) {
        for (int nu = -h; nu <= h; ++nu) {
          bool on = false;
          switch (order) {
            case CodingOrder::kZigzag2D:
            case CodingOrder::kZigzag3D:
              on = hidden ? s + mu + nu <= r : s + mu + nu < r;
              break;
            case CodingOrder::kRaster2D:
              on = mu < 0 || (mu == 0 && nu < 0) ||
                   (hidden && mu == 0 && nu == 0);
              break;
            case CodingOrder::kRaster3DByRow:
              on = s < r || (s == r && (hidden ? mu <= 0 : mu < 0));
              break;
          }
          mask.set(r, s, mu, nu, on);
        }
      }
    }
  }
  return mask;
}

GroupSchedule build_schedule(const BlockDims& dims, CodingOrder order) {
  if (dims.planes < 1 || dims.height < 1 || dims.width < 1) {
    throw std::invalid_argument("schedule dimensions must be positive");
  }
  if (is_2d(order) && dims.planes != 1) {
    throw std::invalid_argument("2D coding orders require a single plane");
  }
  GroupSchedule schedule;
  schedule.dims = dims;
  schedule.order = order;
  const int m = dims.planes;
  const int h = dims.height;
  const int w = dims.width;
  switch (order) {
    case CodingOrder::kZigzag2D:
    case CodingOrder::kZigzag3D: {
      const int groups = m + h + w - 2;
      schedule.groups.resize(groups);
      for (int k = 0; k < groups; ++k) {
        auto& group = schedule.groups[k];
        // Lines p + q = c from the longest-reaching one back toward the
        // deepest plane; each line sweeps p downward.
        for (int c = std::min(k, h - 1 + w - 1); c >= std::max(k - (m - 1), 0);
             --c) {
          const int r = k - c;
          for (int p = std::min(c, h - 1); p >= std::max(c - (w - 1), 0); --p) {
            group.push_back({r, p, c - p});
          }
        }
      }
      break;
    }
    case CodingOrder::kRaster2D:
      for (int p = 0; p < h; ++p) {
        for (int q = 0; q < w; ++q) schedule.groups.push_back({{0, p, q}});
      }
      break;
    case CodingOrder::kRaster3DByRow:
      for (int r = 0; r < m; ++r) {
        for (int p = 0; p < h; ++p) {
          std::vector<Coordinate> row;
          row.reserve(w);
          for (int q = 0; q < w; ++q) row.push_back({r, p, q});
          schedule.groups.push_back(std::move(row));
        }
      }
      break;
  }
  return schedule;
}

int group_of(const Coordinate& c, const BlockDims& dims, CodingOrder order) {
  switch (order) {
    case CodingOrder::kZigzag2D:
    case CodingOrder::kZigzag3D:
      return c.r + c.p + c.q;
    case CodingOrder::kRaster2D:
      return c.p * dims.width + c.q;
    case CodingOrder::kRaster3DByRow:
      return c.r * dims.height + c.p;
  }
  return 0;
}

std::function<bool(const Coordinate&)> context_of(const Coordinate& c,
                                                  const BlockDims& dims,
                                                  CodingOrder order) {
  const int k = group_of(c, dims, order);
  return [k, dims, order](const Coordinate& other) {
    return group_of(other, dims, order) < k;
  };
}

Rational Rational::make(int64_t num, int64_t den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Rational dop(int planes, int height, int width) {
  if (planes < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("dop dimensions must be positive");
  }
  return Rational::make(static_cast<int64_t>(planes) * height * width,
                        planes + height + width - 2);
}

Rational dop_light(int planes, int height, int width, int grid) {
  if (grid < 1) throw std::invalid_argument("patch grid must be at least 1");
  if (planes < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("dop dimensions must be positive");
  }
  // MHW / (M + H/R + W/R - 2) with the fraction cleared by R.
  const int64_t mhw = static_cast<int64_t>(planes) * height * width;
  return Rational::make(mhw * grid, static_cast<int64_t>(planes) * grid +
                                        height + width - 2LL * grid);
}

std::string render_mask(const MaskSet& mask) {
  std::ostringstream out;
  const int h = mask.radius();
  for (int r = 0; r < mask.planes(); ++r) {
    for (int s = 0; s < mask.planes(); ++s) {
      out << "r=" << r << " s=" << s << "\n";
      for (int mu = -h; mu <= h; ++mu) {
        for (int nu = -h; nu <= h; ++nu) {
          out << (nu == -h ? "" : " ") << (mask.at(r, s, mu, nu) ? '1' : '.');
        }
        out << "\n";
      }
    }
  }
  return out.str();
}

std::string render_schedule(const GroupSchedule& schedule) {
  const BlockDims& dims = schedule.dims;
  std::vector<int> group(dims.count(), -1);
  std::vector<int> rank(dims.count(), -1);
  for (size_t k = 0; k < schedule.groups.size(); ++k) {
    for (size_t i = 0; i < schedule.groups[k].size(); ++i) {
      const Coordinate& c = schedule.groups[k][i];
      const size_t idx =
          (static_cast<size_t>(c.r) * dims.height + c.p) * dims.width + c.q;
      group[idx] = static_cast<int>(k);
      rank[idx] = static_cast<int>(i);
    }
  }
  std::ostringstream out;
  for (int r = 0; r < dims.planes; ++r) {
    out << "plane " << r << " (group:rank)\n";
    for (int p = 0; p < dims.height; ++p) {
      for (int q = 0; q < dims.width; ++q) {
        const size_t idx =
            (static_cast<size_t>(r) * dims.height + p) * dims.width + q;
        out << (q == 0 ? "" : " ") << group[idx] << ":" << rank[idx];
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace ccn
