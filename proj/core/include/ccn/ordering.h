#ifndef CCN_ORDERING_H_
#define CCN_ORDERING_H_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ccn/codeblock.h"

namespace ccn {

enum class CodingOrder : uint8_t {
  kRaster2D = 0,
  kZigzag2D = 1,
  kZigzag3D = 2,
  // Raster scan with code dividing by row: one group per (plane, row).
  kRaster3DByRow = 3,
};

std::string_view order_name(CodingOrder order);
// Accepts "raster2d", "zigzag2d", "zigzag3d", "raster3d-by-row".
CodingOrder parse_order(std::string_view name);
bool is_2d(CodingOrder order);

enum class LayerKind : uint8_t { kInput, kHidden };

// Translation-invariant binary mask over (out plane r, in plane s, mu, nu)
// with mu, nu in [-S/2, S/2]. mu offsets rows, nu offsets columns; the
// masked convolution reads input at (p + mu, q + nu).
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(int planes, int kernel);

  int planes() const { return planes_; }
  int kernel() const { return kernel_; }
  int radius() const { return kernel_ / 2; }

  bool at(int r, int s, int mu, int nu) const { return bits_[index(r, s, mu, nu)]; }
  void set(int r, int s, int mu, int nu, bool on) {
    bits_[index(r, s, mu, nu)] = on ? 1 : 0;
  }
  // Index of (r, s, mu, nu) in the dense (M, M, S, S) layout shared with
  // convolution weights.
  size_t index(int r, int s, int mu, int nu) const {
    return ((static_cast<size_t>(r) * planes_ + s) * kernel_ + (mu + radius())) *
               kernel_ +
           (nu + radius());
  }
  size_t size() const { return bits_.size(); }
  bool bit(size_t index) const { return bits_[index] != 0; }
  size_t count_ones() const;
  bool operator==(const MaskSet&) const = default;

 private:
  int planes_ = 0;
  int kernel_ = 0;
  std::vector<uint8_t> bits_;
};

// Throws std::invalid_argument on even kernel, planes < 1, or a 2D order with
// planes != 1.
MaskSet build_mask(CodingOrder order, int kernel, int planes, LayerKind kind);

// Ordered partition of a block into groups that decode in parallel.
struct GroupSchedule {
  BlockDims dims;
  CodingOrder order = CodingOrder::kZigzag3D;
  std::vector<std::vector<Coordinate>> groups;

  size_t group_count() const { return groups.size(); }
};

GroupSchedule build_schedule(const BlockDims& dims, CodingOrder order);

// Group that `c` belongs to under `order`.
int group_of(const Coordinate& c, const BlockDims& dims, CodingOrder order);

// Predicate "c' is in the partial context of c": everything in strictly
// earlier groups.
std::function<bool(const Coordinate&)> context_of(const Coordinate& c,
                                                  const BlockDims& dims,
                                                  CodingOrder order);

struct Rational {
  int64_t num = 0;
  int64_t den = 1;

  static Rational make(int64_t num, int64_t den);
  double value() const { return static_cast<double>(num) / den; }
  std::string str() const;
  bool operator==(const Rational&) const = default;
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den <
           static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) {
    return !(b < a);
  }
};

// Average group size M*H*W / (M + H + W - 2) of the zigzag schedule.
Rational dop(int planes, int height, int width);

// DOP when the image is split into R x R patches coded independently:
// M*H*W / (M + H/R + W/R - 2).
Rational dop_light(int planes, int height, int width, int grid);

// ASCII rendering of a mask, one S x S grid per (r, s) pair.
std::string render_mask(const MaskSet& mask);
// ASCII rendering of the group index of every coordinate, one grid per plane.
std::string render_schedule(const GroupSchedule& schedule);

}  // namespace ccn

#endif  // CCN_ORDERING_H_
