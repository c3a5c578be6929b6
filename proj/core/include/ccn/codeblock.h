#ifndef CCN_CODEBLOCK_H_
#define CCN_CODEBLOCK_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccn {

// Raised when a file or bitstream is malformed or does not match the model
// it is being decoded with.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when training or inference produces a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 8-bit grayscale image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width);
  GrayImage(int height, int width, std::vector<uint8_t> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return pixels_.size(); }

  uint8_t at(int p, int q) const { return pixels_[index(p, q)]; }
  uint8_t& at(int p, int q) { return pixels_[index(p, q)]; }

  std::span<const uint8_t> pixels() const { return pixels_; }
  std::span<uint8_t> pixels() { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  size_t index(int p, int q) const {
    return static_cast<size_t>(p) * width_ + q;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<uint8_t> pixels_;
};

struct Coordinate {
  int r = 0;  // channel / bit-plane
  int p = 0;  // row
  int q = 0;  // column

  bool operator==(const Coordinate&) const = default;
};

struct BlockDims {
  int planes = 0;  // M
  int height = 0;  // H
  int width = 0;   // W

  size_t count() const {
    return static_cast<size_t>(planes) * height * width;
  }
  bool contains(const Coordinate& c) const {
    return c.r >= 0 && c.r < planes && c.p >= 0 && c.p < height && c.q >= 0 &&
           c.q < width;
  }
  bool operator==(const BlockDims&) const = default;
};

// Discrete M x H x W symbol tensor over an alphabet of L symbols, stored
// channel-major: index = (r * H + p) * W + q.
class CodeBlock3D {
 public:
  CodeBlock3D() = default;
  CodeBlock3D(BlockDims dims, int alphabet_size);
  CodeBlock3D(BlockDims dims, int alphabet_size, std::vector<uint16_t> symbols);

  const BlockDims& dims() const { return dims_; }
  int planes() const { return dims_.planes; }
  int height() const { return dims_.height; }
  int width() const { return dims_.width; }
  int alphabet_size() const { return alphabet_size_; }
  size_t size() const { return symbols_.size(); }

  size_t index(int r, int p, int q) const {
    return (static_cast<size_t>(r) * dims_.height + p) * dims_.width + q;
  }
  size_t index(const Coordinate& c) const { return index(c.r, c.p, c.q); }

  uint16_t at(int r, int p, int q) const { return symbols_[index(r, p, q)]; }
  uint16_t at(const Coordinate& c) const { return symbols_[index(c)]; }
  // Throws std::out_of_range if `symbol` is not below the alphabet size.
  void set(const Coordinate& c, uint16_t symbol);

  std::span<const uint16_t> symbols() const { return symbols_; }

  bool operator==(const CodeBlock3D&) const = default;

 private:
  BlockDims dims_;
  int alphabet_size_ = 0;
  std::vector<uint16_t> symbols_;
};

// Bit-plane decomposition: plane r holds bit (7 - r) of every pixel, so
// plane 0 is the most significant.
CodeBlock3D to_bitplanes(const GrayImage& img);

// Inverse of to_bitplanes. Requires M == 8 and L == 2.
GrayImage from_bitplanes(const CodeBlock3D& block);

// Tile rectangle inside a parent image.
struct PatchRect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
};

// Layout of an R x R tiling in raster tile order. Every tile has
// floor(H/R) x floor(W/R) pixels except the last row/column of tiles, which
// absorb the remainder. Throws std::invalid_argument if R < 1 or
// R > min(H, W).
std::vector<PatchRect> patch_layout(int height, int width, int grid);

std::vector<GrayImage> split_patches(const GrayImage& img, int grid);
GrayImage merge_patches(std::span<const GrayImage> patches, int height,
                        int width, int grid);

// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::string& path);
GrayImage parse_pgm(std::span<const uint8_t> bytes);
void write_pgm(const std::string& path, const GrayImage& img);
std::vector<uint8_t> serialize_pgm(const GrayImage& img);

}  // namespace ccn

#endif  // CCN_CODEBLOCK_H_
