#include "ccn/codeblock.h"

#include <string>
#include <utility>

namespace ccn {

GrayImage::GrayImage(int height, int width)
    : GrayImage(height, width,
                std::vector<uint8_t>(static_cast<size_t>(height > 0 ? height : 0) *
                                     (width > 0 ? width : 0))) {}

GrayImage::GrayImage(int height, int width, std::vector<uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (pixels_.size() != static_cast<size_t>(height) * width) {
    throw std::invalid_argument("pixel count does not match image dimensions");
  }
}

CodeBlock3D::CodeBlock3D(BlockDims dims, int alphabet_size)
    : CodeBlock3D(dims, alphabet_size,
                  std::vector<uint16_t>(dims.planes > 0 && dims.height > 0 &&
                                                dims.width > 0
                                            ? dims.count()
                                            : 0)) {}

CodeBlock3D::CodeBlock3D(BlockDims dims, int alphabet_size,
                         std::vector<uint16_t> symbols)
    : dims_(dims), alphabet_size_(alphabet_size), symbols_(std::move(symbols)) {
  if (dims.planes < 1 || dims.height < 1 || dims.width < 1) {
    throw std::invalid_argument("code block dimensions must be positive");
  }
  if (alphabet_size < 1 || alphabet_size > 65536) {
    throw std::invalid_argument("alphabet size out of range");
  }
  if (symbols_.size() != dims.count()) {
    throw std::invalid_argument("symbol count does not match block dimensions");
  }
  for (uint16_t s : symbols_) {
    if (s >= alphabet_size) {
      throw std::invalid_argument("symbol outside alphabet");
    }
  }
}

void CodeBlock3D::set(const Coordinate& c, uint16_t symbol) {
  if (symbol >= alphabet_size_) {
    throw std::out_of_range("symbol outside alphabet");
  }
  symbols_[index(c)] = symbol;
}

CodeBlock3D to_bitplanes(const GrayImage& img) {
  const int h = img.height();
  const int w = img.width();
  std::vector<uint16_t> symbols(static_cast<size_t>(8) * h * w);
  const size_t plane = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < plane; ++i) {
    const unsigned x = img.pixels()[i];
    for (int r = 0; r < 8; ++r) {
      symbols[r * plane + i] = static_cast<uint16_t>((x >> (7 - r)) & 1u);
    }
  }
  return CodeBlock3D({8, h, w}, 2, std::move(symbols));
}

GrayImage from_bitplanes(const CodeBlock3D& block) {
  if (block.planes() != 8 || block.alphabet_size() != 2) {
    throw std::invalid_argument("bit-plane block must have M=8 and L=2");
  }
  const int h = block.height();
  const int w = block.width();
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<uint8_t> pixels(plane, 0);
  for (size_t i = 0; i < plane; ++i) {
    unsigned x = 0;
    for (int r = 0; r < 8; ++r) {
      x |= static_cast<unsigned>(block.symbols()[r * plane + i]) << (7 - r);
    }
    pixels[i] = static_cast<uint8_t>(x);
  }
  return GrayImage(h, w, std::move(pixels));
}

std::vector<PatchRect> patch_layout(int height, int width, int grid) {
  if (grid < 1) {
    throw std::invalid_argument("patch grid must be at least 1");
  }
  if (grid > height || grid > width) {
    throw std::invalid_argument("patch grid " + std::to_string(grid) +
                                " exceeds image size");
  }
  const int tile_h = height / grid;
  const int tile_w = width / grid;
  std::vector<PatchRect> rects;
  rects.reserve(static_cast<size_t>(grid) * grid);
  for (int tr = 0; tr < grid; ++tr) {
    for (int tc = 0; tc < grid; ++tc) {
      PatchRect rect;
      rect.row = tr * tile_h;
      rect.col = tc * tile_w;
      rect.height = tr + 1 == grid ? height - rect.row : tile_h;
      rect.width = tc + 1 == grid ? width - rect.col : tile_w;
      rects.push_back(rect);
    }
  }
  return rects;
}

std::vector<GrayImage> split_patches(const GrayImage& img, int grid) {
  std::vector<GrayImage> patches;
  for (const PatchRect& rect : patch_layout(img.height(), img.width(), grid)) {
    GrayImage tile(rect.height, rect.width);
    for (int p = 0; p < rect.height; ++p) {
      for (int q = 0; q < rect.width; ++q) {
        tile.at(p, q) = img.at(rect.row + p, rect.col + q);
      }
    }
    patches.push_back(std::move(tile));
  }
  return patches;
}

GrayImage merge_patches(std::span<const GrayImage> patches, int height,
                        int width, int grid) {
  const std::vector<PatchRect> rects = patch_layout(height, width, grid);
  if (patches.size() != rects.size()) {
    throw std::invalid_argument("patch count does not match grid");
  }
  GrayImage img(height, width);
  for (size_t k = 0; k < rects.size(); ++k) {
    const PatchRect& rect = rects[k];
    const GrayImage& tile = patches[k];
    if (tile.height() != rect.height || tile.width() != rect.width) {
      throw std::invalid_argument("patch size does not match layout");
    }
    for (int p = 0; p < rect.height; ++p) {
      for (int q = 0; q < rect.width; ++q) {
        img.at(rect.row + p, rect.col + q) = tile.at(p, q);
      }
    }
  }
  return img;
}

}  // namespace ccn
