#include <gtest/gtest.h>

#include <cstdio>
#include <random>
#include <string>

#include "ccn/codeblock.h"

namespace ccn {
namespace {

std::vector<int> planes_at(const CodeBlock3D& b, int p, int q) {
  std::vector<int> bits;
  for (int r = 0; r < b.planes(); ++r) bits.push_back(b.at(r, p, q));
  return bits;
}

GrayImage random_image(int h, int w, uint64_t seed) {
  std::mt19937_64 rng(seed);
  GrayImage img(h, w);
  for (auto& px : img.pixels()) px = static_cast<uint8_t>(rng() & 0xFF);
  return img;
}

TEST(Bitplanes, Examples) {
  GrayImage img(1, 3, {181, 0, 255});
  const CodeBlock3D b = to_bitplanes(img);
  EXPECT_EQ(b.planes(), 8);
  EXPECT_EQ(b.alphabet_size(), 2);
  EXPECT_EQ(planes_at(b, 0, 0), (std::vector<int>{1, 0, 1, 1, 0, 1, 0, 1}));
  EXPECT_EQ(planes_at(b, 0, 1), (std::vector<int>(8, 0)));
  EXPECT_EQ(planes_at(b, 0, 2), (std::vector<int>(8, 1)));
}

TEST(Bitplanes, FromPlanesExample) {
  const std::vector<uint16_t> bits = {1, 0, 1, 1, 0, 1, 0, 1};
  EXPECT_EQ(from_bitplanes(CodeBlock3D({8, 1, 1}, 2, bits)).at(0, 0), 181);
  EXPECT_EQ(from_bitplanes(CodeBlock3D({8, 1, 1}, 2)).at(0, 0), 0);
}

TEST(Bitplanes, ExhaustiveIntensities) {
  GrayImage img(16, 16);
  for (int v = 0; v < 256; ++v) img.pixels()[v] = static_cast<uint8_t>(v);
  const CodeBlock3D b = to_bitplanes(img);
  for (int v = 0; v < 256; ++v) {
    int expect = v;
    for (int r = 7; r >= 0; --r, expect >>= 1) {
      EXPECT_EQ(b.at(r, v / 16, v % 16), expect & 1);
    }
  }
  EXPECT_EQ(from_bitplanes(b), img);
}

TEST(Bitplanes, RandomRoundtrip) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const GrayImage img = random_image(1 + seed % 7, 1 + (seed * 3) % 11, seed);
    EXPECT_EQ(from_bitplanes(to_bitplanes(img)), img);
  }
}

TEST(Bitplanes, RejectsWrongShape) {
  EXPECT_THROW(from_bitplanes(CodeBlock3D({7, 2, 2}, 2)), std::invalid_argument);
  EXPECT_THROW(from_bitplanes(CodeBlock3D({8, 2, 2}, 3)), std::invalid_argument);
}

TEST(CodeBlock, Validation) {
  EXPECT_THROW(CodeBlock3D({0, 1, 1}, 2), std::invalid_argument);
  EXPECT_THROW(CodeBlock3D({1, 1, 2}, 2, {0, 2}), std::invalid_argument);
  EXPECT_THROW(CodeBlock3D({1, 1, 2}, 2, {0}), std::invalid_argument);
  CodeBlock3D b({2, 2, 3}, 4);
  b.set({1, 1, 2}, 3);
  EXPECT_EQ(b.at(1, 1, 2), 3);
  EXPECT_EQ(b.index(1, 1, 2), 11u);  // channel-major
  EXPECT_THROW(b.set({0, 0, 0}, 4), std::out_of_range);
}

TEST(Patches, ExactDivision) {
  const auto tiles = split_patches(GrayImage(64, 64), 2);
  ASSERT_EQ(tiles.size(), 4u);
  for (const auto& t : tiles) {
    EXPECT_EQ(t.height(), 32);
    EXPECT_EQ(t.width(), 32);
  }
}

TEST(Patches, RemainderGoesToLastTile) {
  const auto layout = patch_layout(65, 64, 2);
  ASSERT_EQ(layout.size(), 4u);
  EXPECT_EQ(layout[0].height, 32);
  EXPECT_EQ(layout[2].height, 33);
  EXPECT_EQ(layout[2].row, 32);
  for (const auto& r : layout) EXPECT_EQ(r.width, 32);
}

TEST(Patches, IdentityAtR1) {
  const GrayImage img = random_image(9, 13, 4);
  const auto tiles = split_patches(img, 1);
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0], img);
}

TEST(Patches, PartitionAndMerge) {
  for (int h = 1; h <= 12; ++h) {
    for (int w = 1; w <= 12; ++w) {
      for (int grid = 1; grid <= std::min(h, w); ++grid) {
        std::vector<int> hits(h * w, 0);
        for (const auto& t : patch_layout(h, w, grid)) {
          for (int p = t.row; p < t.row + t.height; ++p) {
            for (int q = t.col; q < t.col + t.width; ++q) ++hits[p * w + q];
          }
        }
        for (int v : hits) ASSERT_EQ(v, 1);
        const GrayImage img = random_image(h, w, h * 100 + w);
        const auto tiles = split_patches(img, grid);
        EXPECT_EQ(merge_patches(tiles, h, w, grid), img);
      }
    }
  }
}

TEST(Patches, RejectsBadGrid) {
  EXPECT_THROW(split_patches(GrayImage(4, 8), 5), std::invalid_argument);
  EXPECT_THROW(split_patches(GrayImage(4, 8), 0), std::invalid_argument);
}

std::vector<uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

TEST(Pgm, ParseHeaderVariants) {
  const GrayImage a = parse_pgm(bytes_of("P5\n2 1\n255\n\x07\x09"));
  EXPECT_EQ(a.height(), 1);
  EXPECT_EQ(a.width(), 2);
  EXPECT_EQ(a.at(0, 1), 9);
  const GrayImage b = parse_pgm(bytes_of("P5 # comment\n 2\t1 255 \x07\x09"));
  EXPECT_EQ(a, b);
}

TEST(Pgm, Rejects) {
  EXPECT_THROW(parse_pgm(bytes_of("P2\n1 1\n255\n0")), FormatError);
  EXPECT_THROW(parse_pgm(bytes_of("P5\n1 1\n65535\n\x00\x00")), FormatError);
  EXPECT_THROW(parse_pgm(bytes_of("P5\n2 2\n255\n\x01")), FormatError);
  EXPECT_THROW(parse_pgm(bytes_of("P5\n2")), FormatError);
  EXPECT_THROW(parse_pgm(bytes_of("")), FormatError);
}

TEST(Pgm, SerializeRoundtrip) {
  const GrayImage img = random_image(7, 5, 99);
  EXPECT_EQ(parse_pgm(serialize_pgm(img)), img);
  const std::string path = ::testing::TempDir() + "/ccn_pgm_rt.pgm";
  write_pgm(path, img);
  EXPECT_EQ(read_pgm(path), img);
  std::remove(path.c_str());
}

TEST(Pgm, NaturalTestImagesLoad) {
  const GrayImage img = read_pgm(std::string(CCN_TEST_DATA_DIR) + "/camera.pgm");
  EXPECT_EQ(img.height(), 256);
  EXPECT_EQ(img.width(), 256);
}

}  // namespace
}  // namespace ccn
