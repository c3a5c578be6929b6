#include "ccn/eval.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "ccn/codec.h"

namespace ccn {
namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace

Rational degree_of_parallelism(const BlockDims& dims, CodingOrder order, int grid) {
  if (order == CodingOrder::kZigzag3D || order == CodingOrder::kZigzag2D) {
    return grid == 1 ? dop(dims.planes, dims.height, dims.width)
                     : dop_light(dims.planes, dims.height, dims.width, grid);
  }
  // Patches decode side by side, so the groups of all patches merge.
  const auto layout = patch_layout(dims.height, dims.width, grid);
  const BlockDims patch{dims.planes, layout.front().height, layout.front().width};
  const auto groups = static_cast<int64_t>(build_schedule(patch, order).group_count());
  return Rational::make(static_cast<int64_t>(dims.count()), groups);
}

EvalReport evaluate_lossless(std::span<const GrayImage> corpus, const Model& model,
                             int grid) {
  EvalReport report;
  report.grid = grid;
  double estimated_bits = 0.0;
  double actual_bits = 0.0;
  double pixels = 0.0;
  for (const GrayImage& img : corpus) {
    for (const GrayImage& patch : split_patches(img, grid)) {
      estimated_bits += estimate_bits(to_bitplanes(patch), model);
    }
    const auto t0 = Clock::now();
    const std::vector<uint8_t> bytes =
        serialize_payload(encode_lossless(img, model, grid));
    const auto t1 = Clock::now();
    const GrayImage back = decode_lossless(parse_payload(bytes), model);
    const auto t2 = Clock::now();
    report.encode_seconds += seconds(t0, t1);
    report.decode_seconds += seconds(t1, t2);
    if (!(back == img)) ++report.mismatches;
    actual_bits += 8.0 * static_cast<double>(bytes.size());
    pixels += static_cast<double>(img.size());
    if (report.items++ == 0) {
      report.dop = degree_of_parallelism({8, img.height(), img.width()},
                                         model.spec().order, grid);
    }
  }
  if (pixels > 0) {
    report.estimated_bpp = estimated_bits / pixels;
    report.actual_bpp = actual_bits / pixels;
  }
  return report;
}

EvalReport evaluate_mog(std::span<const CodeBlock3D> corpus, const Model& model) {
  EvalReport report;
  double estimated_bits = 0.0;
  double actual_bits = 0.0;
  double codes = 0.0;
  for (const CodeBlock3D& block : corpus) {
    estimated_bits += estimate_bits(block, model);
    const auto t0 = Clock::now();
    const std::vector<uint8_t> bytes = serialize_payload(encode_mog(block, model));
    const auto t1 = Clock::now();
    const CodeBlock3D back = decode_mog(parse_payload(bytes), model);
    const auto t2 = Clock::now();
    report.encode_seconds += seconds(t0, t1);
    report.decode_seconds += seconds(t1, t2);
    if (!(back == block)) ++report.mismatches;
    actual_bits += 8.0 * static_cast<double>(bytes.size());
    codes += static_cast<double>(block.size());
    if (report.items++ == 0) {
      report.dop = degree_of_parallelism(block.dims(), model.spec().order);
    }
  }
  if (codes > 0) {
    report.estimated_bpp = estimated_bits / codes;
    report.actual_bpp = actual_bits / codes;
  }
  return report;
}

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "items:          " << r.items << "\n"
      << "estimated bpp:  " << r.estimated_bpp << "\n"
      << "actual bpp:     " << r.actual_bpp << "\n"
      << "encode time:    " << r.encode_seconds << " s\n"
      << "decode time:    " << r.decode_seconds << " s\n"
      << "DOP:            " << r.dop.str() << " (" << r.dop.value() << ")\n"
      << "patch grid:     " << r.grid << "\n"
      << "mismatches:     " << r.mismatches << "\n";
  return out.str();
}

std::string report_key_values(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "items=" << r.items << "\n"
      << "estimated_bpp=" << r.estimated_bpp << "\n"
      << "actual_bpp=" << r.actual_bpp << "\n"
      << "encode_seconds=" << r.encode_seconds << "\n"
      << "decode_seconds=" << r.decode_seconds << "\n"
      << "dop=" << r.dop.str() << "\n"
      << "dop_value=" << r.dop.value() << "\n"
      << "grid=" << r.grid << "\n"
      << "mismatches=" << r.mismatches << "\n";
  return out.str();
}

double bitplane_entropy(std::span<const GrayImage> corpus) {
  double ones[8] = {};
  double total = 0.0;
  for (const GrayImage& img : corpus) {
    for (uint8_t px : img.pixels()) {
      for (int r = 0; r < 8; ++r) ones[r] += (px >> (7 - r)) & 1;
    }
    total += static_cast<double>(img.size());
  }
  if (total == 0) return 0.0;
  double bits = 0.0;
  for (double n : ones) bits += binary_entropy(n / total);
  return bits;
}

std::vector<GrayImage> load_pgm_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<GrayImage> images;
  for (const auto& p : paths) images.push_back(read_pgm(p.string()));
  return images;
}

}  // namespace ccn
