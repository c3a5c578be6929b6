#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "ccn/codeblock.h"

namespace ccn {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then parses a decimal integer.
  long next_int() {
    skip_space();
    long value = 0;
    int digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1L << 30)) throw FormatError("PGM header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError("malformed PGM header");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("malformed PGM header");
    }
    ++pos_;
  }

  size_t pos() const { return pos_; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 2;
};

}  // namespace

GrayImage parse_pgm(std::span<const uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("not a binary PGM (P5) file");
  }
  HeaderReader header(bytes);
  const long width = header.next_int();
  const long height = header.next_int();
  const long maxval = header.next_int();
  if (maxval != 255) {
    throw FormatError("unsupported PGM maxval " + std::to_string(maxval));
  }
  if (width < 1 || height < 1) throw FormatError("empty PGM image");
  header.single_space();
  const size_t count = static_cast<size_t>(width) * height;
  if (bytes.size() - header.pos() < count) {
    throw FormatError("truncated PGM raster");
  }
  const auto* first = bytes.data() + header.pos();
  return GrayImage(static_cast<int>(height), static_cast<int>(width),
                   std::vector<uint8_t>(first, first + count));
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parse_pgm(bytes);
}

std::vector<uint8_t> serialize_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  const std::vector<uint8_t> bytes = serialize_pgm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace ccn
