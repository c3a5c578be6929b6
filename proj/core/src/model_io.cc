#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "ccn/codeblock.h"
#include "ccn/model.h"

namespace ccn {
namespace {

constexpr char kMagic[4] = {'C', 'C', 'N', 'M'};

class Writer {
 public:
  void bytes(const void* data, size_t n) {
    const auto* p = static_cast<const uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) {
    for (int k = 0; k < 2; ++k) out_.push_back(static_cast<uint8_t>(v >> (8 * k)));
  }
  void u32(uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<uint8_t>(v >> (8 * k)));
  }
  void f32(double v) { u32(std::bit_cast<uint32_t>(static_cast<float>(v))); }
  std::vector<uint8_t>& data() { return out_; }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}
  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated model file");
  }
  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = bytes_[pos_] | (bytes_[pos_ + 1] << 8);
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  size_t pos() const { return pos_; }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

uint32_t crc32_of(std::span<const uint8_t> bytes) {
  return static_cast<uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

HeadKind mog_head(size_t index) {
  static constexpr HeadKind kHeads[3] = {HeadKind::kMogWeights, HeadKind::kMogMeans,
                                         HeadKind::kMogVariances};
  return kHeads[index];
}

}  // namespace

Model Model::bernoulli(Network network) {
  if (network.spec().head != HeadKind::kBernoulli) {
    throw std::invalid_argument("Bernoulli model needs a Bernoulli head");
  }
  Model model;
  model.mode = ModelMode::kBernoulli;
  model.networks.push_back(std::move(network));
  return model;
}

Model Model::mog(Network weights, Network means, Network variances,
                 std::vector<std::vector<double>> centers) {
  const NetworkSpec& s = weights.spec();
  auto same_shape = [&](const NetworkSpec& other) {
    NetworkSpec a = s;
    a.head = other.head;
    return a == other;
  };
  if (s.head != HeadKind::kMogWeights || means.spec().head != HeadKind::kMogMeans ||
      variances.spec().head != HeadKind::kMogVariances ||
      !same_shape(means.spec()) || !same_shape(variances.spec())) {
    throw std::invalid_argument("MoG networks must share a shape with the three heads");
  }
  if (static_cast<int>(centers.size()) != s.planes || centers.front().empty()) {
    throw std::invalid_argument("centers must provide one row per plane");
  }
  for (const auto& row : centers) {
    if (row.size() != centers.front().size()) {
      throw std::invalid_argument("ragged center table");
    }
  }
  Model model;
  model.mode = ModelMode::kMog;
  model.networks.push_back(std::move(weights));
  model.networks.push_back(std::move(means));
  model.networks.push_back(std::move(variances));
  model.centers = std::move(centers);
  return model;
}

void Model::round_to_float() {
  for (Network& net : networks) net.round_to_float();
  for (auto& row : centers) {
    for (double& c : row) c = static_cast<double>(static_cast<float>(c));
  }
}

std::vector<uint8_t> serialize_model(const Model& model) {
  const NetworkSpec& spec = model.spec();
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kModelVersion);
  w.u8(static_cast<uint8_t>(model.mode));
  w.u32(spec.depth);
  w.u32(spec.kernel);
  w.u32(spec.feature_blocks);
  w.u32(spec.planes);
  w.u32(spec.out_blocks);
  w.u32(model.levels());
  w.u32(static_cast<uint32_t>(spec.order));
  w.u32(static_cast<uint32_t>(spec.residuals.size()));
  for (const ResidualLink& link : spec.residuals) {
    w.u32(link.from);
    w.u32(link.to);
  }
  for (const Network& net : model.networks) {
    for (const LayerParams& layer : net.layers()) {
      for (double v : layer.weights) w.f32(v);
      for (double v : layer.biases) w.f32(v);
    }
    for (const LayerParams& layer : net.layers()) w.f32(layer.prelu_slope);
  }
  if (model.mode == ModelMode::kMog) {
    for (const auto& row : model.centers) {
      for (double c : row) w.f32(c);
    }
  }
  w.u32(crc32_of(w.data()));
  return std::move(w.data());
}

Model parse_model(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  if (bytes.size() < 11) throw FormatError("truncated model file");
  Reader in(bytes.subspan(4));
  const uint16_t version = in.u16();
  if (version != kModelVersion) {
    throw FormatError("unsupported model version " + std::to_string(version));
  }
  const uint8_t mode_byte = in.u8();
  if (mode_byte > 1) throw FormatError("unknown model mode");
  const auto mode = static_cast<ModelMode>(mode_byte);

  NetworkSpec spec;
  spec.depth = static_cast<int>(in.u32());
  spec.kernel = static_cast<int>(in.u32());
  spec.feature_blocks = static_cast<int>(in.u32());
  spec.planes = static_cast<int>(in.u32());
  spec.out_blocks = static_cast<int>(in.u32());
  const uint32_t levels = in.u32();
  const uint32_t order = in.u32();
  if (order > 3) throw FormatError("unknown coding order");
  spec.order = static_cast<CodingOrder>(order);
  const uint32_t links = in.u32();
  if (links > 1024 || spec.depth > 4096 || spec.kernel > 255 ||
      spec.feature_blocks > 4096 || spec.planes > 4096 || spec.out_blocks > 4096 ||
      levels > 65536 || levels < 1) {
    throw FormatError("implausible model dimensions");
  }
  for (uint32_t k = 0; k < links; ++k) {
    ResidualLink link;
    link.from = static_cast<int>(in.u32());
    link.to = static_cast<int>(in.u32());
    spec.residuals.push_back(link);
  }

  // Checksum before allocating parameter storage from header sizes.
  if (bytes.size() < 8) throw FormatError("truncated model file");
  const size_t body_end = bytes.size() - 4;
  Reader tail(bytes.subspan(body_end));
  if (tail.u32() != crc32_of(bytes.first(body_end))) {
    throw FormatError("model checksum mismatch");
  }

  const size_t nets = mode == ModelMode::kMog ? 3 : 1;
  std::vector<Network> networks;
  try {
    for (size_t n = 0; n < nets; ++n) {
      NetworkSpec s = spec;
      s.head = mode == ModelMode::kMog ? mog_head(n) : HeadKind::kBernoulli;
      networks.emplace_back(s);
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid model spec: ") + e.what());
  }
  for (Network& net : networks) {
    for (int t = 0; t < spec.depth; ++t) {
      LayerParams& layer = net.layers()[t];
      in.need(4 * (layer.weights.size() + layer.biases.size()));
      for (double& v : layer.weights) v = in.f32();
      for (double& v : layer.biases) v = in.f32();
      const MaskSet& mask = net.mask(t);
      const int h = spec.kernel / 2;
      for (int i = 0; i < layer.out_blocks; ++i) {
        for (int j = 0; j < layer.in_blocks; ++j) {
          for (int r = 0; r < spec.planes; ++r) {
            for (int s = 0; s < spec.planes; ++s) {
              for (int mu = -h; mu <= h; ++mu) {
                for (int nu = -h; nu <= h; ++nu) {
                  if (!mask.at(r, s, mu, nu) &&
                      layer.weights[layer.weight_index(i, j, r, s, mu, nu)] != 0.0) {
                    throw FormatError("model has a nonzero masked weight");
                  }
                }
              }
            }
          }
        }
      }
    }
    for (LayerParams& layer : net.layers()) layer.prelu_slope = in.f32();
  }
  std::vector<std::vector<double>> centers;
  if (mode == ModelMode::kMog) {
    in.need(4ull * spec.planes * levels);
    centers.assign(spec.planes, std::vector<double>(levels));
    for (auto& row : centers) {
      for (double& c : row) c = in.f32();
      for (size_t l = 1; l < row.size(); ++l) {
        if (!(row[l - 1] <= row[l])) throw FormatError("centers are not monotone");
      }
    }
  } else if (levels != 2) {
    throw FormatError("Bernoulli model must have two levels");
  }
  if (4 + in.pos() != body_end) throw FormatError("model file size mismatch");

  if (mode == ModelMode::kMog) {
    return Model::mog(std::move(networks[0]), std::move(networks[1]),
                      std::move(networks[2]), std::move(centers));
  }
  return Model::bernoulli(std::move(networks[0]));
}

void save_model(const std::string& path, const Model& model) {
  const std::vector<uint8_t> bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return parse_model(bytes);
}

ModelDigest model_digest(const Model& model) {
  uint64_t hash = 0xcbf29ce484222325ull;
  for (uint8_t b : serialize_model(model)) {
    hash ^= b;
    hash *= 0x100000001b3ull;
  }
  ModelDigest digest;
  for (int k = 0; k < 8; ++k) digest[k] = static_cast<uint8_t>(hash >> (8 * k));
  return digest;
}

}  // namespace ccn
