#include "ccn/codec.h"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

#include "ccn/entropy.h"
#include "ccn/ordering.h"
#include "ccn/range_coder.h"

namespace ccn {
namespace {

constexpr char kMagic[4] = {'C', 'C', 'N', 'B'};
constexpr size_t kHeaderBytes = 4 + 2 + 1 + 12 + 2 + 8;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<uint8_t>(v >> (8 * k)));
}

uint32_t get_u32(std::span<const uint8_t> b, size_t at) {
  uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<uint32_t>(b[at + k]) << (8 * k);
  return v;
}

void check_block(const CodeBlock3D& block, const Model& model) {
  if (block.planes() != model.planes() || block.alphabet_size() != model.levels()) {
    throw std::invalid_argument("block does not match model planes or alphabet");
  }
}

// Network outputs for one block, possibly only valid inside a plan's band.
struct Prediction {
  FeatureField bernoulli;
  MogField mog;
};

Prediction predict(const CodeBlock3D& block, const Model& model,
                   const ForwardPlan* plan) {
  Prediction out;
  if (model.mode == ModelMode::kBernoulli) {
    out.bernoulli = model.networks[0].forward(embed_block(block), nullptr, plan);
  } else {
    const FeatureField input = embed_block(block, &model.centers);
    out.mog.weights = model.networks[0].forward(input, nullptr, plan);
    out.mog.means = model.networks[1].forward(input, nullptr, plan);
    out.mog.variances = model.networks[2].forward(input, nullptr, plan);
  }
  return out;
}

// Distribution at `c` as real probabilities and as the coder's fixed pmf.
FixedPmf distribution_at(const Prediction& pred, const Model& model,
                         const Coordinate& c, std::vector<double>& probs,
                         std::vector<double>& scratch) {
  if (model.mode == ModelMode::kBernoulli) {
    const double v = pred.bernoulli.at(0, c.r, c.p, c.q);
    probs.assign(1, v);
    return quantize_bernoulli(v);
  }
  probs.resize(model.centers[c.r].size());
  mog_pmf(model.centers[c.r], pred.mog.code(c.r, c.p, c.q, scratch), probs);
  return quantize_pmf(probs);
}

FixedPmf wave_distribution(const std::vector<WavefrontForward>& waves,
                           const Model& model, const Coordinate& c,
                           std::vector<double>& probs, std::vector<double>& scratch) {
  if (model.mode == ModelMode::kBernoulli) {
    const double v = waves[0].head(0, c);
    probs.assign(1, v);
    return quantize_bernoulli(v);
  }
  const int comps = model.components();
  scratch.resize(3 * static_cast<size_t>(comps));
  for (int i = 0; i < comps; ++i) {
    scratch[i] = waves[0].head(i, c);
    scratch[comps + i] = waves[1].head(i, c);
    scratch[2 * comps + i] = waves[2].head(i, c);
  }
  const std::span<const double> all(scratch);
  probs.resize(model.centers[c.r].size());
  mog_pmf(model.centers[c.r],
          {all.subspan(0, comps), all.subspan(comps, comps), all.subspan(2 * comps, comps)},
          probs);
  return quantize_pmf(probs);
}

void record(CodingTrace* trace, const Coordinate& c, const std::vector<double>& probs,
            uint16_t symbol) {
  if (!trace) return;
  trace->coords.push_back(c);
  trace->probs.push_back(probs);
  trace->symbols.push_back(symbol);
}

void check_digest(const CodedPayload& payload, const Model& model, PayloadMode mode) {
  const ModelMode want =
      mode == PayloadMode::kLossless ? ModelMode::kBernoulli : ModelMode::kMog;
  if (payload.mode != mode || model.mode != want) {
    throw FormatError("payload mode does not match model mode");
  }
  if (payload.digest != model_digest(model)) {
    throw FormatError("payload was coded with a different model (digest mismatch)");
  }
}

}  // namespace

size_t CodedPayload::body_bytes() const {
  size_t n = 0;
  for (const auto& b : bodies) n += b.size();
  return n;
}

std::vector<uint8_t> serialize_payload(const CodedPayload& payload) {
  if (payload.grid < 1 || payload.grid > 0xFFFF ||
      payload.bodies.size() != static_cast<size_t>(payload.grid) * payload.grid) {
    throw std::invalid_argument("payload needs R*R bodies");
  }
  std::vector<uint8_t> out(kMagic, kMagic + 4);
  put_u16(out, kPayloadVersion);
  out.push_back(static_cast<uint8_t>(payload.mode));
  put_u32(out, payload.dims.planes);
  put_u32(out, payload.dims.height);
  put_u32(out, payload.dims.width);
  put_u16(out, static_cast<uint16_t>(payload.grid));
  out.insert(out.end(), payload.digest.begin(), payload.digest.end());
  for (const auto& body : payload.bodies) put_u32(out, static_cast<uint32_t>(body.size()));
  for (const auto& body : payload.bodies) out.insert(out.end(), body.begin(), body.end());
  return out;
}

CodedPayload parse_payload(std::span<const uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a coded payload (bad magic)");
  }
  if (bytes.size() < kHeaderBytes) throw FormatError("truncated payload header");
  const uint16_t version = bytes[4] | (bytes[5] << 8);
  if (version != kPayloadVersion) {
    throw FormatError("unsupported payload version " + std::to_string(version));
  }
  CodedPayload payload;
  if (bytes[6] > 1) throw FormatError("unknown payload mode");
  payload.mode = static_cast<PayloadMode>(bytes[6]);
  const uint32_t m = get_u32(bytes, 7);
  const uint32_t h = get_u32(bytes, 11);
  const uint32_t w = get_u32(bytes, 15);
  if (m == 0 || h == 0 || w == 0 || m > 4096 || h > (1u << 20) || w > (1u << 20)) {
    throw FormatError("implausible payload dimensions");
  }
  payload.dims = {static_cast<int>(m), static_cast<int>(h), static_cast<int>(w)};
  payload.grid = bytes[19] | (bytes[20] << 8);
  if (payload.grid < 1 || static_cast<uint32_t>(payload.grid) > std::min(h, w)) {
    throw FormatError("invalid patch grid");
  }
  if (payload.mode == PayloadMode::kMog && payload.grid != 1) {
    throw FormatError("MoG payloads have a single body");
  }
  std::memcpy(payload.digest.data(), bytes.data() + 21, 8);
  const size_t count = static_cast<size_t>(payload.grid) * payload.grid;
  size_t pos = kHeaderBytes;
  if (bytes.size() - pos < 4 * count) throw FormatError("truncated body table");
  std::vector<uint32_t> lengths(count);
  for (size_t k = 0; k < count; ++k, pos += 4) lengths[k] = get_u32(bytes, pos);
  for (uint32_t len : lengths) {
    if (bytes.size() - pos < len) throw FormatError("truncated payload body");
    payload.bodies.emplace_back(bytes.begin() + pos, bytes.begin() + pos + len);
    pos += len;
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes after payload");
  return payload;
}

std::vector<uint8_t> encode_block(const CodeBlock3D& block, const Model& model,
                                  CodingTrace* trace) {
  check_block(block, model);
  const Prediction pred = predict(block, model, nullptr);
  const GroupSchedule schedule = build_schedule(block.dims(), model.spec().order);
  RangeEncoder encoder;
  std::vector<double> probs, scratch;
  for (const auto& group : schedule.groups) {
    for (const Coordinate& c : group) {
      const FixedPmf pmf = distribution_at(pred, model, c, probs, scratch);
      const uint16_t symbol = block.at(c);
      encoder.encode(pmf, symbol);
      record(trace, c, probs, symbol);
    }
  }
  return encoder.finish();
}

CodeBlock3D decode_block(std::span<const uint8_t> body, const BlockDims& dims,
                         const Model& model, const DecodeOptions& options) {
  if (dims.planes != model.planes()) throw FormatError("payload planes do not match model");
  if (options.placeholder >= model.levels()) {
    throw std::invalid_argument("placeholder outside the alphabet");
  }
  CodeBlock3D block(dims, model.levels(),
                    std::vector<uint16_t>(dims.count(), options.placeholder));
  const GroupSchedule schedule = build_schedule(dims, model.spec().order);
  const auto embed = [&](const Coordinate& c, uint16_t symbol) {
    return model.mode == ModelMode::kMog ? model.centers[c.r][symbol]
                                         : static_cast<double>(symbol);
  };

  std::vector<WavefrontForward> waves;
  if (options.strategy == DecodeStrategy::kWavefront) {
    for (const Network& net : model.networks) waves.emplace_back(net, dims);
    for (int r = 0; r < dims.planes; ++r) {
      const double fill = embed({r, 0, 0}, options.placeholder);
      for (int p = 0; p < dims.height; ++p) {
        for (int q = 0; q < dims.width; ++q) {
          for (auto& wave : waves) wave.set_input({r, p, q}, fill);
        }
      }
    }
  }

  RangeDecoder decoder(body);
  std::vector<double> probs, scratch;
  Prediction pred;
  for (size_t k = 0; k < schedule.group_count(); ++k) {
    const auto& group = schedule.groups[k];
    if (options.strategy == DecodeStrategy::kWavefront) {
      for (auto& wave : waves) wave.compute(group);
    } else {
      ForwardPlan plan;
      const bool band = options.strategy == DecodeStrategy::kBandPass;
      if (band) plan = plan_for_group(model.spec(), dims, static_cast<int>(k));
      pred = predict(block, model, band ? &plan : nullptr);
    }
    for (const Coordinate& c : group) {
      FixedPmf pmf;
      if (options.strategy == DecodeStrategy::kWavefront) {
        pmf = wave_distribution(waves, model, c, probs, scratch);
      } else {
        pmf = distribution_at(pred, model, c, probs, scratch);
      }
      const auto symbol = static_cast<uint16_t>(decoder.decode(pmf));
      block.set(c, symbol);
      for (auto& wave : waves) wave.set_input(c, embed(c, symbol));
      record(options.trace, c, probs, symbol);
    }
  }
  if (decoder.consumed() != body.size()) {
    throw FormatError("coded body has trailing bytes");
  }
  return block;
}

CodedPayload encode_lossless(const GrayImage& img, const Model& model, int grid) {
  if (model.mode != ModelMode::kBernoulli || model.planes() != 8) {
    throw FormatError("lossless coding needs an 8-plane Bernoulli model");
  }
  CodedPayload payload;
  payload.mode = PayloadMode::kLossless;
  payload.dims = {8, img.height(), img.width()};
  payload.grid = grid;
  payload.digest = model_digest(model);
  for (const GrayImage& patch : split_patches(img, grid)) {
    payload.bodies.push_back(encode_block(to_bitplanes(patch), model));
  }
  return payload;
}

GrayImage decode_lossless(const CodedPayload& payload, const Model& model,
                          const DecodeOptions& options) {
  check_digest(payload, model, PayloadMode::kLossless);
  if (payload.dims.planes != 8) throw FormatError("lossless payload must have 8 planes");
  const auto layout = patch_layout(payload.dims.height, payload.dims.width, payload.grid);
  if (layout.size() != payload.bodies.size()) throw FormatError("body count mismatch");
  std::vector<GrayImage> patches;
  for (size_t k = 0; k < layout.size(); ++k) {
    const BlockDims dims{8, layout[k].height, layout[k].width};
    patches.push_back(from_bitplanes(decode_block(payload.bodies[k], dims, model, options)));
  }
  return merge_patches(patches, payload.dims.height, payload.dims.width, payload.grid);
}

CodedPayload encode_mog(const CodeBlock3D& block, const Model& model) {
  if (model.mode != ModelMode::kMog) throw FormatError("MoG coding needs a MoG model");
  CodedPayload payload;
  payload.mode = PayloadMode::kMog;
  payload.dims = block.dims();
  payload.digest = model_digest(model);
  payload.bodies.push_back(encode_block(block, model));
  return payload;
}

CodeBlock3D decode_mog(const CodedPayload& payload, const Model& model,
                       const DecodeOptions& options) {
  check_digest(payload, model, PayloadMode::kMog);
  if (payload.bodies.size() != 1) throw FormatError("MoG payloads have a single body");
  return decode_block(payload.bodies[0], payload.dims, model, options);
}

double estimate_bits(const CodeBlock3D& block, const Model& model) {
  check_block(block, model);
  const Prediction pred = predict(block, model, nullptr);
  if (model.mode == ModelMode::kBernoulli) return bernoulli_nll(block, pred.bernoulli);
  return mog_nll(block, mog_pmf_table(pred.mog, model.centers));
}

}  // namespace ccn
