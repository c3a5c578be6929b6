#include "ccn/network.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace ccn {
namespace {

struct Tap {
  int mu;
  int nu;
};

// Unmasked taps of every (r, s) pair, in (mu, nu) raster order.
std::vector<std::vector<Tap>> collect_taps(const MaskSet& mask) {
  const int m = mask.planes();
  const int h = mask.radius();
  std::vector<std::vector<Tap>> taps(static_cast<size_t>(m) * m);
  for (int r = 0; r < m; ++r) {
    for (int s = 0; s < m; ++s) {
      for (int mu = -h; mu <= h; ++mu) {
        for (int nu = -h; nu <= h; ++nu) {
          if (mask.at(r, s, mu, nu)) taps[r * m + s].push_back({mu, nu});
        }
      }
    }
  }
  return taps;
}

// Zero-padded copy of every (block, plane) of `field`, `pad` cells per side.
class PaddedField {
 public:
  PaddedField(const FieldShape& shape, int pad)
      : pad_(pad),
        rows_(shape.height + 2 * pad),
        cols_(shape.width + 2 * pad),
        planes_(shape.planes),
        values_(static_cast<size_t>(shape.blocks) * shape.planes * rows_ * cols_,
                0.0) {}

  // Rows outside [row_lo, row_hi) stay zero.
  static PaddedField copy_of(const FeatureField& field, int pad, int row_lo = 0,
                             int row_hi = -1) {
    PaddedField out(field.shape(), pad);
    const FieldShape& shape = field.shape();
    if (row_hi < 0) row_hi = shape.height;
    row_lo = std::max(row_lo, 0);
    row_hi = std::min(row_hi, shape.height);
    for (int j = 0; j < shape.blocks; ++j) {
      for (int s = 0; s < shape.planes; ++s) {
        const double* src = field.plane(j, s).data();
        double* dst = out.plane(j, s);
        for (int p = row_lo; p < row_hi; ++p) {
          std::copy_n(src + static_cast<size_t>(p) * shape.width, shape.width,
                      dst + static_cast<size_t>(p + pad) * out.cols_ + pad);
        }
      }
    }
    return out;
  }

  double* plane(int j, int s) {
    return values_.data() +
           (static_cast<size_t>(j) * planes_ + s) * rows_ * cols_;
  }
  const double* plane(int j, int s) const {
    return values_.data() +
           (static_cast<size_t>(j) * planes_ + s) * rows_ * cols_;
  }
  // Address of grid cell (p, q) of a plane, where (0, 0) is the first
  // unpadded cell.
  static double* cell(double* plane, int cols, int pad, int p, int q) {
    return plane + static_cast<size_t>(p + pad) * cols + (q + pad);
  }
  int cols() const { return cols_; }
  int pad() const { return pad_; }

 private:
  int pad_;
  int rows_;
  int cols_;
  int planes_;
  std::vector<double> values_;
};

void check_conv_shapes(const FeatureField& input, const LayerParams& params,
                       const MaskSet& mask) {
  const FieldShape& shape = input.shape();
  if (shape.blocks != params.in_blocks || shape.planes != params.planes ||
      mask.planes() != params.planes || mask.kernel() != params.kernel ||
      params.weights.size() != static_cast<size_t>(params.out_blocks) *
                                   params.in_blocks * params.planes *
                                   params.planes * params.kernel * params.kernel ||
      params.biases.size() !=
          static_cast<size_t>(params.out_blocks) * params.planes) {
    throw std::invalid_argument("masked convolution shape mismatch");
  }
}

// Dot product with a fixed set of independent partial sums so the result
// does not depend on how the compiler vectorizes the loop.
double dot(const double* a, const double* b, int n) {
  std::array<double, 8> acc{};
  int q = 0;
  for (; q + 8 <= n; q += 8) {
    for (int k = 0; k < 8; ++k) acc[k] += a[q + k] * b[q + k];
  }
  double tail = 0.0;
  for (; q < n; ++q) tail += a[q] * b[q];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Head output at flat position k of every block, where consecutive blocks
// are `stride` values apart.
void head_at(HeadKind head, const double* in, double* out, size_t k, size_t stride,
             int blocks) {
  switch (head) {
    case HeadKind::kBernoulli:
      for (int i = 0; i < blocks; ++i) out[i * stride + k] = sigmoid(in[i * stride + k]);
      break;
    case HeadKind::kMogMeans:
      for (int i = 0; i < blocks; ++i) out[i * stride + k] = in[i * stride + k];
      break;
    case HeadKind::kMogVariances:
      for (int i = 0; i < blocks; ++i) {
        const double sigma = softplus(in[i * stride + k]) + kSigmaFloor;
        out[i * stride + k] = sigma * sigma;
      }
      break;
    case HeadKind::kMogWeights: {
      double peak = in[k];
      for (int i = 1; i < blocks; ++i) peak = std::max(peak, in[i * stride + k]);
      double total = 0.0;
      for (int i = 0; i < blocks; ++i) {
        const double e = std::exp(in[i * stride + k] - peak);
        out[i * stride + k] = e;
        total += e;
      }
      for (int i = 0; i < blocks; ++i) out[i * stride + k] /= total;
      break;
    }
  }
}

void apply_head(HeadKind head, const FeatureField& raw, FeatureField& out) {
  const FieldShape& shape = raw.shape();
  out = FeatureField(shape);
  const size_t stride = static_cast<size_t>(shape.planes) * shape.plane_size();
  const double* in = raw.values().data();
  double* dst = out.values().data();
  for (size_t k = 0; k < stride; ++k) head_at(head, in, dst, k, stride, shape.blocks);
}

FeatureField head_backward(HeadKind head, const FeatureField& raw,
                           const FeatureField& out, const FeatureField& grad) {
  const FieldShape& shape = raw.shape();
  FeatureField result(shape);
  const auto x = raw.values();
  const auto y = out.values();
  const auto g = grad.values();
  auto dst = result.values();
  switch (head) {
    case HeadKind::kBernoulli:
      for (size_t k = 0; k < x.size(); ++k) dst[k] = g[k] * y[k] * (1.0 - y[k]);
      break;
    case HeadKind::kMogMeans:
      std::copy(g.begin(), g.end(), dst.begin());
      break;
    case HeadKind::kMogVariances:
      for (size_t k = 0; k < x.size(); ++k) {
        const double sigma = softplus(x[k]) + kSigmaFloor;
        dst[k] = g[k] * 2.0 * sigma * sigmoid(x[k]);
      }
      break;
    case HeadKind::kMogWeights: {
      const size_t stride = static_cast<size_t>(shape.planes) * shape.plane_size();
      for (size_t k = 0; k < stride; ++k) {
        double inner = 0.0;
        for (int i = 0; i < shape.blocks; ++i) {
          inner += y[i * stride + k] * g[i * stride + k];
        }
        for (int i = 0; i < shape.blocks; ++i) {
          dst[i * stride + k] = y[i * stride + k] * (g[i * stride + k] - inner);
        }
      }
      break;
    }
  }
  return result;
}

}  // namespace

Region Region::full(int height, int width) {
  Region region;
  region.rows.assign(height, {0, width});
  return region;
}

bool Region::empty() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const auto& span) { return span.second <= span.first; });
}

LayerParams::LayerParams(int out_blocks, int in_blocks, int planes, int kernel)
    : out_blocks(out_blocks),
      in_blocks(in_blocks),
      planes(planes),
      kernel(kernel),
      weights(static_cast<size_t>(out_blocks) * in_blocks * planes * planes *
                  kernel * kernel,
              0.0),
      biases(static_cast<size_t>(out_blocks) * planes, 0.0) {}

LayerParams LayerParams::zeros_like() const {
  LayerParams out(out_blocks, in_blocks, planes, kernel);
  out.prelu_slope = 0.0;
  return out;
}

void LayerParams::add(const LayerParams& other, double scale) {
  for (size_t k = 0; k < weights.size(); ++k) weights[k] += scale * other.weights[k];
  for (size_t k = 0; k < biases.size(); ++k) biases[k] += scale * other.biases[k];
  prelu_slope += scale * other.prelu_slope;
}

FeatureField masked_conv_forward(const FeatureField& input,
                                 const LayerParams& params, const MaskSet& mask,
                                 const Region* region) {
  check_conv_shapes(input, params, mask);
  const FieldShape& in_shape = input.shape();
  const int h = mask.radius();
  const int m = params.planes;
  const int height = in_shape.height;
  const int width = in_shape.width;
  const Region full = Region::full(height, width);
  const Region& rows = region ? *region : full;
  if (static_cast<int>(rows.rows.size()) != height) {
    throw std::invalid_argument("region does not match field height");
  }

  int first = 0;
  while (first < height && rows.rows[first].second <= rows.rows[first].first) ++first;
  int last = height;
  while (last > first && rows.rows[last - 1].second <= rows.rows[last - 1].first) --last;

  const auto taps = collect_taps(mask);
  const PaddedField padded = PaddedField::copy_of(input, h, first - h, last + h);
  const int cols = padded.cols();

  FeatureField output({params.out_blocks, m, height, width});
  for (int i = 0; i < params.out_blocks; ++i) {
    for (int r = 0; r < m; ++r) {
      double* out = output.plane(i, r).data();
      const double bias = params.biases[params.bias_index(i, r)];
      for (int p = first; p < last; ++p) {
        const auto [lo, hi] = rows.rows[p];
        for (int q = lo; q < hi; ++q) out[static_cast<size_t>(p) * width + q] = bias;
      }
      for (int j = 0; j < params.in_blocks; ++j) {
        for (int s = 0; s < m; ++s) {
          const double* src_plane = padded.plane(j, s);
          for (const Tap& tap : taps[r * m + s]) {
            const double w =
                params.weights[params.weight_index(i, j, r, s, tap.mu, tap.nu)];
            for (int p = first; p < last; ++p) {
              const auto [lo, hi] = rows.rows[p];
              if (hi <= lo) continue;
              const double* src = src_plane +
                                  static_cast<size_t>(p + tap.mu + h) * cols +
                                  (tap.nu + h);
              double* dst = out + static_cast<size_t>(p) * width;
              for (int q = lo; q < hi; ++q) dst[q] += w * src[q];
            }
          }
        }
      }
    }
  }
  return output;
}

void masked_conv_backward(const FeatureField& grad_output,
                          const FeatureField& input, const LayerParams& params,
                          const MaskSet& mask, LayerParams& grad_params,
                          FeatureField* grad_input) {
  check_conv_shapes(input, params, mask);
  const FieldShape& in_shape = input.shape();
  const FieldShape expected_out{params.out_blocks, params.planes, in_shape.height,
                                in_shape.width};
  if (grad_output.shape() != expected_out ||
      grad_params.weights.size() != params.weights.size() ||
      grad_params.biases.size() != params.biases.size()) {
    throw std::invalid_argument("masked convolution gradient shape mismatch");
  }
  if (grad_input && grad_input->shape() != in_shape) {
    throw std::invalid_argument("input gradient shape mismatch");
  }
  const int h = mask.radius();
  const int m = params.planes;
  const int height = in_shape.height;
  const int width = in_shape.width;

  const auto taps = collect_taps(mask);
  const PaddedField padded = PaddedField::copy_of(input, h);
  const int cols = padded.cols();
  std::optional<PaddedField> grad_padded;
  if (grad_input) grad_padded.emplace(in_shape, h);

  for (int i = 0; i < params.out_blocks; ++i) {
    for (int r = 0; r < m; ++r) {
      const double* g = grad_output.plane(i, r).data();
      double bias_grad = 0.0;
      for (size_t k = 0; k < in_shape.plane_size(); ++k) bias_grad += g[k];
      grad_params.biases[params.bias_index(i, r)] += bias_grad;

      for (int j = 0; j < params.in_blocks; ++j) {
        for (int s = 0; s < m; ++s) {
          const double* src_plane = padded.plane(j, s);
          double* gin_plane = grad_padded ? grad_padded->plane(j, s) : nullptr;
          for (const Tap& tap : taps[r * m + s]) {
            const size_t widx = params.weight_index(i, j, r, s, tap.mu, tap.nu);
            const double w = params.weights[widx];
            double weight_grad = 0.0;
            for (int p = 0; p < height; ++p) {
              const size_t offset =
                  static_cast<size_t>(p + tap.mu + h) * cols + (tap.nu + h);
              const double* grow = g + static_cast<size_t>(p) * width;
              weight_grad += dot(grow, src_plane + offset, width);
              if (gin_plane) {
                double* dst = gin_plane + offset;
                for (int q = 0; q < width; ++q) dst[q] += w * grow[q];
              }
            }
            grad_params.weights[widx] += weight_grad;
          }
        }
      }
    }
  }

  if (grad_input) {
    for (int j = 0; j < in_shape.blocks; ++j) {
      for (int s = 0; s < m; ++s) {
        const double* src = grad_padded->plane(j, s);
        double* dst = grad_input->plane(j, s).data();
        for (int p = 0; p < height; ++p) {
          for (int q = 0; q < width; ++q) {
            dst[static_cast<size_t>(p) * width + q] +=
                src[static_cast<size_t>(p + h) * cols + (q + h)];
          }
        }
      }
    }
  }
}

void NetworkSpec::validate() const {
  if (depth < 1) throw std::invalid_argument("network depth must be positive");
  if (kernel < 1 || kernel % 2 == 0) {
    throw std::invalid_argument("network kernel must be odd");
  }
  if (feature_blocks < 1 || planes < 1 || out_blocks < 1) {
    throw std::invalid_argument("network widths must be positive");
  }
  if (head == HeadKind::kBernoulli && out_blocks != 1) {
    throw std::invalid_argument("Bernoulli head needs exactly one output block");
  }
  if (is_2d(order) && planes != 1) {
    throw std::invalid_argument("2D coding orders require a single plane");
  }
  for (const ResidualLink& link : residuals) {
    // Both ends must carry N feature blocks: hidden layers only.
    if (link.from < 0 || link.from >= link.to || link.to >= depth - 1) {
      throw std::invalid_argument("residual link " + std::to_string(link.from) +
                                  "->" + std::to_string(link.to) +
                                  " does not join equal-shaped activations");
    }
  }
}

NetworkSpec lossless_spec(int feature_blocks, int kernel, CodingOrder order) {
  NetworkSpec spec;
  spec.depth = 11;
  spec.kernel = kernel;
  spec.feature_blocks = feature_blocks;
  spec.planes = 8;
  spec.out_blocks = 1;
  spec.residuals = {{1, 3}, {3, 5}, {5, 7}, {7, 9}};
  spec.head = HeadKind::kBernoulli;
  spec.order = order;
  return spec;
}

NetworkSpec lossless_light_spec(CodingOrder order) {
  return lossless_spec(4, 3, order);
}

NetworkSpec mog_spec(HeadKind head, int planes, int components,
                     int feature_blocks, int kernel, CodingOrder order) {
  NetworkSpec spec;
  spec.depth = 9;
  spec.kernel = kernel;
  spec.feature_blocks = feature_blocks;
  spec.planes = planes;
  spec.out_blocks = components;
  spec.residuals = {{1, 3}, {3, 5}, {5, 7}};
  spec.head = head;
  spec.order = order;
  return spec;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  input_mask_ = build_mask(spec_.order, spec_.kernel, spec_.planes, LayerKind::kInput);
  hidden_mask_ =
      build_mask(spec_.order, spec_.kernel, spec_.planes, LayerKind::kHidden);
  for (int t = 0; t < spec_.depth; ++t) {
    const int in = t == 0 ? 1 : spec_.feature_blocks;
    const int out = t + 1 == spec_.depth ? spec_.out_blocks : spec_.feature_blocks;
    layers_.emplace_back(out, in, spec_.planes, spec_.kernel);
  }
}

void Network::init_random(uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int m = spec_.planes;
  const int h = spec_.kernel / 2;
  for (int t = 0; t < spec_.depth; ++t) {
    LayerParams& layer = layers_[t];
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
    layer.prelu_slope = 0.25;
    if (t + 1 == spec_.depth) continue;
    const MaskSet& mk = mask(t);
    for (int r = 0; r < m; ++r) {
      size_t taps = 0;
      for (int s = 0; s < m; ++s) {
        for (int mu = -h; mu <= h; ++mu) {
          for (int nu = -h; nu <= h; ++nu) taps += mk.at(r, s, mu, nu);
        }
      }
      if (taps == 0) continue;
      const double limit = std::sqrt(
          6.0 / (static_cast<double>(layer.in_blocks + layer.out_blocks) * taps));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (int i = 0; i < layer.out_blocks; ++i) {
        for (int j = 0; j < layer.in_blocks; ++j) {
          for (int s = 0; s < m; ++s) {
            for (int mu = -h; mu <= h; ++mu) {
              for (int nu = -h; nu <= h; ++nu) {
                if (!mk.at(r, s, mu, nu)) continue;
                layer.weights[layer.weight_index(i, j, r, s, mu, nu)] = dist(rng);
              }
            }
          }
        }
      }
    }
  }
}

FeatureField Network::forward(const FeatureField& input, Tape* tape,
                              const ForwardPlan* plan) const {
  const FieldShape& shape = input.shape();
  if (shape.blocks != 1 || shape.planes != spec_.planes) {
    throw std::invalid_argument("network input must be a single M-plane block");
  }
  if (plan && static_cast<int>(plan->layers.size()) != spec_.depth) {
    throw std::invalid_argument("forward plan depth mismatch");
  }
  if (tape) {
    tape->inputs.clear();
    tape->activations.clear();
  }
  std::vector<FeatureField> post(spec_.depth);
  FeatureField current = input;
  FeatureField raw;
  for (int t = 0; t < spec_.depth; ++t) {
    const Region* region = plan ? &plan->layers[t] : nullptr;
    FeatureField z = masked_conv_forward(current, layers_[t], mask(t), region);
    for (const ResidualLink& link : spec_.residuals) {
      if (link.to != t) continue;
      auto dst = z.values();
      const auto src = post[link.from].values();
      for (size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    if (tape) tape->inputs.push_back(std::move(current));
    if (t + 1 == spec_.depth) {
      raw = std::move(z);
      break;
    }
    FeatureField a(z.shape());
    const double slope = layers_[t].prelu_slope;
    const auto zv = z.values();
    auto av = a.values();
    for (size_t k = 0; k < zv.size(); ++k) av[k] = zv[k] > 0 ? zv[k] : slope * zv[k];
    if (tape) tape->activations.push_back(std::move(z));
    post[t] = a;
    current = std::move(a);
  }
  FeatureField out;
  apply_head(spec_.head, raw, out);
  if (tape) {
    tape->activations.push_back(raw);
    tape->raw = std::move(raw);
    tape->head = out;
  }
  return out;
}

std::vector<LayerParams> Network::backward(const Tape& tape,
                                           const FeatureField& grad_head,
                                           FeatureField* grad_input) const {
  if (static_cast<int>(tape.inputs.size()) != spec_.depth ||
      grad_head.shape() != tape.head.shape()) {
    throw std::invalid_argument("backward called with a mismatched tape");
  }
  std::vector<LayerParams> grads;
  grads.reserve(layers_.size());
  for (const LayerParams& layer : layers_) grads.push_back(layer.zeros_like());

  // Gradient with respect to the post-activation output of each layer.
  std::vector<FeatureField> grad_post(spec_.depth);
  FeatureField grad_z = head_backward(spec_.head, tape.raw, tape.head, grad_head);
  for (int t = spec_.depth - 1; t >= 0; --t) {
    if (t + 1 < spec_.depth) {
      const FeatureField& z = tape.activations[t];
      const FeatureField& ga = grad_post[t];
      grad_z = FeatureField(z.shape());
      const double slope = layers_[t].prelu_slope;
      const auto zv = z.values();
      const auto gv = ga.values();
      auto out = grad_z.values();
      double slope_grad = 0.0;
      for (size_t k = 0; k < zv.size(); ++k) {
        if (zv[k] > 0) {
          out[k] = gv[k];
        } else {
          out[k] = slope * gv[k];
          slope_grad += gv[k] * zv[k];
        }
      }
      grads[t].prelu_slope = slope_grad;
    }
    for (const ResidualLink& link : spec_.residuals) {
      if (link.to != t) continue;
      FeatureField& dst = grad_post[link.from];
      if (dst.size() == 0) dst = FeatureField(grad_z.shape());
      auto d = dst.values();
      const auto s = grad_z.values();
      for (size_t k = 0; k < d.size(); ++k) d[k] += s[k];
    }
    const FeatureField& input = tape.inputs[t];
    FeatureField* gin = nullptr;
    if (t > 0) {
      FeatureField& dst = grad_post[t - 1];
      if (dst.size() == 0) dst = FeatureField(input.shape());
      gin = &dst;
    } else if (grad_input) {
      if (!(grad_input->shape() == input.shape())) {
        *grad_input = FeatureField(input.shape());
      }
      gin = grad_input;
    }
    masked_conv_backward(grad_z, input, layers_[t], mask(t), grads[t], gin);
  }
  return grads;
}

size_t Network::parameter_count() const {
  size_t n = 0;
  for (const LayerParams& layer : layers_) {
    n += layer.weights.size() + layer.biases.size() + 1;
  }
  return n;
}

std::vector<double> Network::flatten(const std::vector<LayerParams>& layers) {
  std::vector<double> flat;
  for (const LayerParams& layer : layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.biases.begin(), layer.biases.end());
    flat.push_back(layer.prelu_slope);
  }
  return flat;
}

std::vector<double> Network::flat_parameters() const { return flatten(layers_); }

void Network::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("flat parameter count mismatch");
  }
  size_t k = 0;
  for (LayerParams& layer : layers_) {
    for (double& w : layer.weights) w = flat[k++];
    for (double& b : layer.biases) b = flat[k++];
    layer.prelu_slope = flat[k++];
  }
}

void Network::round_to_float() {
  auto round = [](double& x) { x = static_cast<double>(static_cast<float>(x)); };
  for (LayerParams& layer : layers_) {
    std::for_each(layer.weights.begin(), layer.weights.end(), round);
    std::for_each(layer.biases.begin(), layer.biases.end(), round);
    round(layer.prelu_slope);
  }
}

FeatureField embed_block(const CodeBlock3D& block,
                         const std::vector<std::vector<double>>* centers) {
  FeatureField field({1, block.planes(), block.height(), block.width()});
  if (centers && static_cast<int>(centers->size()) != block.planes()) {
    throw std::invalid_argument("centers do not match block planes");
  }
  const size_t plane = static_cast<size_t>(block.height()) * block.width();
  auto dst = field.values();
  const auto src = block.symbols();
  for (int r = 0; r < block.planes(); ++r) {
    for (size_t k = 0; k < plane; ++k) {
      const uint16_t sym = src[r * plane + k];
      dst[r * plane + k] =
          centers ? (*centers)[r].at(sym) : static_cast<double>(sym);
    }
  }
  return field;
}

ForwardPlan plan_for_group(const NetworkSpec& spec, const BlockDims& dims,
                           int group) {
  const int h = spec.kernel / 2;
  const int height = dims.height;
  const int width = dims.width;
  ForwardPlan plan;
  plan.layers.resize(spec.depth);
  for (int t = 0; t < spec.depth; ++t) {
    const int reach = spec.depth - 1 - t;
    Region& region = plan.layers[t];
    region.rows.assign(height, {0, 0});
    switch (spec.order) {
      case CodingOrder::kZigzag2D:
      case CodingOrder::kZigzag3D: {
        // Group k touches diagonals p + q in [k - (M-1), k]; each layer
        // below widens that band by 2h on both sides.
        const int dlo = group - (dims.planes - 1) - 2 * h * reach;
        const int dhi = group + 2 * h * reach;
        for (int p = 0; p < height; ++p) {
          const int lo = std::max(0, dlo - p);
          const int hi = std::min(width, dhi - p + 1);
          if (hi > lo) region.rows[p] = {lo, hi};
        }
        break;
      }
      case CodingOrder::kRaster3DByRow:
      case CodingOrder::kRaster2D: {
        const int row = spec.order == CodingOrder::kRaster2D
                            ? group / width
                            : group % height;
        for (int p = std::max(0, row - h * reach);
             p <= std::min(height - 1, row + h * reach); ++p) {
          region.rows[p] = {0, width};
        }
        break;
      }
    }
  }
  return plan;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Adam parameter/gradient size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient");
  }
  if (state.first_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  } else if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("Adam state size mismatch");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (size_t k = 0; k < params.size(); ++k) {
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = config.beta1 * m + (1.0 - config.beta1) * grads[k];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[k] * grads[k];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

WavefrontForward::WavefrontForward(const Network& net, const BlockDims& dims,
                                   double fill)
    : net_(&net), dims_(dims) {
  const NetworkSpec& spec = net.spec();
  if (dims.planes != spec.planes) {
    throw std::invalid_argument("block planes do not match the network");
  }
  const FieldShape hidden{spec.feature_blocks, spec.planes, dims.height, dims.width};
  input_ = FeatureField({1, spec.planes, dims.height, dims.width}, fill);
  post_.assign(spec.depth - 1, FeatureField(hidden));
  raw_ = FeatureField({spec.out_blocks, spec.planes, dims.height, dims.width});
  head_ = FeatureField(raw_.shape());
  const int m = spec.planes;
  const int h = spec.kernel / 2;
  const int plane = static_cast<int>(hidden.plane_size());
  entries_.resize(spec.depth);
  for (int t = 0; t < spec.depth; ++t) {
    const LayerParams& layer = net.layers()[t];
    const MaskSet& mask = net.mask(t);
    auto& lists = entries_[t];
    lists.resize(static_cast<size_t>(layer.out_blocks) * m);
    for (int i = 0; i < layer.out_blocks; ++i) {
      for (int r = 0; r < m; ++r) {
        auto& list = lists[i * m + r];
        for (int j = 0; j < layer.in_blocks; ++j) {
          for (int s = 0; s < m; ++s) {
            for (int mu = -h; mu <= h; ++mu) {
              for (int nu = -h; nu <= h; ++nu) {
                if (!mask.at(r, s, mu, nu)) continue;
                list.push_back({(j * m + s) * plane, mu, nu,
                                layer.weights[layer.weight_index(i, j, r, s, mu, nu)]});
              }
            }
          }
        }
      }
    }
  }
}

void WavefrontForward::set_input(const Coordinate& c, double value) {
  input_.at(0, c.r, c.p, c.q) = value;
}

void WavefrontForward::compute(std::span<const Coordinate> group) {
  const NetworkSpec& spec = net_->spec();
  const int m = spec.planes;
  const int height = dims_.height;
  const int width = dims_.width;
  for (int t = 0; t < spec.depth; ++t) {
    const LayerParams& layer = net_->layers()[t];
    const double* in = (t == 0 ? input_ : post_[t - 1]).values().data();
    FeatureField& out = t + 1 == spec.depth ? raw_ : post_[t];
    const auto& lists = entries_[t];
    for (const Coordinate& c : group) {
      for (int i = 0; i < layer.out_blocks; ++i) {
        double acc = layer.biases[layer.bias_index(i, c.r)];
        for (const Entry& e : lists[i * m + c.r]) {
          const int p = c.p + e.mu;
          const int q = c.q + e.nu;
          // Out-of-grid taps still add w * 0 so signed zeros match the
          // padded full pass.
          const double x = (p >= 0 && p < height && q >= 0 && q < width)
                               ? in[e.offset + p * width + q]
                               : 0.0;
          acc += e.weight * x;
        }
        for (const ResidualLink& link : spec.residuals) {
          if (link.to == t) acc += post_[link.from].at(i, c.r, c.p, c.q);
        }
        if (t + 1 < spec.depth) {
          acc = acc > 0 ? acc : layer.prelu_slope * acc;
        }
        out.at(i, c.r, c.p, c.q) = acc;
      }
    }
  }
  const size_t stride = raw_.shape().planes * raw_.shape().plane_size();
  for (const Coordinate& c : group) {
    head_at(spec.head, raw_.values().data(), head_.values().data(),
            raw_.index(0, c.r, c.p, c.q), stride, spec.out_blocks);
  }
}

}  // namespace ccn
