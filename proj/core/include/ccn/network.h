#ifndef CCN_NETWORK_H_
#define CCN_NETWORK_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ccn/codeblock.h"
#include "ccn/ordering.h"

namespace ccn {

struct FieldShape {
  int blocks = 0;  // N, feature blocks
  int planes = 0;  // M
  int height = 0;
  int width = 0;

  size_t plane_size() const { return static_cast<size_t>(height) * width; }
  size_t count() const {
    return static_cast<size_t>(blocks) * planes * plane_size();
  }
  bool operator==(const FieldShape&) const = default;
};

// Real-valued (N, M, H, W) tensor of feature values.
class FeatureField {
 public:
  FeatureField() = default;
  explicit FeatureField(FieldShape shape, double fill = 0.0)
      : shape_(shape), values_(shape.count(), fill) {}

  const FieldShape& shape() const { return shape_; }
  size_t size() const { return values_.size(); }

  size_t index(int i, int r, int p, int q) const {
    return ((static_cast<size_t>(i) * shape_.planes + r) * shape_.height + p) *
               shape_.width +
           q;
  }
  double at(int i, int r, int p, int q) const { return values_[index(i, r, p, q)]; }
  double& at(int i, int r, int p, int q) { return values_[index(i, r, p, q)]; }

  std::span<double> plane(int i, int r) {
    return {values_.data() + index(i, r, 0, 0), shape_.plane_size()};
  }
  std::span<const double> plane(int i, int r) const {
    return {values_.data() + index(i, r, 0, 0), shape_.plane_size()};
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

 private:
  FieldShape shape_;
  std::vector<double> values_;
};

// Per-row column spans [lo, hi) of the spatial grid to evaluate. Positions
// outside the region are left at zero.
struct Region {
  std::vector<std::pair<int, int>> rows;

  static Region full(int height, int width);
  bool empty() const;
};

// Weights (i out-block, j in-block, r out-plane, s in-plane, mu, nu), biases
// (i, r) and the slope of the PReLU that follows the layer. The same struct
// holds gradients.
struct LayerParams {
  int out_blocks = 0;
  int in_blocks = 0;
  int planes = 0;
  int kernel = 0;
  std::vector<double> weights;
  std::vector<double> biases;
  double prelu_slope = 0.25;

  LayerParams() = default;
  LayerParams(int out_blocks, int in_blocks, int planes, int kernel);

  size_t weight_index(int i, int j, int r, int s, int mu, int nu) const {
    const int h = kernel / 2;
    return ((((static_cast<size_t>(i) * in_blocks + j) * planes + r) * planes +
             s) * kernel + (mu + h)) * kernel + (nu + h);
  }
  size_t bias_index(int i, int r) const {
    return static_cast<size_t>(i) * planes + r;
  }
  // Zero copy with the same shape.
  LayerParams zeros_like() const;
  void add(const LayerParams& other, double scale = 1.0);
};

// v_{i,r}(p,q) = sum_{j,s,mu,nu} m_{r,s}(mu,nu) w_{i,j,r,s}(mu,nu)
//                u_{j,s}(p+mu, q+nu) + b_{i,r}, zero padding outside the grid.
FeatureField masked_conv_forward(const FeatureField& input,
                                 const LayerParams& params, const MaskSet& mask,
                                 const Region* region = nullptr);

// Accumulates parameter gradients into `grad_params` (same shape as params)
// and, when `grad_input` is non-null, input gradients into `grad_input`.
// Masked weight positions never receive gradient.
void masked_conv_backward(const FeatureField& grad_output,
                          const FeatureField& input, const LayerParams& params,
                          const MaskSet& mask, LayerParams& grad_params,
                          FeatureField* grad_input = nullptr);

enum class HeadKind : uint8_t {
  kBernoulli = 0,     // sigmoid
  kMogWeights = 1,    // softmax across feature blocks
  kMogMeans = 2,      // identity
  kMogVariances = 3,  // (softplus(x) + eps_sigma)^2
};

// Floor on the standard deviation produced by the variance head.
inline constexpr double kSigmaFloor = 1e-3;

struct ResidualLink {
  int from = 0;  // activation after layer `from` (post-PReLU) ...
  int to = 0;    // ... is added to the pre-activation of layer `to`
  bool operator==(const ResidualLink&) const = default;
};

struct NetworkSpec {
  int depth = 11;           // T masked conv layers
  int kernel = 5;           // S
  int feature_blocks = 16;  // N, hidden width
  int planes = 8;           // M
  int out_blocks = 1;       // 1 for Bernoulli, C for the MoG heads
  std::vector<ResidualLink> residuals;
  HeadKind head = HeadKind::kBernoulli;
  CodingOrder order = CodingOrder::kZigzag3D;

  // Throws std::invalid_argument on inconsistent fields.
  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

// Eleven layers, residual links between the hidden activations 1->3, 3->5,
// 5->7, 7->9 (0-based).
NetworkSpec lossless_spec(int feature_blocks = 16, int kernel = 5,
                          CodingOrder order = CodingOrder::kZigzag3D);
// N = 4, S = 3.
NetworkSpec lossless_light_spec(CodingOrder order = CodingOrder::kZigzag3D);
// Nine layers, links 1->3, 3->5, 5->7, C output blocks.
NetworkSpec mog_spec(HeadKind head, int planes, int components,
                     int feature_blocks = 8, int kernel = 5,
                     CodingOrder order = CodingOrder::kZigzag3D);

// Intermediate values recorded by a forward pass for backpropagation.
struct Tape {
  std::vector<FeatureField> inputs;       // input of layer t
  std::vector<FeatureField> activations;  // pre-activation z_t
  FeatureField raw;                       // z_{T-1}
  FeatureField head;                      // head output
};

// Per-layer regions a forward pass evaluates. Empty means everywhere.
struct ForwardPlan {
  std::vector<Region> layers;
};

class Network {
 public:
  Network() = default;
  // All parameters zero, PReLU slopes 0.25.
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  std::vector<LayerParams>& layers() { return layers_; }
  const std::vector<LayerParams>& layers() const { return layers_; }
  const MaskSet& mask(int layer) const {
    return layer == 0 ? input_mask_ : hidden_mask_;
  }

  // Glorot-uniform weights over unmasked taps, zero biases, zero weights in
  // the final layer so the head starts from its bias.
  void init_random(uint64_t seed);

  FeatureField forward(const FeatureField& input, Tape* tape = nullptr,
                       const ForwardPlan* plan = nullptr) const;
  // Gradients with respect to every layer's parameters, given the gradient
  // of the loss with respect to the head output. The input gradient is
  // accumulated into `grad_input` when its shape already matches.
  std::vector<LayerParams> backward(const Tape& tape,
                                    const FeatureField& grad_head,
                                    FeatureField* grad_input = nullptr) const;

  size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);
  static std::vector<double> flatten(const std::vector<LayerParams>& grads);

  // Rounds every parameter to the nearest 32-bit float, the precision of
  // the model file.
  void round_to_float();

 private:
  NetworkSpec spec_;
  std::vector<LayerParams> layers_;
  MaskSet input_mask_;
  MaskSet hidden_mask_;
};

// Symbols as network input: the symbol value itself for binary blocks, or
// centers[r][symbol] when centers are given.
FeatureField embed_block(const CodeBlock3D& block,
                         const std::vector<std::vector<double>>* centers = nullptr);

// Regions that suffice to evaluate the final layer at every coordinate of
// group `group`: the receptive field of the group traced back through the
// layers.
ForwardPlan plan_for_group(const NetworkSpec& spec, const BlockDims& dims,
                           int group);

// Evaluates a network one schedule group at a time, computing every layer
// only at the group's own coordinates. Results match Network::forward on the
// same input bit for bit, because each layer's value at a group depends only
// on the previous layer at the same or earlier groups.
class WavefrontForward {
 public:
  // Inputs start at `fill` everywhere.
  WavefrontForward(const Network& net, const BlockDims& dims, double fill = 0.0);

  void set_input(const Coordinate& c, double value);
  // Evaluates every layer at `group`. Groups must be visited in schedule
  // order, and inputs of earlier groups must be final.
  void compute(std::span<const Coordinate> group);
  // Head output block `i` at `c`, valid once c's group has been computed.
  double head(int i, const Coordinate& c) const { return head_.at(i, c.r, c.p, c.q); }
  const FeatureField& head_field() const { return head_; }

 private:
  struct Entry {
    int offset;  // (j, s) plane offset within the input field
    int mu;
    int nu;
    double weight;
  };

  const Network* net_;
  BlockDims dims_;
  FeatureField input_;
  std::vector<FeatureField> post_;  // post-activation of every hidden layer
  FeatureField raw_;
  FeatureField head_;
  // Per layer, per (i, r): unmasked taps in (j, s, mu, nu) order.
  std::vector<std::vector<std::vector<Entry>>> entries_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  int64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

// One bias-corrected Adam update. Throws NumericError on a non-finite
// gradient; parameters are untouched in that case.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamConfig& config);

}  // namespace ccn

#endif  // CCN_NETWORK_H_
