#include <gtest/gtest.h>

#include <cstring>

#include "ccn/network.h"
#include "test_util.h"

namespace ccn {
namespace {

using testing::dot;
using testing::random_block;
using testing::random_field;
using testing::randomize;
using testing::rel_error;

constexpr double kStep = 1e-6;
constexpr double kTol = 1e-5;

LayerParams random_params(int out, int in, int planes, int kernel, const MaskSet& mask,
                          uint64_t seed) {
  LayerParams p(out, in, planes, kernel);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  const int h = kernel / 2;
  for (int i = 0; i < out; ++i)
    for (int j = 0; j < in; ++j)
      for (int r = 0; r < planes; ++r)
        for (int s = 0; s < planes; ++s)
          for (int mu = -h; mu <= h; ++mu)
            for (int nu = -h; nu <= h; ++nu)
              if (mask.at(r, s, mu, nu)) p.weights[p.weight_index(i, j, r, s, mu, nu)] = u(rng);
  for (double& b : p.biases) b = u(rng);
  return p;
}

// Direct evaluation of the masked convolution sum.
FeatureField naive_conv(const FeatureField& u, const LayerParams& w, const MaskSet& m) {
  const FieldShape& s = u.shape();
  FeatureField out({w.out_blocks, s.planes, s.height, s.width});
  const int h = w.kernel / 2;
  for (int i = 0; i < w.out_blocks; ++i)
    for (int r = 0; r < s.planes; ++r)
      for (int p = 0; p < s.height; ++p)
        for (int q = 0; q < s.width; ++q) {
          double acc = w.biases[w.bias_index(i, r)];
          for (int j = 0; j < w.in_blocks; ++j)
            for (int sp = 0; sp < s.planes; ++sp)
              for (int mu = -h; mu <= h; ++mu)
                for (int nu = -h; nu <= h; ++nu) {
                  const int pp = p + mu, qq = q + nu;
                  if (pp < 0 || pp >= s.height || qq < 0 || qq >= s.width) continue;
                  acc += m.at(r, sp, mu, nu) * w.weights[w.weight_index(i, j, r, sp, mu, nu)] *
                         u.at(j, sp, pp, qq);
                }
          out.at(i, r, p, q) = acc;
        }
  return out;
}

TEST(MaskedConv, ZeroWeightsGiveBias) {
  const MaskSet mask = build_mask(CodingOrder::kZigzag3D, 3, 2, LayerKind::kHidden);
  LayerParams p(2, 1, 2, 3);
  for (size_t k = 0; k < p.biases.size(); ++k) p.biases[k] = 0.5 + k;
  const FeatureField out =
      masked_conv_forward(random_field({1, 2, 4, 5}, 1), p, mask);
  for (int i = 0; i < 2; ++i)
    for (int r = 0; r < 2; ++r)
      for (double v : out.plane(i, r)) EXPECT_EQ(v, p.biases[p.bias_index(i, r)]);
}

TEST(MaskedConv, MaskedWeightIsAnnihilated) {
  const MaskSet mask = build_mask(CodingOrder::kZigzag3D, 3, 1, LayerKind::kInput);
  LayerParams p(1, 1, 1, 3);
  p.biases[0] = 0.25;
  p.weights[p.weight_index(0, 0, 0, 0, 1, 1)] = 1.0;  // 2 > 0: masked out
  const FeatureField out = masked_conv_forward(random_field({1, 1, 4, 4}, 2), p, mask);
  for (double v : out.values()) EXPECT_EQ(v, 0.25);
}

TEST(MaskedConv, IdentityTapInHiddenLayer) {
  const MaskSet mask = build_mask(CodingOrder::kZigzag3D, 3, 1, LayerKind::kHidden);
  LayerParams p(1, 1, 1, 3);
  p.weights[p.weight_index(0, 0, 0, 0, 0, 0)] = 1.0;
  p.biases[0] = 0.75;
  FeatureField in({1, 1, 1, 1});
  in.at(0, 0, 0, 0) = 2.0;
  EXPECT_EQ(masked_conv_forward(in, p, mask).at(0, 0, 0, 0), 2.75);
}

TEST(MaskedConv, MatchesNaiveSum) {
  uint64_t seed = 10;
  for (CodingOrder order : {CodingOrder::kZigzag3D, CodingOrder::kRaster3DByRow}) {
    for (LayerKind kind : {LayerKind::kInput, LayerKind::kHidden}) {
      for (int kernel : {1, 3, 5}) {
        const MaskSet mask = build_mask(order, kernel, 3, kind);
        const LayerParams p = random_params(2, 3, 3, kernel, mask, ++seed);
        const FeatureField u = random_field({3, 3, 5, 6}, ++seed);
        const FeatureField a = masked_conv_forward(u, p, mask);
        const FeatureField b = naive_conv(u, p, mask);
        for (size_t k = 0; k < a.size(); ++k) {
          EXPECT_NEAR(a.values()[k], b.values()[k], 1e-12);
        }
      }
    }
  }
}

TEST(MaskedConv, ShapeMismatchThrows) {
  const MaskSet mask = build_mask(CodingOrder::kZigzag3D, 3, 2, LayerKind::kInput);
  LayerParams p(1, 2, 2, 3);
  EXPECT_THROW(masked_conv_forward(FeatureField({1, 2, 3, 3}), p, mask),
               std::invalid_argument);
}

TEST(MaskedConvBackward, FiniteDifferences) {
  const MaskSet mask = build_mask(CodingOrder::kZigzag3D, 3, 2, LayerKind::kHidden);
  LayerParams p = random_params(2, 2, 2, 3, mask, 5);
  FeatureField u = random_field({2, 2, 3, 4}, 6);
  const FeatureField g = random_field({2, 2, 3, 4}, 7);
  auto loss = [&]() { return dot(g, masked_conv_forward(u, p, mask)); };

  LayerParams grad = p.zeros_like();
  FeatureField grad_in(u.shape());
  masked_conv_backward(g, u, p, mask, grad, &grad_in);

  for (size_t k = 0; k < p.weights.size(); ++k) {
    if (!mask.bit(k % mask.size())) {
      EXPECT_EQ(grad.weights[k], 0.0);
      continue;
    }
    const double w = p.weights[k];
    p.weights[k] = w + kStep;
    const double up = loss();
    p.weights[k] = w - kStep;
    const double down = loss();
    p.weights[k] = w;
    EXPECT_LE(rel_error(grad.weights[k], (up - down) / (2 * kStep)), kTol) << k;
  }
  for (size_t k = 0; k < p.biases.size(); ++k) {
    const double b = p.biases[k];
    p.biases[k] = b + kStep;
    const double up = loss();
    p.biases[k] = b - kStep;
    const double down = loss();
    p.biases[k] = b;
    EXPECT_LE(rel_error(grad.biases[k], (up - down) / (2 * kStep)), kTol);
  }
  for (size_t k = 0; k < u.size(); ++k) {
    const double x = u.values()[k];
    u.values()[k] = x + kStep;
    const double up = loss();
    u.values()[k] = x - kStep;
    const double down = loss();
    u.values()[k] = x;
    EXPECT_LE(rel_error(grad_in.values()[k], (up - down) / (2 * kStep)), kTol);
  }
}

TEST(MaskedConvBackward, ZeroGradOut) {
  const MaskSet mask = build_mask(CodingOrder::kZigzag3D, 3, 2, LayerKind::kHidden);
  const LayerParams p = random_params(1, 1, 2, 3, mask, 8);
  const FeatureField u = random_field({1, 2, 3, 3}, 9);
  LayerParams grad = p.zeros_like();
  FeatureField grad_in(u.shape());
  masked_conv_backward(FeatureField({1, 2, 3, 3}), u, p, mask, grad, &grad_in);
  for (double v : grad.weights) EXPECT_EQ(v, 0.0);
  for (double v : grad.biases) EXPECT_EQ(v, 0.0);
  for (double v : grad_in.values()) EXPECT_EQ(v, 0.0);
}

TEST(Network, ZeroParametersHeads) {
  const Network bern(lossless_spec(2, 3));
  const FeatureField v = bern.forward(embed_block(random_block({8, 3, 3}, 2, 1)));
  for (double x : v.values()) EXPECT_EQ(x, 0.5);
  const Network mix(mog_spec(HeadKind::kMogWeights, 2, 3, 2, 3));
  const FeatureField w = mix.forward(random_field({1, 2, 3, 3}, 2));
  for (double x : w.values()) EXPECT_DOUBLE_EQ(x, 1.0 / 3.0);
}

TEST(Network, InitRandomStartsAtHalf) {
  Network net(lossless_light_spec());
  net.init_random(3);
  const FeatureField v = net.forward(embed_block(random_block({8, 5, 5}, 2, 2)));
  for (double x : v.values()) EXPECT_EQ(x, 0.5);
  // Masked weights are zero and unmasked ones are not all zero.
  const MaskSet& mask = net.mask(1);
  const LayerParams& layer = net.layers()[1];
  size_t nonzero = 0;
  for (size_t k = 0; k < layer.weights.size(); ++k) {
    if (!mask.bit(k % mask.size())) {
      EXPECT_EQ(layer.weights[k], 0.0);
    } else if (layer.weights[k] != 0.0) {
      ++nonzero;
    }
  }
  EXPECT_GT(nonzero, 0u);
}

TEST(Network, SpecValidation) {
  NetworkSpec s = lossless_spec(2, 3);
  s.residuals.push_back({3, 2});
  EXPECT_THROW(Network{s}, std::invalid_argument);
  s = lossless_spec(2, 4);
  EXPECT_THROW(Network{s}, std::invalid_argument);
  s = lossless_spec(2, 3);
  s.residuals.push_back({1, 10});  // into the output layer
  EXPECT_THROW(Network{s}, std::invalid_argument);
}

NetworkSpec small_spec(HeadKind head, int planes, int out_blocks, CodingOrder order) {
  NetworkSpec s;
  s.depth = 4;
  s.kernel = 3;
  s.feature_blocks = 2;
  s.planes = planes;
  s.out_blocks = out_blocks;
  s.residuals = {{0, 2}};
  s.head = head;
  s.order = order;
  return s;
}

TEST(Network, FullBackwardFiniteDifferences) {
  for (HeadKind head : {HeadKind::kBernoulli, HeadKind::kMogWeights, HeadKind::kMogMeans,
                        HeadKind::kMogVariances}) {
    const int out = head == HeadKind::kBernoulli ? 1 : 3;
    Network net(small_spec(head, 2, out, CodingOrder::kZigzag3D));
    randomize(net, 21 + static_cast<int>(head));
    FeatureField input = random_field({1, 2, 3, 3}, 31);
    const FeatureField g = random_field({out, 2, 3, 3}, 41);
    auto loss = [&]() { return dot(g, net.forward(input)); };

    Tape tape;
    net.forward(input, &tape);
    FeatureField grad_in;
    const auto grads = net.backward(tape, g, &grad_in);
    const std::vector<double> analytic = Network::flatten(grads);
    std::vector<double> params = net.flat_parameters();
    ASSERT_EQ(analytic.size(), params.size());
    for (size_t k = 0; k < params.size(); ++k) {
      const double x = params[k];
      params[k] = x + kStep;
      net.set_flat_parameters(params);
      const double up = loss();
      params[k] = x - kStep;
      net.set_flat_parameters(params);
      const double down = loss();
      params[k] = x;
      net.set_flat_parameters(params);
      EXPECT_LE(rel_error(analytic[k], (up - down) / (2 * kStep)), kTol)
          << "head " << static_cast<int>(head) << " param " << k;
    }
    for (size_t k = 0; k < input.size(); ++k) {
      const double x = input.values()[k];
      input.values()[k] = x + kStep;
      const double up = loss();
      input.values()[k] = x - kStep;
      const double down = loss();
      input.values()[k] = x;
      EXPECT_LE(rel_error(grad_in.values()[k], (up - down) / (2 * kStep)), kTol);
    }
  }
}

TEST(Network, ConstantLossHasZeroGradient) {
  Network net(small_spec(HeadKind::kBernoulli, 2, 1, CodingOrder::kZigzag3D));
  randomize(net, 3);
  Tape tape;
  net.forward(random_field({1, 2, 3, 3}, 4), &tape);
  for (double v : Network::flatten(net.backward(tape, FeatureField({1, 2, 3, 3})))) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Network, CausalityByPerturbation) {
  for (CodingOrder order : {CodingOrder::kZigzag3D, CodingOrder::kRaster3DByRow}) {
    NetworkSpec spec = lossless_spec(3, 3, order);
    spec.planes = 2;
    Network net(spec);
    randomize(net, 77);
    const BlockDims dims{2, 4, 4};
    const CodeBlock3D base = random_block(dims, 2, 5);
    const FeatureField ref = net.forward(embed_block(base));
    for (int r = 0; r < 2; ++r)
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q) {
          CodeBlock3D changed = base;
          changed.set({r, p, q}, 1 - base.at(r, p, q));
          const FeatureField out = net.forward(embed_block(changed));
          for (int r2 = 0; r2 < 2; ++r2)
            for (int p2 = 0; p2 < 4; ++p2)
              for (int q2 = 0; q2 < 4; ++q2) {
                if (context_of({r2, p2, q2}, dims, order)({r, p, q})) continue;
                EXPECT_EQ(out.at(0, r2, p2, q2), ref.at(0, r2, p2, q2));
              }
        }
  }
}

TEST(Network, TranslationInvariance) {
  NetworkSpec spec = small_spec(HeadKind::kBernoulli, 2, 1, CodingOrder::kZigzag3D);
  Network net(spec);
  randomize(net, 8);
  const FeatureField small = random_field({1, 2, 10, 10}, 9);
  FeatureField big({1, 2, 14, 15});
  const int dp = 2, dq = 3;
  for (int r = 0; r < 2; ++r)
    for (int p = 0; p < 10; ++p)
      for (int q = 0; q < 10; ++q) big.at(0, r, p + dp, q + dq) = small.at(0, r, p, q);
  const FeatureField a = net.forward(small);
  const FeatureField b = net.forward(big);
  const int margin = spec.depth * (spec.kernel / 2);
  for (int r = 0; r < 2; ++r)
    for (int p = margin; p < 10 - margin; ++p)
      for (int q = margin; q < 10 - margin; ++q)
        EXPECT_EQ(a.at(0, r, p, q), b.at(0, r, p + dp, q + dq));
}

TEST(Network, GroupPlansMatchFullPass) {
  for (CodingOrder order : {CodingOrder::kZigzag3D, CodingOrder::kRaster3DByRow}) {
    NetworkSpec spec = lossless_spec(2, 3, order);
    Network net(spec);
    randomize(net, 12);
    const BlockDims dims{8, 7, 9};
    const FeatureField input = embed_block(random_block(dims, 2, 13));
    const FeatureField full = net.forward(input);
    const GroupSchedule schedule = build_schedule(dims, order);
    for (size_t k = 0; k < schedule.group_count(); ++k) {
      const ForwardPlan plan = plan_for_group(spec, dims, static_cast<int>(k));
      const FeatureField part = net.forward(input, nullptr, &plan);
      for (const Coordinate& c : schedule.groups[k]) {
        EXPECT_EQ(part.at(0, c.r, c.p, c.q), full.at(0, c.r, c.p, c.q));
      }
    }
  }
}

TEST(Network, WavefrontMatchesFullPass) {
  for (HeadKind head : {HeadKind::kBernoulli, HeadKind::kMogWeights,
                        HeadKind::kMogVariances}) {
    for (CodingOrder order : {CodingOrder::kZigzag3D, CodingOrder::kRaster3DByRow}) {
      const int out = head == HeadKind::kBernoulli ? 1 : 3;
      NetworkSpec spec = lossless_spec(2, 3, order);
      spec.planes = 3;
      spec.out_blocks = out;
      spec.head = head;
      Network net(spec);
      randomize(net, 14);
      const BlockDims dims{3, 6, 5};
      const FeatureField input = random_field({1, 3, 6, 5}, 15);
      const FeatureField full = net.forward(input);
      WavefrontForward wave(net, dims);
      for (int r = 0; r < 3; ++r)
        for (int p = 0; p < 6; ++p)
          for (int q = 0; q < 5; ++q) wave.set_input({r, p, q}, input.at(0, r, p, q));
      for (const auto& group : build_schedule(dims, order).groups) wave.compute(group);
      const auto a = wave.head_field().values();
      const auto b = full.values();
      ASSERT_EQ(a.size(), b.size());
      EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)), 0);
    }
  }
}

TEST(Network, FlatParametersRoundtrip) {
  Network net(lossless_light_spec());
  randomize(net, 4);
  const auto flat = net.flat_parameters();
  EXPECT_EQ(flat.size(), net.parameter_count());
  Network other(lossless_light_spec());
  other.set_flat_parameters(flat);
  EXPECT_EQ(other.flat_parameters(), flat);
  other.round_to_float();
  for (double v : other.flat_parameters()) {
    EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> params = {1.0, -2.0, 3.0};
  const std::vector<double> before = params;
  AdamState state;
  adam_step(params, std::vector<double>(3, 0.0), state, {});
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> params = {0.0, 0.0};
  AdamState state;
  AdamConfig config;
  config.learning_rate = 1e-3;
  adam_step(params, std::vector<double>{0.7, -3.0}, state, config);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  EXPECT_NEAR(params[0], -1e-3 * 0.7 / (0.7 + 1e-8), 1e-15);
  EXPECT_NEAR(params[1], 1e-3 * 3.0 / (3.0 + 1e-8), 1e-15);
}

TEST(Adam, NonFiniteGradientThrows) {
  std::vector<double> params = {1.0};
  AdamState state;
  EXPECT_THROW(adam_step(params, std::vector<double>{NAN}, state, {}), NumericError);
  EXPECT_EQ(params[0], 1.0);
}

TEST(Adam, MaskedWeightsStayZero) {
  Network net(small_spec(HeadKind::kBernoulli, 2, 1, CodingOrder::kZigzag3D));
  randomize(net, 5);
  AdamState state;
  const FeatureField input = embed_block(random_block({2, 4, 4}, 2, 6));
  for (int step = 0; step < 20; ++step) {
    Tape tape;
    const FeatureField v = net.forward(input, &tape);
    auto params = net.flat_parameters();
    adam_step(params, Network::flatten(net.backward(tape, v)), state, {.learning_rate = 1e-2});
    net.set_flat_parameters(params);
  }
  for (int t = 0; t < net.spec().depth; ++t) {
    const LayerParams& layer = net.layers()[t];
    const MaskSet& mask = net.mask(t);
    for (size_t k = 0; k < layer.weights.size(); ++k) {
      if (!mask.bit(k % mask.size())) {
        EXPECT_EQ(layer.weights[k], 0.0);
      }
    }
  }
}

}  // namespace
}  // namespace ccn
