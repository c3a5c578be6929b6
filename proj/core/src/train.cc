#include "ccn/train.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "ccn/entropy.h"
#include "ccn/quantizer.h"

namespace ccn {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Plateau bookkeeping shared by both trainers.
class Plateau {
 public:
  explicit Plateau(const LrSchedule& schedule)
      : schedule_(schedule), rate_(schedule.initial) {}

  double rate() const { return rate_; }
  bool done() const { return rate_ < schedule_.minimum; }

  void observe(double loss) {
    if (loss < best_ * (1.0 - schedule_.min_improvement)) {
      best_ = loss;
      stale_ = 0;
      return;
    }
    best_ = std::min(best_, loss);
    if (++stale_ >= schedule_.patience) {
      rate_ *= schedule_.decay;
      stale_ = 0;
    }
  }

 private:
  LrSchedule schedule_;
  double rate_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

std::vector<std::vector<size_t>> make_batches(size_t n, int batch_size,
                                              std::mt19937_64& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<size_t>> batches;
  for (size_t k = 0; k < n; k += batch_size) {
    batches.emplace_back(order.begin() + k,
                         order.begin() + std::min(n, k + batch_size));
  }
  return batches;
}

void add_into(std::vector<double>& acc, const std::vector<double>& v) {
  if (acc.empty()) {
    acc = v;
    return;
  }
  for (size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
}

void scale_field(FeatureField& f, double s) {
  for (double& v : f.values()) v *= s;
}

void update(Network& net, AdamState& state, const std::vector<double>& grads,
            double rate) {
  std::vector<double> params = net.flat_parameters();
  adam_step(params, grads, state, AdamConfig{.learning_rate = rate});
  net.set_flat_parameters(params);
}

void check_finite(double loss, int epoch, size_t batch) {
  if (!std::isfinite(loss)) {
    throw NumericError("training diverged: non-finite loss at epoch " +
                       std::to_string(epoch) + ", batch " + std::to_string(batch));
  }
}

void finish_epoch(const TrainConfig& config, TrainResult& result, int epoch,
                  double bits, double codes, const Plateau& plateau,
                  Clock::time_point start) {
  EpochReport report{epoch, bits / codes, plateau.rate(), seconds_since(start)};
  result.history.push_back(report);
  if (config.on_epoch) config.on_epoch(report);
}

bool out_of_time(const TrainConfig& config, Clock::time_point start) {
  return config.time_budget_seconds > 0 &&
         seconds_since(start) >= config.time_budget_seconds;
}

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || grid < 1) {
    throw std::invalid_argument("epochs, batch size and grid must be positive");
  }
  if (!(lr.initial > 0) || !(lr.minimum > 0) || !(lr.decay > 0 && lr.decay < 1) ||
      lr.patience < 1 || lr.min_improvement < 0) {
    throw std::invalid_argument("invalid learning-rate schedule");
  }
}

TrainResult train_lossless(std::span<const GrayImage> corpus,
                           const TrainConfig& config,
                           const NetworkSpec* spec_override) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");
  std::vector<CodeBlock3D> blocks;
  for (const GrayImage& img : corpus) {
    for (const GrayImage& patch : split_patches(img, config.grid)) {
      blocks.push_back(to_bitplanes(patch));
    }
  }
  const NetworkSpec spec = spec_override ? *spec_override
                           : config.light ? lossless_light_spec(config.order)
                                          : lossless_spec(16, 5, config.order);
  if (spec.planes != 8 || spec.head != HeadKind::kBernoulli) {
    throw std::invalid_argument("lossless training needs an 8-plane Bernoulli spec");
  }
  Network net(spec);
  net.init_random(config.seed);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  AdamState adam;
  Plateau plateau(config.lr);
  TrainResult result;
  const auto start = Clock::now();

  for (int epoch = 0; epoch < config.epochs && !plateau.done(); ++epoch) {
    double epoch_bits = 0.0;
    double epoch_pixels = 0.0;
    const auto batches = make_batches(blocks.size(), config.batch_size, rng);
    for (size_t b = 0; b < batches.size(); ++b) {
      double pixels = 0.0;
      for (size_t idx : batches[b]) {
        pixels += static_cast<double>(blocks[idx].height()) * blocks[idx].width();
      }
      double bits = 0.0;
      std::vector<double> grads;
      Tape tape;
      for (size_t idx : batches[b]) {
        const CodeBlock3D& block = blocks[idx];
        const FeatureField v = net.forward(embed_block(block), &tape);
        bits += bernoulli_nll(block, v);
        FeatureField g = bernoulli_nll_grad(block, v);
        scale_field(g, 1.0 / pixels);
        add_into(grads, Network::flatten(net.backward(tape, g)));
      }
      check_finite(bits, epoch, b);
      update(net, adam, grads, plateau.rate());
      epoch_bits += bits;
      epoch_pixels += pixels;
    }
    plateau.observe(epoch_bits / epoch_pixels);
    finish_epoch(config, result, epoch, epoch_bits, epoch_pixels, plateau, start);
    if (out_of_time(config, start)) break;
  }
  result.model = Model::bernoulli(std::move(net));
  result.model.round_to_float();
  return result;
}

void init_mog_heads(Network& means, Network& variances,
                    const std::vector<std::vector<double>>& centers) {
  LayerParams& mu = means.layers().back();
  LayerParams& var = variances.layers().back();
  const int c = mu.out_blocks;
  for (int r = 0; r < mu.planes; ++r) {
    const double lo = centers[r].front();
    const double hi = centers[r].back();
    const double span = std::max(hi - lo, 1e-3);
    const double sigma = std::max(span / c - kSigmaFloor, 1e-3);
    for (int i = 0; i < c; ++i) {
      mu.biases[mu.bias_index(i, r)] = lo + span * (i + 0.5) / c;
      var.biases[var.bias_index(i, r)] = inverse_softplus(sigma);
    }
  }
}

TrainResult train_mog(std::span<const FeatureField> corpus, const MogConfig& mog,
                      const TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");
  if (mog.levels < 2 || mog.components < 1) {
    throw std::invalid_argument("MoG needs L >= 2 and C >= 1");
  }
  const int planes = corpus.front().shape().planes;
  for (const FeatureField& f : corpus) {
    if (f.shape().blocks != 1 || f.shape().planes != planes) {
      throw std::invalid_argument("latent fields must share M and have one block");
    }
  }
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  auto batches = make_batches(corpus.size(), config.batch_size, rng);

  std::vector<double> lo(planes, std::numeric_limits<double>::infinity());
  std::vector<double> hi(planes, -std::numeric_limits<double>::infinity());
  for (size_t idx : batches.front()) {
    for (int r = 0; r < planes; ++r) {
      for (double v : corpus[idx].plane(0, r)) {
        if (!std::isfinite(v)) throw NumericError("non-finite latent value");
        lo[r] = std::min(lo[r], v);
        hi[r] = std::max(hi[r], v);
      }
    }
  }
  QuantizerCenters centers = QuantizerCenters::uniform(lo, hi, mog.levels);

  static constexpr HeadKind kHeads[3] = {HeadKind::kMogWeights, HeadKind::kMogMeans,
                                         HeadKind::kMogVariances};
  std::vector<Network> nets;
  for (int k = 0; k < 3; ++k) {
    nets.emplace_back(mog_spec(kHeads[k], planes, mog.components, mog.feature_blocks,
                               mog.kernel, config.order));
    nets.back().init_random(config.seed + k);
  }
  init_mog_heads(nets[1], nets[2], centers.centers());

  std::vector<AdamState> adam(3);
  AdamState center_adam;
  Plateau plateau(config.lr);
  TrainResult result;
  const auto start = Clock::now();

  for (int epoch = 0; epoch < config.epochs && !plateau.done(); ++epoch) {
    if (epoch > 0) batches = make_batches(corpus.size(), config.batch_size, rng);
    double epoch_bits = 0.0;
    double epoch_codes = 0.0;
    for (size_t b = 0; b < batches.size(); ++b) {
      double codes = 0.0;
      for (size_t idx : batches[b]) codes += static_cast<double>(corpus[idx].size());
      const auto table = centers.centers();
      double bits = 0.0;
      std::vector<std::vector<double>> grads(3);
      std::vector<std::vector<double>> value_grads(
          planes, std::vector<double>(mog.levels, 0.0));
      std::vector<std::vector<double>> raw_grads = value_grads;
      std::vector<Tape> tapes(3);
      for (size_t idx : batches[b]) {
        const FeatureField& z = corpus[idx];
        const QuantizedBlock q = quantize(z, table);
        MogField field;
        field.weights = nets[0].forward(q.values, &tapes[0]);
        field.means = nets[1].forward(q.values, &tapes[1]);
        field.variances = nets[2].forward(q.values, &tapes[2]);
        MogField head_grads;
        bits += mog_nll_with_grads(q.indices, field, table, &head_grads);
        FeatureField* per_head[3] = {&head_grads.weights, &head_grads.means,
                                     &head_grads.variances};
        // Straight-through: the network input is the assigned center, so
        // its gradient lands on that center.
        FeatureField grad_input(q.values.shape());
        for (int k = 0; k < 3; ++k) {
          scale_field(*per_head[k], 1.0 / codes);
          add_into(grads[k],
                   Network::flatten(nets[k].backward(tapes[k], *per_head[k], &grad_input)));
        }
        const FieldShape& s = z.shape();
        for (int r = 0; r < planes; ++r) {
          for (int p = 0; p < s.height; ++p) {
            for (int col = 0; col < s.width; ++col) {
              value_grads[r][q.indices.at(r, p, col)] += grad_input.at(0, r, p, col);
            }
          }
        }
        const CenterLoss mse = center_loss_and_grads(z, q.indices, centers);
        const double share = mog.center_weight * static_cast<double>(z.size()) / codes;
        for (int r = 0; r < planes; ++r) {
          for (int l = 0; l < mog.levels; ++l) {
            raw_grads[r][l] += share * mse.raw_grads[r][l];
          }
        }
      }
      std::vector<double> center_flat;
      std::vector<double> center_params;
      for (int r = 0; r < planes; ++r) {
        const auto through = centers_backward(centers.raw(r), value_grads[r]);
        for (int l = 0; l < mog.levels; ++l) {
          center_flat.push_back(raw_grads[r][l] + through[l]);
          center_params.push_back(centers.raw(r)[l]);
        }
      }
      check_finite(bits, epoch, b);
      for (int k = 0; k < 3; ++k) update(nets[k], adam[k], grads[k], plateau.rate());
      adam_step(center_params, center_flat, center_adam,
                AdamConfig{.learning_rate = plateau.rate()});
      for (int r = 0; r < planes; ++r) {
        std::copy_n(center_params.begin() + r * mog.levels, mog.levels,
                    centers.raw(r).begin());
      }
      epoch_bits += bits;
      epoch_codes += codes;
    }
    plateau.observe(epoch_bits / epoch_codes);
    finish_epoch(config, result, epoch, epoch_bits, epoch_codes, plateau, start);
    if (out_of_time(config, start)) break;
  }
  result.model = Model::mog(std::move(nets[0]), std::move(nets[1]), std::move(nets[2]),
                            centers.centers());
  result.model.round_to_float();
  return result;
}

}  // namespace ccn
