#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "ccn/codec.h"
#include "ccn/eval.h"
#include "ccn/model.h"
#include "ccn/ordering.h"
#include "ccn/quantizer.h"
#include "ccn/synthetic.h"
#include "ccn/train.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFormat = 2;
constexpr int kExitNumeric = 3;

std::vector<uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void print_epoch(const ccn::EpochReport& r) {
  std::printf("epoch %3d  bpp %.5f  lr %.1e  %.1fs\n", r.epoch, r.bpp, r.learning_rate,
              r.seconds);
  std::fflush(stdout);
}

struct TrainArgs {
  std::string out;
  int epochs = 100;
  int batch = 8;
  double lr = 1e-4;
  double min_lr = 1e-6;
  uint64_t seed = 1;
  std::string order = "zigzag3d";
  double budget = 0.0;
};

void add_train_args(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--out", a.out, "Model file to write")->required();
  cmd->add_option("--epochs", a.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--batch", a.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", a.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--min-lr", a.min_lr, "Stop once the rate decays below this");
  cmd->add_option("--seed", a.seed, "Random seed");
  cmd->add_option("--order", a.order, "raster2d, zigzag2d, zigzag3d or raster3d-by-row");
  cmd->add_option("--time-budget", a.budget, "Stop after this many seconds (0 = none)");
}

ccn::TrainConfig make_config(const TrainArgs& a) {
  ccn::TrainConfig c;
  c.epochs = a.epochs;
  c.batch_size = a.batch;
  c.lr.initial = a.lr;
  c.lr.minimum = a.min_lr;
  c.seed = a.seed;
  c.order = ccn::parse_order(a.order);
  c.time_budget_seconds = a.budget;
  c.on_epoch = print_epoch;
  return c;
}

std::vector<ccn::CodeBlock3D> quantized_fields(const ccn::Model& model, int count,
                                               int height, int width, uint64_t seed,
                                               bool iid) {
  const auto fields =
      iid ? ccn::gaussian_fields(count, model.planes(), height, width, seed)
          : ccn::correlated_fields(count, model.planes(), height, width, seed);
  std::vector<ccn::CodeBlock3D> blocks;
  for (const auto& f : fields) blocks.push_back(ccn::quantize(f, model.centers).indices);
  return blocks;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Learned lossless image and code-block entropy coder"};
  app.require_subcommand(1);

  TrainArgs tl;
  std::string tl_data;
  bool tl_light = false;
  int tl_grid = 1;
  auto* train_lossless = app.add_subcommand("train-lossless", "Train a bit-plane model");
  train_lossless->add_option("--data", tl_data, "Directory of .pgm images")->required();
  train_lossless->add_flag("--light", tl_light, "Light preset (N=4, S=3)");
  train_lossless->add_option("--r", tl_grid, "Train on R x R patches")
      ->check(CLI::PositiveNumber);
  add_train_args(train_lossless, tl);

  TrainArgs tm;
  tm.lr = 1e-3;
  int tm_m = 1, tm_l = 8, tm_c = 3, tm_n = 8, tm_s = 5;
  int tm_count = 64, tm_h = 32, tm_w = 32;
  uint64_t tm_data_seed = 7;
  bool tm_iid = false;
  auto* train_mog = app.add_subcommand("train-mog", "Train a MoG code-block model");
  train_mog->add_option("--m", tm_m, "Channels M")->check(CLI::PositiveNumber);
  train_mog->add_option("--l", tm_l, "Quantization levels L")->check(CLI::Range(2, 65535));
  train_mog->add_option("--c", tm_c, "Mixture components C")->check(CLI::PositiveNumber);
  train_mog->add_option("--n", tm_n, "Feature blocks N")->check(CLI::PositiveNumber);
  train_mog->add_option("--s", tm_s, "Kernel size S (odd)")->check(CLI::PositiveNumber);
  train_mog->add_option("--count", tm_count, "Synthetic fields")->check(CLI::PositiveNumber);
  train_mog->add_option("--height", tm_h, "Field height")->check(CLI::PositiveNumber);
  train_mog->add_option("--width", tm_w, "Field width")->check(CLI::PositiveNumber);
  train_mog->add_option("--data-seed", tm_data_seed, "Seed of the synthetic corpus");
  train_mog->add_flag("--iid", tm_iid, "Train on i.i.d. normal fields");
  add_train_args(train_mog, tm);

  std::string model_path, in_path, out_path;
  int grid = 1;
  auto* encode = app.add_subcommand("encode", "Compress a PGM image");
  encode->add_option("--model", model_path)->required();
  encode->add_option("--in", in_path, "Input .pgm")->required();
  encode->add_option("--out", out_path, "Output .ccnb")->required();
  encode->add_option("--r", grid, "Code R x R independent patches")
      ->check(CLI::PositiveNumber);

  auto* decode = app.add_subcommand("decode", "Decompress to a PGM image");
  decode->add_option("--model", model_path)->required();
  decode->add_option("--in", in_path, "Input .ccnb")->required();
  decode->add_option("--out", out_path, "Output .pgm")->required();

  std::string eval_data, eval_report;
  int ev_count = 16, ev_h = 32, ev_w = 32;
  uint64_t ev_seed = 11;
  bool ev_iid = false;
  auto* eval = app.add_subcommand("eval", "Measure bitrate and coding time");
  eval->add_option("--model", model_path)->required();
  eval->add_option("--data", eval_data, "Directory of .pgm images (lossless models)");
  eval->add_option("--r", grid, "Patch grid")->check(CLI::PositiveNumber);
  eval->add_option("--report", eval_report, "Also write key=value report here");
  eval->add_option("--count", ev_count, "Synthetic fields (MoG models)");
  eval->add_option("--height", ev_h, "Field height (MoG models)");
  eval->add_option("--width", ev_w, "Field width (MoG models)");
  eval->add_option("--seed", ev_seed, "Synthetic field seed (MoG models)");
  eval->add_flag("--iid", ev_iid, "Evaluate on i.i.d. normal fields");

  int d_m = 8, d_h = 0, d_w = 0, d_r = 0;
  auto* dop_cmd = app.add_subcommand("dop", "Degree of parallelism of the zigzag schedule");
  dop_cmd->set_help_flag("--help", "Print this help message and exit");
  dop_cmd->add_option("--m", d_m)->check(CLI::PositiveNumber);
  dop_cmd->add_option("--h", d_h)->required()->check(CLI::PositiveNumber);
  dop_cmd->add_option("--w", d_w)->required()->check(CLI::PositiveNumber);
  dop_cmd->add_option("--r", d_r, "Light mode with R x R patches")
      ->check(CLI::PositiveNumber);

  std::string m_order = "zigzag3d", m_layer = "input";
  int m_s = 5, m_m = 8, m_h = 0, m_w = 0;
  auto* masks = app.add_subcommand("masks", "Print causal masks or the group schedule");
  masks->add_option("--order", m_order);
  masks->add_option("--s", m_s, "Kernel size")->check(CLI::PositiveNumber);
  masks->add_option("--m", m_m, "Planes")->check(CLI::PositiveNumber);
  masks->add_option("--layer", m_layer, "input or hidden")
      ->check(CLI::IsMember({"input", "hidden"}));
  masks->add_option("--schedule-h", m_h, "Also print the schedule for this height");
  masks->add_option("--schedule-w", m_w, "... and width");

  std::string s_out;
  int s_count = 64, s_size = 64;
  uint64_t s_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write a synthetic structured image corpus");
  synth->add_option("--out", s_out, "Output directory")->required();
  synth->add_option("--count", s_count)->check(CLI::PositiveNumber);
  synth->add_option("--size", s_size)->check(CLI::PositiveNumber);
  synth->add_option("--seed", s_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (*train_lossless) {
    ccn::TrainConfig config = make_config(tl);
    config.light = tl_light;
    config.grid = tl_grid;
    const auto corpus = ccn::load_pgm_dir(tl_data);
    const auto result = ccn::train_lossless(corpus, config);
    ccn::save_model(tl.out, result.model);
  } else if (*train_mog) {
    ccn::TrainConfig config = make_config(tm);
    ccn::MogConfig mog;
    mog.levels = tm_l;
    mog.components = tm_c;
    mog.feature_blocks = tm_n;
    mog.kernel = tm_s;
    const auto corpus = tm_iid
                            ? ccn::gaussian_fields(tm_count, tm_m, tm_h, tm_w, tm_data_seed)
                            : ccn::correlated_fields(tm_count, tm_m, tm_h, tm_w, tm_data_seed);
    const auto result = ccn::train_mog(corpus, mog, config);
    ccn::save_model(tm.out, result.model);
  } else if (*encode) {
    const ccn::Model model = ccn::load_model(model_path);
    const ccn::GrayImage img = ccn::read_pgm(in_path);
    write_bytes(out_path, ccn::serialize_payload(ccn::encode_lossless(img, model, grid)));
  } else if (*decode) {
    const ccn::Model model = ccn::load_model(model_path);
    const auto payload = ccn::parse_payload(read_bytes(in_path));
    ccn::write_pgm(out_path, ccn::decode_lossless(payload, model));
  } else if (*eval) {
    const ccn::Model model = ccn::load_model(model_path);
    ccn::EvalReport report;
    if (model.mode == ccn::ModelMode::kBernoulli) {
      if (eval_data.empty()) throw std::invalid_argument("--data is required");
      report = ccn::evaluate_lossless(ccn::load_pgm_dir(eval_data), model, grid);
    } else {
      report = ccn::evaluate_mog(quantized_fields(model, ev_count, ev_h, ev_w, ev_seed, ev_iid),
                                 model);
    }
    std::cout << ccn::report_text(report);
    if (!eval_report.empty()) {
      std::ofstream out(eval_report);
      if (!out) throw std::runtime_error("cannot write " + eval_report);
      out << ccn::report_key_values(report);
    }
  } else if (*dop_cmd) {
    const ccn::Rational value =
        d_r > 0 ? ccn::dop_light(d_m, d_h, d_w, d_r) : ccn::dop(d_m, d_h, d_w);
    std::cout << value.str() << " = " << value.value() << "\n";
  } else if (*masks) {
    const auto order = ccn::parse_order(m_order);
    const auto kind = m_layer == "input" ? ccn::LayerKind::kInput : ccn::LayerKind::kHidden;
    std::cout << ccn::render_mask(ccn::build_mask(order, m_s, m_m, kind));
    if (m_h > 0 && m_w > 0) {
      std::cout << "\n"
                << ccn::render_schedule(ccn::build_schedule({m_m, m_h, m_w}, order));
    }
  } else if (*synth) {
    const auto images = ccn::structured_images(s_count, s_size, s_size, s_seed);
    for (size_t k = 0; k < images.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "/img%04zu.pgm", k);
      ccn::write_pgm(s_out + name, images[k]);
    }
  }
  return 0;
}

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ccn::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const ccn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
