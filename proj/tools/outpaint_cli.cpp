// Command-line front end: train, sample, eval, rpe-dump and bench
// subcommands over the outpaint library. Exit codes: 0 success, 1 any
// validation or runtime failure, 2 usage errors.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "outpaint/checkpoint.hpp"
#include "outpaint/config.hpp"
#include "outpaint/dataset.hpp"
#include "outpaint/imageio.hpp"
#include "outpaint/metrics.hpp"
#include "outpaint/outpaint.hpp"

namespace fs = std::filesystem;
using namespace outpaint;

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("OUTPAINT_OUT")) return env;
  return "out";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::IoFailure,
          "cannot create output directory " + dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorKind::IoFailure, "cannot open " + path);
  f << text;
  require(f.good(), ErrorKind::IoFailure, "write failed for " + path);
}

void echo_effective_config(const RunConfig& cfg, const std::string& out_dir) {
  write_text(out_dir + "/config.effective", serialize_run_config(cfg));
}

std::vector<Image> load_data(const RunConfig& cfg) {
  const std::string& spec = cfg.data;
  if (spec.rfind("synthetic:", 0) == 0) {
    const std::int64_t count = std::stoll(spec.substr(10));
    SynthSpec synth;
    synth.resolution = cfg.train.data_resolution;
    synth.channels = cfg.train.model.channels;
    return make_synthetic_dataset(synth, cfg.train.seed, count);
  }
  return load_image_folder(spec, cfg.train.data_resolution,
                           cfg.train.model.channels);
}

// Shared flag plumbing: config file first, then key=value overrides.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    cmd->add_option("--set", sets,
                    "override a config key, e.g. --set iterations=100");
  }

  RunConfig resolve(const std::string& out_flag) const {
    RunConfig cfg;
    cfg.out_dir = default_out_dir();
    if (!config_path.empty()) parse_config_file(cfg, config_path);
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      require(eq != std::string::npos, ErrorKind::ConfigError,
              "--set expects key=value, got '" + kv + "'");
      apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out_flag.empty()) cfg.out_dir = out_flag;
    return cfg;
  }
};

int cmd_train(const ConfigArgs& args, const std::string& out_flag,
              const std::string& resume, std::int64_t checkpoint_every,
              std::int64_t log_every) {
  RunConfig cfg = args.resolve(out_flag);
  cfg.validate();
  ensure_dir(cfg.out_dir);
  echo_effective_config(cfg, cfg.out_dir);

  const std::vector<Image> images = load_data(cfg);
  TrainState state;
  if (!resume.empty()) {
    state = load_checkpoint(resume);
    std::printf("resumed iter=%lld from %s\n",
                static_cast<long long>(state.iter), resume.c_str());
  } else {
    state = init_train_state(cfg.train);
  }

  const std::int64_t total = cfg.train.iterations;
  while (state.iter < total) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batch = draw_batch(state, images);
    const double loss = train_step(state, batch);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
    if (log_every > 0 &&
        (state.iter % log_every == 0 || state.iter == total)) {
      std::printf("iter=%lld loss=%.6f ms=%.1f\n",
                  static_cast<long long>(state.iter), loss, ms);
      std::fflush(stdout);
    }
    if (checkpoint_every > 0 && state.iter % checkpoint_every == 0 &&
        state.iter < total) {
      char name[64];
      std::snprintf(name, sizeof(name), "/ckpt_%08lld.bin",
                    static_cast<long long>(state.iter));
      save_checkpoint(state, cfg.out_dir + name);
    }
  }
  save_checkpoint(state, cfg.out_dir + "/model.bin");
  std::printf("saved %s/model.bin (params=%lld, crop_fallbacks=%lld)\n",
              cfg.out_dir.c_str(), static_cast<long long>(state.params.size()),
              static_cast<long long>(state.crop_fallbacks));
  return 0;
}

std::string placement_sidecar(const OutpaintResult& res) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "placement_top=%d\nplacement_left=%d\nplacement_height=%d\n"
                "placement_width=%d\nh_scale=%.17g\nw_scale=%.17g\n"
                "denoise_calls=%lld\nclamp_fraction=%.6f\n",
                res.placement.top, res.placement.left, res.placement.height,
                res.placement.width, res.h_scale, res.w_scale,
                static_cast<long long>(res.denoise_calls), res.clamp_fraction);
  out = buf;
  return out;
}

int cmd_sample(const ConfigArgs& args, const std::string& out_flag) {
  RunConfig cfg = args.resolve(out_flag);
  require(!cfg.checkpoint.empty(), ErrorKind::ConfigError,
          "sample: checkpoint path is required (--set checkpoint=...)");
  require(!cfg.input.empty(), ErrorKind::ConfigError,
          "sample: input image path is required (--set input=...)");
  const TrainState state = load_checkpoint(cfg.checkpoint);
  cfg.train = state.cfg;  // the model's own config wins for sampling
  cfg.validate();
  ensure_dir(cfg.out_dir);
  echo_effective_config(cfg, cfg.out_dir);

  const Image input = to_unit(read_image(cfg.input, state.cfg.model.channels));
  const SamplerModel model = sampler_model(state);
  const SampleConfig sample_cfg = cfg.sample_config();
  for (int i = 0; i < cfg.sample_count; ++i) {
    Rng rng(cfg.sample_seed + static_cast<std::uint64_t>(i));
    const OutpaintResult res = outpaint::outpaint(model, input, sample_cfg, rng);
    char stem[64];
    std::snprintf(stem, sizeof(stem), "/sample_%03d", i);
    const std::string base = cfg.out_dir + stem;
    write_image(base + ".png", from_unit(res.image));
    write_text(base + ".meta", placement_sidecar(res));
    std::printf("%s.png %dx%d calls=%lld ms=%.1f\n", base.c_str(),
                res.image.w, res.image.h,
                static_cast<long long>(res.denoise_calls), res.wall_ms);
  }
  return 0;
}

int cmd_eval(const ConfigArgs& args, const std::string& out_flag) {
  RunConfig cfg = args.resolve(out_flag);
  require(!cfg.checkpoint.empty(), ErrorKind::ConfigError,
          "eval: checkpoint path is required (--set checkpoint=...)");
  const TrainState state = load_checkpoint(cfg.checkpoint);
  cfg.train = state.cfg;
  cfg.validate();
  ensure_dir(cfg.out_dir);
  echo_effective_config(cfg, cfg.out_dir);

  const std::vector<Image> images = load_data(cfg);
  const int count =
      std::min<int>(cfg.eval_count, static_cast<int>(images.size()));
  const SamplerModel model = sampler_model(state);
  const SampleConfig sample_cfg = cfg.sample_config();

  std::string report;
  std::vector<double> values;
  for (int i = 0; i < count; ++i) {
    Rng rng(cfg.sample_seed + static_cast<std::uint64_t>(i));
    const OutpaintResult res =
        outpaint::outpaint(model, images[static_cast<std::size_t>(i)],
                           sample_cfg, rng);
    const double v = center_psnr(res.image, images[static_cast<std::size_t>(i)],
                                 res.placement, cfg.psnr_max);
    values.push_back(v);
    char line[128];
    std::snprintf(line, sizeof(line), "image=%d center_psnr=%.6f\n", i, v);
    report += line;
  }
  const PsnrAggregate agg = aggregate_psnr(values, cfg.psnr_cutoff);
  char tail[256];
  std::snprintf(tail, sizeof(tail),
                "mean_center_psnr=%.6f included=%d excluded_infinite=%d "
                "excluded_above_cutoff=%d\nfid=unavailable\nis=unavailable\n",
                agg.mean, agg.included, agg.excluded_infinite,
                agg.excluded_above_cutoff);
  report += tail;
  write_text(cfg.out_dir + "/eval.txt", report);
  std::fputs(report.c_str(), stdout);
  return 0;
}

int cmd_rpe_dump(const std::string& anchor_str, const std::string& target_str,
                 int k_anchor, int k_target, int dim,
                 const std::string& variant, const std::string& out_path) {
  const CropRegion anchor = detail::parse_region("anchor", anchor_str);
  const CropRegion target = detail::parse_region("target", target_str);
  const RelativeGrid grid = relative_grid(anchor, target, k_anchor, k_target);
  PeVariant pe = PeVariant::sincos;
  if (variant == "none") pe = PeVariant::none;
  else if (variant == "learnable")
    fail(ErrorKind::MissingParams,
         "rpe-dump: the learnable variant needs trained weights; dump from a "
         "checkpointed run instead");
  else
    require(variant == "sincos", ErrorKind::ConfigError,
            "rpe-dump: variant must be sincos or none");
  const MatXd embed = embed_variant(grid, pe, dim);

  std::string out;
  char buf[64];
  auto put = [&out, &buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out += buf;
  };
  out += "k_anchor=" + std::to_string(grid.k_anchor) +
         " k_target=" + std::to_string(grid.k_target) +
         " dim=" + std::to_string(dim) + "\n";
  out += "rows:";
  for (double v : grid.rows) {
    out += " ";
    put(v);
  }
  out += "\ncols:";
  for (double v : grid.cols) {
    out += " ";
    put(v);
  }
  out += "\n";
  for (Eigen::Index r = 0; r < embed.rows(); ++r) {
    for (Eigen::Index c = 0; c < embed.cols(); ++c) {
      if (c) out += " ";
      put(embed(r, c));
    }
    out += "\n";
  }
  if (out_path.empty()) {
    std::fputs(out.c_str(), stdout);
  } else {
    write_text(out_path, out);
  }
  return 0;
}

int cmd_bench(const ConfigArgs& args, const std::string& out_flag,
              const std::string& multiples_str, int repeats) {
  RunConfig cfg = args.resolve(out_flag);
  require(!cfg.checkpoint.empty(), ErrorKind::ConfigError,
          "bench: checkpoint path is required (--set checkpoint=...)");
  const TrainState state = load_checkpoint(cfg.checkpoint);
  cfg.train = state.cfg;
  cfg.validate();

  std::vector<double> multiples;
  std::istringstream is(multiples_str);
  std::string tok;
  while (std::getline(is, tok, ','))
    multiples.push_back(detail::parse_double("multiples", detail::trim(tok)));

  Image input;
  if (cfg.input.empty()) {
    SynthSpec synth;
    synth.resolution = cfg.train.data_resolution;
    synth.channels = cfg.train.model.channels;
    input = synth_image(synth, cfg.train.seed, 0);
  } else {
    input = to_unit(read_image(cfg.input, cfg.train.model.channels));
  }

  const SamplerModel model = sampler_model(state);
  const std::vector<BenchRow> rows =
      bench_sampling(model, input, multiples, cfg.output_side,
                     cfg.sample_config(), repeats, cfg.sample_seed);
  std::fputs(format_bench_report(rows).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"positional-query image outpainting"};
  app.require_subcommand(1);

  std::string out_flag;
  app.add_option("--out", out_flag,
                 "output directory (default: $OUTPAINT_OUT or ./out)");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  ConfigArgs train_args;
  train_args.attach(train);
  std::string resume;
  std::int64_t checkpoint_every = 0, log_every = 50;
  train->add_option("--resume", resume, "checkpoint to resume from");
  train->add_option("--checkpoint-every", checkpoint_every,
                    "save an intermediate checkpoint every N iterations");
  train->add_option("--log-every", log_every, "log every N iterations");

  // sample
  auto* sample = app.add_subcommand("sample", "outpaint an input image");
  ConfigArgs sample_args;
  sample_args.attach(sample);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate reconstruction quality");
  ConfigArgs eval_args;
  eval_args.attach(eval);

  // rpe-dump
  auto* rpe = app.add_subcommand(
      "rpe-dump", "print the relative grid and positional embedding");
  std::string anchor_str = "0,0,64,64", target_str = "0,0,64,64";
  int k_anchor = 8, k_target = 8, dim = 16;
  std::string variant = "sincos", rpe_out;
  rpe->add_option("--anchor", anchor_str, "anchor region top,left,height,width");
  rpe->add_option("--target", target_str, "target region top,left,height,width");
  rpe->add_option("--k-anchor", k_anchor, "anchor grid size");
  rpe->add_option("--k-target", k_target, "target grid size");
  rpe->add_option("--dim", dim, "embedding width");
  rpe->add_option("--variant", variant, "sincos or none");
  rpe->add_option("--file", rpe_out, "write to file instead of stdout");

  // bench
  auto* bench = app.add_subcommand("bench", "time sampling across multiples");
  ConfigArgs bench_args;
  bench_args.attach(bench);
  std::string multiples_str = "2.25,5,11.7";
  int repeats = 5;
  bench->add_option("--multiples", multiples_str, "comma-separated multiples");
  bench->add_option("--repeats", repeats, "timed repeats per multiple");

  if (argc <= 1) {
    std::cout << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed())
      return cmd_train(train_args, out_flag, resume, checkpoint_every,
                       log_every);
    if (sample->parsed()) return cmd_sample(sample_args, out_flag);
    if (eval->parsed()) return cmd_eval(eval_args, out_flag);
    if (rpe->parsed())
      return cmd_rpe_dump(anchor_str, target_str, k_anchor, k_target, dim,
                          variant, rpe_out);
    if (bench->parsed())
      return cmd_bench(bench_args, out_flag, multiples_str, repeats);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
