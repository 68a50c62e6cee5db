#pragma once

// Generation: run a reverse trajectory conditioned on the anchor view and
// the target-position embedding, decode the final latent, and place it in
// the requested output frame. The denoiser is injected as a callable so
// trajectories can be driven by the real model, by counting wrappers, or by
// closed-form stand-ins in tests.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "outpaint/codec.hpp"
#include "outpaint/common.hpp"
#include "outpaint/diffusion.hpp"
#include "outpaint/geometry.hpp"
#include "outpaint/image.hpp"
#include "outpaint/model.hpp"
#include "outpaint/rpe.hpp"
#include "outpaint/trainer.hpp"

namespace outpaint {

enum class Trajectory { ddpm, ddim };

inline const char* to_string(Trajectory t) {
  return t == Trajectory::ddpm ? "ddpm" : "ddim";
}

struct SampleConfig {
  OutpaintMode mode = MultipleMode{2.25, 192};
  Trajectory trajectory = Trajectory::ddim;
  int ddim_steps = 20;
  bool copy_input = false;

  void validate() const {
    require(ddim_steps >= 1, ErrorKind::InvalidRange,
            "SampleConfig: ddim_steps must be >= 1");
    mode_to_regions(mode);  // validates the mode payload
  }
};

// Evenly spaced jump schedule T = s_0 > s_1 > ... > 0 with at most `count`
// denoiser calls (fewer when rounding collapses neighbors).
inline std::vector<int> make_ddim_schedule(int timesteps, int count) {
  require(timesteps >= 1, ErrorKind::InvalidRange,
          "make_ddim_schedule: timesteps must be >= 1");
  require(count >= 1, ErrorKind::InvalidRange,
          "make_ddim_schedule: count must be >= 1");
  std::vector<int> steps;
  for (int i = 0; i <= count; ++i) {
    const int s = static_cast<int>(std::lround(
        static_cast<double>(timesteps) * (count - i) / count));
    if (steps.empty() || s < steps.back()) steps.push_back(s);
  }
  return steps;
}

using DenoiseFn = std::function<Mat<float>(const Mat<float>&, int)>;

// Runs a full reverse trajectory from pure noise. `steps` is only used for
// the ddim trajectory and must descend strictly from its start to 0.
// Noise draw order: initial state row-major, then any ancestral noise.
inline Mat<float> run_trajectory(const DenoiseFn& fn, int rows, int cols,
                                 const NoiseSchedule& sched, Trajectory traj,
                                 const std::vector<int>& steps,
                                 PredictionTarget target, Rng& rng,
                                 std::int64_t* calls = nullptr) {
  require(rows > 0 && cols > 0, ErrorKind::InvalidSize,
          "run_trajectory: latent shape must be positive");
  Mat<float> z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i)
    z.data()[i] = static_cast<float>(rng.normal());

  auto to_eps = [&](const Mat<float>& out, const Mat<float>& z_t,
                    int t) -> Mat<float> {
    return target == PredictionTarget::noise ? out
                                             : x0_to_eps(z_t, out, t, sched);
  };

  if (traj == Trajectory::ddpm) {
    for (int t = sched.timesteps; t >= 1; --t) {
      const Mat<float> out = fn(z, t);
      if (calls) ++*calls;
      z = ddpm_step(z, to_eps(out, z, t), t, sched, rng);
    }
    return z;
  }

  require(steps.size() >= 2, ErrorKind::InvalidRange,
          "run_trajectory: ddim needs at least two schedule points");
  require(steps.front() <= sched.timesteps && steps.back() == 0,
          ErrorKind::InvalidRange,
          "run_trajectory: ddim schedule must start within [1, T] and end at 0");
  for (std::size_t i = 1; i < steps.size(); ++i)
    require(steps[i] < steps[i - 1], ErrorKind::NonMonotonic,
            "run_trajectory: ddim schedule must strictly decrease");

  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    const int t = steps[i], t_prev = steps[i + 1];
    const Mat<float> out = fn(z, t);
    if (calls) ++*calls;
    z = ddim_step(z, to_eps(out, z, t), t, t_prev, sched);
  }
  return z;
}

// Bundle of everything generation needs from a trained run.
struct SamplerModel {
  const DenoiserParams<float>* params = nullptr;
  PeVariant pe_variant = PeVariant::sincos;
  const LearnableMap* pe_map = nullptr;
  NoiseSchedule sched;
};

inline SamplerModel sampler_model(const TrainState& st) {
  SamplerModel m;
  m.params = &st.params;
  m.pe_variant = st.cfg.pe_variant;
  m.pe_map = st.pe_map ? &*st.pe_map : nullptr;
  m.sched = st.sched;
  return m;
}

struct OutpaintResult {
  Image image;            // covers the target region
  CropRegion placement;   // where the input view sits in the output frame
  double h_scale = 1.0;   // input -> placement resize factors
  double w_scale = 1.0;
  std::int64_t denoise_calls = 0;
  double wall_ms = 0.0;
  double clamp_fraction = 0.0;  // latent entries clipped into [-1, 1]
};

// Pastes `source`, resized by the placement scales, into a copy of `frame`
// at `placement` (clipped to the frame). Pixels outside the placement
// window are untouched; pixels inside equal the resized source exactly.
inline Image copy_paste(const Image& frame, const Image& source,
                        const CropRegion& placement, double h_scale,
                        double w_scale) {
  require(frame.c == source.c, ErrorKind::ShapeMismatch,
          "copy_paste: channel counts differ");
  require(placement.valid(), ErrorKind::InvalidSize,
          "copy_paste: placement must have positive size");
  const int rh = static_cast<int>(std::lround(source.h * h_scale));
  const int rw = static_cast<int>(std::lround(source.w * w_scale));
  require(rh == placement.height && rw == placement.width,
          ErrorKind::ShapeMismatch,
          "copy_paste: scales do not reproduce the placement size");
  const Image resized = resize_bilinear(source, rh, rw);
  Image out = frame;
  const int y0 = std::max(0, placement.top);
  const int y1 = std::min(frame.h, placement.top + rh);
  const int x0 = std::max(0, placement.left);
  const int x1 = std::min(frame.w, placement.left + rw);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int ch = 0; ch < frame.c; ++ch)
        out.at(y, x, ch) =
            resized.at(y - placement.top, x - placement.left, ch);
  return out;
}

// Full generation pipeline for one input image.
inline OutpaintResult outpaint(const SamplerModel& model, const Image& input,
                               const SampleConfig& cfg, Rng& rng) {
  cfg.validate();
  require(model.params != nullptr && model.params->initialized,
          ErrorKind::UntrainedModel, "outpaint: model has no trained weights");
  const ModelConfig& mc = model.params->cfg;
  require(input.c == mc.channels, ErrorKind::ShapeMismatch,
          "outpaint: input channel count does not match the model");
  require(all_finite(input), ErrorKind::NonFiniteActivation,
          "outpaint: non-finite input image");

  const auto start = std::chrono::steady_clock::now();

  const RegionPair regions = mode_to_regions(cfg.mode);
  const RelativeGrid grid =
      relative_grid(regions.anchor, regions.target, mc.grid(), mc.grid());
  const Mat<float> embed =
      embed_variant(grid, model.pe_variant, mc.hidden_dim, model.pe_map)
          .cast<float>();

  const Image anchor_view =
      resize_bilinear(input, mc.image_side, mc.image_side);
  const Mat<float> z_a = patchify<float>(anchor_view, mc.codec());

  OutpaintResult res;
  DenoiseFn fn = [&](const Mat<float>& z, int t) {
    return denoise(*model.params, z, z_a, embed, t);
  };
  const std::vector<int> steps =
      cfg.trajectory == Trajectory::ddim
          ? make_ddim_schedule(model.sched.timesteps, cfg.ddim_steps)
          : std::vector<int>{};
  Mat<float> z = run_trajectory(fn, mc.seq_len(), mc.patch_width(),
                                model.sched, cfg.trajectory, steps,
                                mc.target, rng, &res.denoise_calls);

  std::int64_t clamped = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z.data()[i] < -1.0f || z.data()[i] > 1.0f) ++clamped;
    z.data()[i] = std::clamp(z.data()[i], -1.0f, 1.0f);
  }
  res.clamp_fraction = static_cast<double>(clamped) /
                       static_cast<double>(z.size());

  const Image generated = unpatchify(z, mc.codec());
  res.image = resize_bilinear(generated, regions.target.height,
                              regions.target.width);
  res.placement = CropRegion{regions.anchor.top - regions.target.top,
                             regions.anchor.left - regions.target.left,
                             regions.anchor.height, regions.anchor.width};
  res.h_scale = static_cast<double>(regions.anchor.height) / input.h;
  res.w_scale = static_cast<double>(regions.anchor.width) / input.w;
  if (cfg.copy_input)
    res.image = copy_paste(res.image, input, res.placement, res.h_scale,
                           res.w_scale);

  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  return res;
}

// ------------------------------------------------------------- benchmark

struct BenchRow {
  double multiple = 0.0;
  double median_ms = 0.0;
  double p10_ms = 0.0;
  double p90_ms = 0.0;
  std::int64_t denoise_calls = 0;
};

inline double quantile_nearest(std::vector<double> sorted_values, double q) {
  require(!sorted_values.empty(), ErrorKind::InvalidRange,
          "quantile_nearest: empty sample");
  const auto idx = static_cast<std::size_t>(
      std::lround(q * (sorted_values.size() - 1)));
  return sorted_values[idx];
}

// Times repeated generation at each expansion multiple. Every repeat uses a
// distinct seed; the denoise-call count must be identical across repeats.
inline std::vector<BenchRow> bench_sampling(const SamplerModel& model,
                                            const Image& input,
                                            const std::vector<double>& multiples,
                                            int output_side,
                                            const SampleConfig& base,
                                            int repeats,
                                            std::uint64_t seed = 0) {
  require(repeats >= 1, ErrorKind::InvalidRange,
          "bench_sampling: repeats must be >= 1");
  require(!multiples.empty(), ErrorKind::InvalidRange,
          "bench_sampling: no multiples given");
  std::vector<BenchRow> rows;
  for (double mult : multiples) {
    SampleConfig cfg = base;
    cfg.mode = MultipleMode{mult, output_side};
    std::vector<double> times;
    std::int64_t calls = -1;
    for (int r = 0; r < repeats; ++r) {
      Rng rng(seed + static_cast<std::uint64_t>(r));
      const OutpaintResult res = outpaint(model, input, cfg, rng);
      times.push_back(res.wall_ms);
      require(calls < 0 || calls == res.denoise_calls, ErrorKind::InvalidRange,
              "bench_sampling: denoise call count changed between repeats");
      calls = res.denoise_calls;
    }
    std::sort(times.begin(), times.end());
    BenchRow row;
    row.multiple = mult;
    row.median_ms = quantile_nearest(times, 0.5);
    row.p10_ms = quantile_nearest(times, 0.1);
    row.p90_ms = quantile_nearest(times, 0.9);
    row.denoise_calls = calls;
    rows.push_back(row);
  }
  return rows;
}

inline std::string format_bench_report(const std::vector<BenchRow>& rows) {
  std::string out;
  char buf[160];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "multiple=%.6g median_ms=%.3f p10_ms=%.3f p90_ms=%.3f "
                  "denoise_calls=%lld\n",
                  r.multiple, r.median_ms, r.p10_ms, r.p90_ms,
                  static_cast<long long>(r.denoise_calls));
    out += buf;
  }
  return out;
}

}  // namespace outpaint
