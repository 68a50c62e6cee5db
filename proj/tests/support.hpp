#pragma once

// Shared helpers for the test suites: tiny model configs, random batches,
// and a central-difference derivative checker over the flat parameter
// vector.

#include <cmath>
#include <cstdint>
#include <vector>

#include "outpaint/model.hpp"
#include "outpaint/rng.hpp"
#include "outpaint/rpe.hpp"
#include "outpaint/schedule.hpp"

namespace testsupport {

// Smallest interesting model: 4x4 images, 2x2 patches (L = 4, C = 4),
// width 8, one block on each side.
inline outpaint::ModelConfig tiny_model_config() {
  outpaint::ModelConfig cfg;
  cfg.image_side = 4;
  cfg.patch_side = 2;
  cfg.channels = 1;
  cfg.hidden_dim = 8;
  cfg.n_enc = 1;
  cfg.n_dec = 1;
  cfg.heads = 2;
  cfg.ff_mult = 2;
  cfg.conv_kernel = 3;
  return cfg;
}

template <typename S>
outpaint::Mat<S> randn_mat(int rows, int cols, outpaint::Rng& rng) {
  outpaint::Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<S>(rng.normal());
  return m;
}

template <typename S>
outpaint::TrainSample<S> random_sample(const outpaint::ModelConfig& cfg,
                                       int timesteps, outpaint::Rng& rng) {
  outpaint::TrainSample<S> s;
  const int L = cfg.seq_len(), C = cfg.patch_width();
  s.z_a = randn_mat<S>(L, C, rng);
  s.z_b0 = randn_mat<S>(L, C, rng);
  s.embed = outpaint::sincos_embed(outpaint::identity_grid(cfg.grid()),
                                   cfg.hidden_dim)
                .template cast<S>();
  // Offset the embedding so target and anchor lattices differ.
  s.embed.array() += static_cast<S>(0.25);
  s.t = 1 + static_cast<int>(rng.uniform_int(0, timesteps - 1));
  s.eps = randn_mat<S>(L, C, rng);
  return s;
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::int64_t worst_index = -1;
  int coords_checked = 0;
};

// Central differences on `coords` randomly chosen parameter coordinates.
// rel = |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradCheckResult grad_check(const outpaint::ModelConfig& cfg,
                                  int timesteps, int coords,
                                  std::uint64_t seed, double h = 1e-5,
                                  double floor = 1e-6) {
  const outpaint::NoiseSchedule sched =
      outpaint::linear_schedule(timesteps, 1e-4, 2e-2);
  outpaint::Rng rng(seed);
  outpaint::DenoiserParams<double> params(cfg);
  params.init_random(rng);
  // The affine head and all biases start at zero; give the whole output
  // stage generic values so every upstream parameter participates in the
  // check instead of sitting behind a zero factor.
  for (const auto& seg : {params.layout.out_w, params.layout.out_b,
                          params.layout.conv_w, params.layout.conv_b}) {
    auto m = params.map(seg);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = rng.uniform(-0.3, 0.3);
  }
  std::vector<outpaint::TrainSample<double>> batch;
  batch.push_back(random_sample<double>(cfg, timesteps, rng));

  const outpaint::LossGrad<double> lg =
      outpaint::loss_and_grad(params, batch, sched);

  GradCheckResult res;
  res.coords_checked = coords;
  for (int i = 0; i < coords; ++i) {
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(0, params.size() - 1));
    const double keep = params.flat[idx];
    params.flat[idx] = keep + h;
    const double up = outpaint::loss_and_grad(params, batch, sched).loss;
    params.flat[idx] = keep - h;
    const double down = outpaint::loss_and_grad(params, batch, sched).loss;
    params.flat[idx] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = lg.grad.flat[idx];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), floor});
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_index = static_cast<std::int64_t>(idx);
    }
  }
  return res;
}

}  // namespace testsupport
