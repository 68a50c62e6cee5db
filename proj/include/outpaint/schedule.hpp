#pragma once

// Variance schedule for the forward noising process. Timesteps are 1-based:
// beta(t) for t in [1, T], and alpha_bar(t) = prod_{s<=t} (1 - beta(s)) with
// the convention alpha_bar(0) = 1. All quantities are double precision.

#include <cmath>
#include <vector>

#include "outpaint/common.hpp"

namespace outpaint {

struct NoiseSchedule {
  int timesteps = 0;
  std::vector<double> betas;       // betas[t-1], t = 1..T
  std::vector<double> alpha_bars;  // alpha_bars[t], t = 0..T; [0] == 1

  double beta(int t) const {
    require(t >= 1 && t <= timesteps, ErrorKind::InvalidRange,
            "NoiseSchedule::beta: t outside [1, T]");
    return betas[t - 1];
  }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const {
    require(t >= 0 && t <= timesteps, ErrorKind::InvalidRange,
            "NoiseSchedule::alpha_bar: t outside [0, T]");
    return alpha_bars[t];
  }
  // Noise-to-signal scale sigma(t) = sqrt((1 - alpha_bar) / alpha_bar),
  // the integration variable of the probability-flow step.
  double sigma(int t) const {
    const double ab = alpha_bar(t);
    return std::sqrt((1.0 - ab) / ab);
  }
};

// Linear beta ramp, endpoints inclusive. T == 1 uses beta_start alone.
inline NoiseSchedule linear_schedule(int timesteps, double beta_start = 1.0e-4,
                                     double beta_end = 2.0e-2) {
  require(timesteps >= 1, ErrorKind::InvalidRange,
          "linear_schedule: timesteps must be >= 1");
  require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
          ErrorKind::InvalidRange,
          "linear_schedule: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.timesteps = timesteps;
  s.betas.resize(timesteps);
  for (int i = 0; i < timesteps; ++i) {
    s.betas[i] = timesteps == 1
                     ? beta_start
                     : beta_start + (beta_end - beta_start) * i / (timesteps - 1);
  }
  s.alpha_bars.resize(timesteps + 1);
  s.alpha_bars[0] = 1.0;
  for (int t = 1; t <= timesteps; ++t)
    s.alpha_bars[t] = s.alpha_bars[t - 1] * (1.0 - s.betas[t - 1]);
  return s;
}

}  // namespace outpaint
