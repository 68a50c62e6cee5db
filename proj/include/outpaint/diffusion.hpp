#pragma once

// Diffusion-process algebra on patch-sequence latents: the closed-form
// forward jump, conversions between noise and clean-signal estimates, the
// reverse posterior, and three reverse steps (stochastic ancestral,
// deterministic jump, and a first-order probability-flow step in sigma).
// Schedule coefficients are computed in double regardless of the latent
// scalar type S.

#include <cmath>

#include "outpaint/common.hpp"
#include "outpaint/mat.hpp"
#include "outpaint/rng.hpp"
#include "outpaint/schedule.hpp"

namespace outpaint {

namespace detail {
inline void check_t(const NoiseSchedule& s, int t, const char* who) {
  require(t >= 1 && t <= s.timesteps, ErrorKind::InvalidRange,
          std::string(who) + ": t outside [1, T]");
}
template <typename S>
void check_same_shape(const Mat<S>& a, const Mat<S>& b, const char* who) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorKind::ShapeMismatch,
          std::string(who) + ": operand shapes differ");
}
}  // namespace detail

// z_t = sqrt(alpha_bar_t) z_0 + sqrt(1 - alpha_bar_t) eps
template <typename S>
Mat<S> q_sample(const Mat<S>& z0, int t, const Mat<S>& eps,
                const NoiseSchedule& sched) {
  detail::check_t(sched, t, "q_sample");
  detail::check_same_shape(z0, eps, "q_sample");
  const double ab = sched.alpha_bar(t);
  return static_cast<S>(std::sqrt(ab)) * z0 +
         static_cast<S>(std::sqrt(1.0 - ab)) * eps;
}

// z_0 = (z_t - sqrt(1 - alpha_bar_t) eps) / sqrt(alpha_bar_t)
template <typename S>
Mat<S> eps_to_x0(const Mat<S>& z_t, const Mat<S>& eps_hat, int t,
                 const NoiseSchedule& sched) {
  detail::check_t(sched, t, "eps_to_x0");
  detail::check_same_shape(z_t, eps_hat, "eps_to_x0");
  const double ab = sched.alpha_bar(t);
  return (z_t - static_cast<S>(std::sqrt(1.0 - ab)) * eps_hat) /
         static_cast<S>(std::sqrt(ab));
}

// eps = (z_t - sqrt(alpha_bar_t) z_0) / sqrt(1 - alpha_bar_t)
template <typename S>
Mat<S> x0_to_eps(const Mat<S>& z_t, const Mat<S>& x0_hat, int t,
                 const NoiseSchedule& sched) {
  detail::check_t(sched, t, "x0_to_eps");
  detail::check_same_shape(z_t, x0_hat, "x0_to_eps");
  const double ab = sched.alpha_bar(t);
  return (z_t - static_cast<S>(std::sqrt(ab)) * x0_hat) /
         static_cast<S>(std::sqrt(1.0 - ab));
}

template <typename S>
struct Posterior {
  Mat<S> mean;
  double variance = 0.0;
};

// Reverse posterior q(z_{t-1} | z_t, z_0):
//   mean = sqrt(alpha_bar_{t-1}) beta_t / (1 - alpha_bar_t) * z0_hat
//        + sqrt(alpha_t) (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * z_t
//   var  = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t
// At t = 1 (alpha_bar_0 = 1) this collapses to mean = z0_hat, var = 0,
// returned exactly.
template <typename S>
Posterior<S> posterior_params(const Mat<S>& z_t, const Mat<S>& z0_hat, int t,
                              const NoiseSchedule& sched) {
  detail::check_t(sched, t, "posterior_params");
  detail::check_same_shape(z_t, z0_hat, "posterior_params");
  if (t == 1) return Posterior<S>{z0_hat, 0.0};
  const double ab_t = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t - 1);
  const double beta_t = sched.beta(t);
  const double c0 = std::sqrt(ab_prev) * beta_t / (1.0 - ab_t);
  const double ct = std::sqrt(sched.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab_t);
  Posterior<S> p;
  p.mean = static_cast<S>(c0) * z0_hat + static_cast<S>(ct) * z_t;
  p.variance = (1.0 - ab_prev) / (1.0 - ab_t) * beta_t;
  return p;
}

// One stochastic ancestral step t -> t-1 given a noise estimate. Posterior
// noise is drawn entry by entry in row-major order; at t = 1 no noise is
// drawn and the clean estimate is returned.
template <typename S, typename RngT>
Mat<S> ddpm_step(const Mat<S>& z_t, const Mat<S>& eps_hat, int t,
                 const NoiseSchedule& sched, RngT& rng) {
  const Mat<S> z0_hat = eps_to_x0(z_t, eps_hat, t, sched);
  Posterior<S> p = posterior_params(z_t, z0_hat, t, sched);
  if (t == 1) return p.mean;
  const S sd = static_cast<S>(std::sqrt(p.variance));
  for (Eigen::Index i = 0; i < p.mean.size(); ++i)
    p.mean.data()[i] += sd * static_cast<S>(rng.normal());
  return p.mean;
}

// Deterministic jump t -> t_prev through the clean-signal form:
//   z_prev = sqrt(alpha_bar_prev) z0_hat + sqrt(1 - alpha_bar_prev) eps_hat.
// t_prev may equal t (the input is returned unchanged); t_prev > t is
// rejected as NonMonotonic.
template <typename S>
Mat<S> ddim_step(const Mat<S>& z_t, const Mat<S>& eps_hat, int t, int t_prev,
                 const NoiseSchedule& sched) {
  detail::check_t(sched, t, "ddim_step");
  require(t_prev >= 0, ErrorKind::InvalidRange, "ddim_step: t_prev < 0");
  require(t_prev <= t, ErrorKind::NonMonotonic, "ddim_step: t_prev > t");
  detail::check_same_shape(z_t, eps_hat, "ddim_step");
  if (t_prev == t) return z_t;
  const Mat<S> z0_hat = eps_to_x0(z_t, eps_hat, t, sched);
  const double ab_prev = sched.alpha_bar(t_prev);
  return static_cast<S>(std::sqrt(ab_prev)) * z0_hat +
         static_cast<S>(std::sqrt(1.0 - ab_prev)) * eps_hat;
}

// First-order probability-flow step t -> t_prev: Euler in the noise scale
// sigma = sqrt((1 - alpha_bar)/alpha_bar) applied to the rescaled state
// z / sqrt(alpha_bar):
//   z_prev = sqrt(ab_prev) * ( z_t / sqrt(ab_t)
//          + 0.5 * ((1-ab_prev)/ab_prev - (1-ab_t)/ab_t)
//                * sqrt(ab_t / (1-ab_t)) * eps_hat ).
// Agrees with ddim_step to first order in (sigma_prev - sigma_t).
template <typename S>
Mat<S> ode_euler_step(const Mat<S>& z_t, const Mat<S>& eps_hat, int t,
                      int t_prev, const NoiseSchedule& sched) {
  detail::check_t(sched, t, "ode_euler_step");
  require(t_prev >= 0, ErrorKind::InvalidRange, "ode_euler_step: t_prev < 0");
  require(t_prev <= t, ErrorKind::NonMonotonic, "ode_euler_step: t_prev > t");
  detail::check_same_shape(z_t, eps_hat, "ode_euler_step");
  if (t_prev == t) return z_t;
  const double ab_t = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t_prev);
  const double dsig2 = (1.0 - ab_prev) / ab_prev - (1.0 - ab_t) / ab_t;
  const double slope = 0.5 * dsig2 * std::sqrt(ab_t / (1.0 - ab_t));
  const double root_prev = std::sqrt(ab_prev);
  return static_cast<S>(root_prev / std::sqrt(ab_t)) * z_t +
         static_cast<S>(root_prev * slope) * eps_hat;
}

}  // namespace outpaint
