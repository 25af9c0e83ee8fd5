// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dpdmd/error.hpp"

namespace dpdmd::diffusion {

namespace {

void check_step(std::size_t t, const DiffusionSchedule& s, const char* op) {
  if (t > s.T()) {
    throw DomainError(std::string(op) + ": timestep " + std::to_string(t) + " outside [0, " +
                      std::to_string(s.T()) + "]");
  }
}

void check_rows(const ad::Tensor& a, std::size_t n, const char* op) {
  if (a.rows() != n) {
    throw ShapeError(std::string(op) + ": " + std::to_string(n) + " timesteps for " +
                     std::to_string(a.rows()) + " rows");
  }
}

std::vector<double> to_times(const std::vector<std::size_t>& grid) {
  return {grid.begin(), grid.end()};
}

}  // namespace

DiffusionSchedule::DiffusionSchedule(std::vector<double> alphas_bar) : ab_(std::move(alphas_bar)) {
  if (ab_.size() < 2) throw ConfigError("diffusion schedule needs at least one step");
  if (ab_[0] != 1.0) throw ConfigError("diffusion schedule must start with alpha_bar = 1");
  for (std::size_t t = 1; t < ab_.size(); ++t) {
    if (!(ab_[t] > 0.0 && ab_[t] < ab_[t - 1])) {
      throw ConfigError("alpha_bar must decrease strictly within (0, 1] (index " +
                        std::to_string(t) + ")");
    }
  }
}

DiffusionSchedule DiffusionSchedule::cosine(std::size_t T, double alpha_bar_min) {
  if (T == 0) throw ConfigError("diffusion.T must be positive");
  if (!(alpha_bar_min > 0.0 && alpha_bar_min < 1.0)) {
    throw ConfigError("diffusion.alpha_bar_min must lie in (0, 1)");
  }
  constexpr double s = 0.008;
  const double half_pi = std::numbers::pi / 2.0;
  const double c0 = std::cos(s / (1.0 + s) * half_pi);
  // Solve cos^2(u_T) / c0^2 == alpha_bar_min for the end of the time axis.
  const double u_end = std::acos(std::sqrt(alpha_bar_min) * c0);
  const double tau = u_end / half_pi * (1.0 + s) - s;
  std::vector<double> ab(T + 1);
  ab[0] = 1.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double frac = static_cast<double>(t) / static_cast<double>(T) * tau;
    const double c = std::cos((frac + s) / (1.0 + s) * half_pi);
    ab[t] = c * c / (c0 * c0);
  }
  return DiffusionSchedule(std::move(ab));
}

ad::Tensor diffuse(const ad::Tensor& x, const ad::Tensor& eps, std::size_t t,
                   const DiffusionSchedule& schedule) {
  check_step(t, schedule, "diffuse");
  if (x.shape() != eps.shape()) {
    throw ShapeError("diffuse: shape mismatch " + ad::shape_string(x.shape()) + " vs " +
                     ad::shape_string(eps.shape()));
  }
  const double ab = schedule.alpha_bar(t);
  return ad::add(ad::scale(x, std::sqrt(ab)), ad::scale(eps, std::sqrt(1.0 - ab)));
}

ad::Tensor diffuse(const ad::Tensor& x, const ad::Tensor& eps, std::span<const std::size_t> t,
                   const DiffusionSchedule& schedule) {
  check_rows(x, t.size(), "diffuse");
  if (x.shape() != eps.shape()) {
    throw ShapeError("diffuse: shape mismatch " + ad::shape_string(x.shape()) + " vs " +
                     ad::shape_string(eps.shape()));
  }
  std::vector<double> a(t.size());
  std::vector<double> b(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    check_step(t[i], schedule, "diffuse");
    a[i] = std::sqrt(schedule.alpha_bar(t[i]));
    b[i] = std::sqrt(1.0 - schedule.alpha_bar(t[i]));
  }
  return ad::add(ad::row_scale(x, a), ad::row_scale(eps, b));
}

ad::Tensor x0_from_eps(const ad::Tensor& z, const ad::Tensor& eps_pred, std::size_t t,
                       const DiffusionSchedule& schedule) {
  check_step(t, schedule, "x0_from_eps");
  const double ab = schedule.alpha_bar(t);
  if (!(ab > 0.0)) throw DomainError("x0_from_eps: alpha_bar is zero at t = " + std::to_string(t));
  return ad::scale(ad::sub(z, ad::scale(eps_pred, std::sqrt(1.0 - ab))), 1.0 / std::sqrt(ab));
}

ad::Tensor ddim_from_prediction(const ad::Tensor& z, const ad::Tensor& eps_pred,
                                std::size_t t_from, std::size_t t_to,
                                const DiffusionSchedule& schedule) {
  if (!(t_from > t_to)) {
    throw DomainError("ddim_step: t_from " + std::to_string(t_from) + " must exceed t_to " +
                      std::to_string(t_to));
  }
  check_step(t_from, schedule, "ddim_step");
  const ad::Tensor x0 = x0_from_eps(z, eps_pred, t_from, schedule);
  const double ab = schedule.alpha_bar(t_to);
  return ad::add(ad::scale(x0, std::sqrt(ab)), ad::scale(eps_pred, std::sqrt(1.0 - ab)));
}

ad::Tensor ddim_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                     const ad::Tensor& z, std::size_t t_from, std::size_t t_to,
                     const DiffusionSchedule& schedule) {
  check_step(t_from, schedule, "ddim_step");
  const double tn = static_cast<double>(t_from) / static_cast<double>(schedule.T());
  return ddim_from_prediction(z, net.forward(params, z, tn), t_from, t_to, schedule);
}

std::vector<std::size_t> uniform_grid(std::size_t T, std::size_t steps) {
  if (steps == 0 || steps > T) {
    throw ConfigError("diffusion grid needs between 1 and T = " + std::to_string(T) +
                      " steps, got " + std::to_string(steps));
  }
  std::vector<std::size_t> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    grid[k] = static_cast<std::size_t>(std::llround(
        static_cast<double>(T) * (1.0 - static_cast<double>(k) / static_cast<double>(steps))));
  }
  return grid;
}

ad::Tensor make_x0_target(const VelocityNet& teacher, std::span<const ad::Tensor> teacher_params,
                          const ad::Tensor& eps, std::size_t anchor_step,
                          const std::vector<std::size_t>& teacher_grid,
                          const DiffusionSchedule& schedule) {
  if (anchor_step == 0 || anchor_step + 1 > teacher_grid.size()) {
    throw ConfigError("anchor step K = " + std::to_string(anchor_step) +
                      " outside the teacher grid");
  }
  ad::Tensor z = ad::detach(eps);
  for (std::size_t k = 0; k < anchor_step; ++k) {
    z = ad::detach(ddim_step(teacher, teacher_params, z, teacher_grid[k], teacher_grid[k + 1],
                             schedule));
  }
  const std::size_t tk = teacher_grid[anchor_step];
  const double tn = static_cast<double>(tk) / static_cast<double>(schedule.T());
  const ad::Tensor eps_tea = ad::detach(teacher.forward(teacher_params, z, tn));
  return ad::detach(x0_from_eps(z, eps_tea, tk, schedule));
}

ad::Tensor diffusion_diversity_loss(const VelocityNet& student, std::span<const ad::Tensor> params,
                                    const ad::Tensor& z_T, const DiffusionSchedule& schedule,
                                    const ad::Tensor& target_x0) {
  const std::size_t T = schedule.T();
  const ad::Tensor x0 = x0_from_eps(z_T, student.forward(params, z_T, 1.0), T, schedule);
  return ad::mse(x0, ad::detach(target_x0));
}

ad::Tensor score_from_eps(const ad::Tensor& eps_pred, std::span<const std::size_t> t,
                          const DiffusionSchedule& schedule) {
  check_rows(eps_pred, t.size(), "score_from_eps");
  std::vector<double> f(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    check_step(t[i], schedule, "score_from_eps");
    const double var = 1.0 - schedule.alpha_bar(t[i]);
    if (!(var > 0.0)) throw DomainError("score_from_eps: zero noise level at t = 0");
    f[i] = -1.0 / std::sqrt(var);
  }
  return ad::row_scale(eps_pred, f);
}

DiffusionProcess::DiffusionProcess(DiffusionSchedule schedule, std::size_t student_steps,
                                   std::size_t teacher_steps)
    : schedule_(std::move(schedule)),
      student_grid_(uniform_grid(schedule_.T(), student_steps)),
      teacher_grid_(uniform_grid(schedule_.T(), teacher_steps)),
      student_(to_times(student_grid_)),
      teacher_(to_times(teacher_grid_)) {}

std::vector<std::size_t> DiffusionProcess::steps_of(std::span<const double> t) const {
  std::vector<std::size_t> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] >= 0.0) || t[i] != std::floor(t[i])) {
      throw DomainError("diffusion time must be a nonnegative integer step, got " +
                        std::to_string(t[i]));
    }
    out[i] = static_cast<std::size_t>(t[i]);
    check_step(out[i], schedule_, "diffusion process");
  }
  return out;
}

std::vector<double> DiffusionProcess::net_times(std::span<const std::size_t> t) const {
  std::vector<double> out(t.size());
  const double T = static_cast<double>(schedule_.T());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<double>(t[i]) / T;
  return out;
}

ad::Tensor DiffusionProcess::step(const VelocityNet& net, std::span<const ad::Tensor> params,
                                  const ad::Tensor& z, double from, double to) const {
  const double pair[2] = {from, to};
  const auto s = steps_of(pair);
  return ddim_step(net, params, z, s[0], s[1], schedule_);
}

FirstStep DiffusionProcess::first_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                                       const ad::Tensor& eps) const {
  const std::size_t from = student_grid_[0];
  const std::size_t to = student_grid_[1];
  const double tn = static_cast<double>(from) / static_cast<double>(schedule_.T());
  const ad::Tensor eps_hat = net.forward(params, eps, tn);
  return {ddim_from_prediction(eps, eps_hat, from, to, schedule_),
          x0_from_eps(eps, eps_hat, from, schedule_)};
}

ad::Tensor DiffusionProcess::denoising_loss(const VelocityNet& net,
                                            std::span<const ad::Tensor> params,
                                            const ad::Tensor& x, const ad::Tensor& eps,
                                            std::span<const double> t) const {
  const auto s = steps_of(t);
  const ad::Tensor z = diffuse(x, eps, s, schedule_);
  return ad::mse(net.forward(params, z, net_times(s)), eps);
}

std::vector<double> DiffusionProcess::draw_training_times(Rng& rng, std::size_t n) const {
  std::vector<double> t(n);
  for (auto& v : t) v = static_cast<double>(1 + rng.below(schedule_.T()));
  return t;
}

std::vector<double> DiffusionProcess::draw_dmd_times(Rng& rng, std::size_t n, double lo,
                                                     double hi, bool per_sample) const {
  const double T = static_cast<double>(schedule_.T());
  const auto first = static_cast<std::uint64_t>(std::max(1.0, std::ceil(lo * T)));
  const auto last = static_cast<std::uint64_t>(std::floor(hi * T));
  if (last < first) throw ConfigError("dmd t-range contains no diffusion timestep");
  const std::uint64_t span = last - first + 1;
  if (!per_sample) return std::vector<double>(n, static_cast<double>(first + rng.below(span)));
  std::vector<double> t(n);
  for (auto& v : t) v = static_cast<double>(first + rng.below(span));
  return t;
}

ad::Tensor DiffusionProcess::noise(const ad::Tensor& x, const ad::Tensor& eps,
                                   std::span<const double> t) const {
  return diffuse(x, eps, steps_of(t), schedule_);
}

ad::Tensor DiffusionProcess::score(const VelocityNet& net, const ad::Tensor& z,
                                   std::span<const double> t) const {
  const auto s = steps_of(t);
  const ad::Tensor zc = ad::detach(z);
  return score_from_eps(net.forward(zc, net_times(s)), s, schedule_);
}

ad::Tensor DiffusionProcess::diversity_target(const VelocityNet& teacher,
                                              std::span<const ad::Tensor> params,
                                              const ad::Tensor& eps,
                                              std::size_t anchor_step) const {
  return make_x0_target(teacher, params, eps, anchor_step, teacher_grid_, schedule_);
}

}  // namespace dpdmd::diffusion
