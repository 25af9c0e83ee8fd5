// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Epsilon-prediction (DDPM/DDIM style) variant of distillation. Discrete
// timesteps 0..T index an alpha-bar table; networks see t / T.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpdmd/autodiff.hpp"
#include "dpdmd/network.hpp"
#include "dpdmd/process.hpp"

namespace dpdmd::diffusion {

class DiffusionSchedule {
 public:
  /// alphas_bar[t] for t = 0..T; must start at 1 and decrease strictly
  /// within (0, 1].
  explicit DiffusionSchedule(std::vector<double> alphas_bar);

  /// Cosine schedule (offset s = 0.008) over T steps, with the time axis
  /// compressed so that alpha_bar(T) == alpha_bar_min instead of ~0.
  static DiffusionSchedule cosine(std::size_t T, double alpha_bar_min = 0.005);

  std::size_t T() const { return ab_.size() - 1; }
  double alpha_bar(std::size_t t) const { return ab_.at(t); }
  const std::vector<double>& alphas_bar() const { return ab_; }

 private:
  std::vector<double> ab_;
};

/// sqrt(ab_t) x + sqrt(1 - ab_t) eps.
ad::Tensor diffuse(const ad::Tensor& x, const ad::Tensor& eps, std::size_t t,
                   const DiffusionSchedule& schedule);
ad::Tensor diffuse(const ad::Tensor& x, const ad::Tensor& eps, std::span<const std::size_t> t,
                   const DiffusionSchedule& schedule);

/// (z - sqrt(1 - ab_t) eps_pred) / sqrt(ab_t).
ad::Tensor x0_from_eps(const ad::Tensor& z, const ad::Tensor& eps_pred, std::size_t t,
                       const DiffusionSchedule& schedule);

/// DDIM update given an existing noise prediction at t_from.
ad::Tensor ddim_from_prediction(const ad::Tensor& z, const ad::Tensor& eps_pred,
                                std::size_t t_from, std::size_t t_to,
                                const DiffusionSchedule& schedule);
/// Deterministic DDIM step; requires t_from > t_to.
ad::Tensor ddim_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                     const ad::Tensor& z, std::size_t t_from, std::size_t t_to,
                     const DiffusionSchedule& schedule);

/// round(T (1 - k / steps)) for k = 0..steps.
std::vector<std::size_t> uniform_grid(std::size_t T, std::size_t steps);

/// Teacher x0 estimate after K DDIM steps on `teacher_grid` plus one noise
/// evaluation at the landing step. Detached.
ad::Tensor make_x0_target(const VelocityNet& teacher, std::span<const ad::Tensor> teacher_params,
                          const ad::Tensor& eps, std::size_t anchor_step,
                          const std::vector<std::size_t>& teacher_grid,
                          const DiffusionSchedule& schedule);

/// mse(x0_from_eps(z_T, student(z_T, T), T), target_x0) with the target detached.
ad::Tensor diffusion_diversity_loss(const VelocityNet& student, std::span<const ad::Tensor> params,
                                    const ad::Tensor& z_T, const DiffusionSchedule& schedule,
                                    const ad::Tensor& target_x0);

/// -eps_pred / sqrt(1 - ab_t), row-wise.
ad::Tensor score_from_eps(const ad::Tensor& eps_pred, std::span<const std::size_t> t,
                          const DiffusionSchedule& schedule);

class DiffusionProcess final : public Process {
 public:
  DiffusionProcess(DiffusionSchedule schedule, std::size_t student_steps,
                   std::size_t teacher_steps);

  const char* name() const override { return "diffusion"; }
  PredictionMode prediction_mode() const override { return PredictionMode::kEpsilon; }
  const std::vector<double>& student_times() const override { return student_; }
  const std::vector<double>& teacher_times() const override { return teacher_; }
  const DiffusionSchedule& schedule() const { return schedule_; }

  ad::Tensor step(const VelocityNet& net, std::span<const ad::Tensor> params, const ad::Tensor& z,
                  double from, double to) const override;
  FirstStep first_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                       const ad::Tensor& eps) const override;
  ad::Tensor denoising_loss(const VelocityNet& net, std::span<const ad::Tensor> params,
                            const ad::Tensor& x, const ad::Tensor& eps,
                            std::span<const double> t) const override;
  std::vector<double> draw_training_times(Rng& rng, std::size_t n) const override;
  std::vector<double> draw_dmd_times(Rng& rng, std::size_t n, double lo, double hi,
                                     bool per_sample) const override;
  ad::Tensor noise(const ad::Tensor& x, const ad::Tensor& eps,
                   std::span<const double> t) const override;
  ad::Tensor score(const VelocityNet& net, const ad::Tensor& z,
                   std::span<const double> t) const override;
  ad::Tensor diversity_target(const VelocityNet& teacher, std::span<const ad::Tensor> params,
                              const ad::Tensor& eps, std::size_t anchor_step) const override;

 private:
  std::vector<std::size_t> steps_of(std::span<const double> t) const;
  std::vector<double> net_times(std::span<const std::size_t> t) const;

  DiffusionSchedule schedule_;
  std::vector<std::size_t> student_grid_;
  std::vector<std::size_t> teacher_grid_;
  std::vector<double> student_;
  std::vector<double> teacher_;
};

}  // namespace dpdmd::diffusion
