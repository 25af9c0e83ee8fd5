// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// The parts of distillation that differ between a velocity (flow) model and
// an epsilon-prediction (diffusion) model. Trainers are written against this
// interface; FlowProcess and DiffusionProcess implement it.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpdmd/autodiff.hpp"
#include "dpdmd/network.hpp"
#include "dpdmd/rng.hpp"

namespace dpdmd {

/// Output of the student's first sampling step.
struct FirstStep {
  /// State after the step.
  ad::Tensor next;
  /// What the diversity loss regresses: the velocity in flow mode, the x0
  /// estimate in diffusion mode.
  ad::Tensor prediction;
};

class Process {
 public:
  virtual ~Process() = default;

  virtual const char* name() const = 0;
  virtual PredictionMode prediction_mode() const = 0;

  /// Process times of the few-step student sampler, pure noise first.
  virtual const std::vector<double>& student_times() const = 0;
  virtual const std::vector<double>& teacher_times() const = 0;

  /// One deterministic sampler step from `from` to `to`.
  virtual ad::Tensor step(const VelocityNet& net, std::span<const ad::Tensor> params,
                          const ad::Tensor& z, double from, double to) const = 0;
  virtual FirstStep first_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                               const ad::Tensor& eps) const = 0;

  /// Regression loss that trains a teacher or fake model on clean data x.
  virtual ad::Tensor denoising_loss(const VelocityNet& net, std::span<const ad::Tensor> params,
                                    const ad::Tensor& x, const ad::Tensor& eps,
                                    std::span<const double> t) const = 0;
  virtual std::vector<double> draw_training_times(Rng& rng, std::size_t n) const = 0;
  /// Times for the DMD branch; (lo, hi) are fractions of the time horizon.
  /// Either one draw shared by the batch or one per row.
  virtual std::vector<double> draw_dmd_times(Rng& rng, std::size_t n, double lo, double hi,
                                             bool per_sample) const = 0;

  /// Forward noising of x to per-row times t.
  virtual ad::Tensor noise(const ad::Tensor& x, const ad::Tensor& eps,
                           std::span<const double> t) const = 0;
  /// Marginal score estimate from the network, as a constant.
  virtual ad::Tensor score(const VelocityNet& net, const ad::Tensor& z,
                           std::span<const double> t) const = 0;

  /// Detached regression target for FirstStep::prediction, built from K
  /// teacher steps on the teacher grid. `params` lets callers bind the
  /// teacher on a tape; the result never carries gradient.
  virtual ad::Tensor diversity_target(const VelocityNet& teacher,
                                      std::span<const ad::Tensor> params, const ad::Tensor& eps,
                                      std::size_t anchor_step) const = 0;
};

/// Applies student steps from_step .. N-1 of the process's student grid.
/// from_step == N returns z unchanged.
ad::Tensor rollout(const Process& process, const VelocityNet& net,
                   std::span<const ad::Tensor> params, const ad::Tensor& z, std::size_t from_step);

/// Samples with an arbitrary time grid (pure noise first).
ad::Tensor sample_with_grid(const Process& process, const VelocityNet& net, const ad::Tensor& eps,
                            const std::vector<double>& times);

class FlowProcess final : public Process {
 public:
  FlowProcess(std::size_t student_steps, std::size_t teacher_steps);
  FlowProcess(std::vector<double> student_times, std::vector<double> teacher_times);

  const char* name() const override { return "flow"; }
  PredictionMode prediction_mode() const override { return PredictionMode::kVelocity; }
  const std::vector<double>& student_times() const override { return student_; }
  const std::vector<double>& teacher_times() const override { return teacher_; }

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
  std::vector<double> student_;
  std::vector<double> teacher_;
};

}  // namespace dpdmd
