// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flow-matching primitives on the linear path z_t = (1 - t) x + t eps, whose
// velocity is eps - x. Time runs from data (t = 0) to noise (t = 1); sampling
// integrates backward from 1 to 0.

#pragma once

#include <span>
#include <vector>

#include "dpdmd/autodiff.hpp"
#include "dpdmd/network.hpp"

namespace dpdmd::flow {

/// Strictly decreasing times 1 = t_0 > t_1 > ... > t_S = 0. times[k] is the
/// time reached after k steps.
class SamplerSchedule {
 public:
  /// Validates the invariants.
  explicit SamplerSchedule(std::vector<double> times);
  /// t_k = 1 - k / steps.
  static SamplerSchedule uniform(std::size_t steps);

  std::size_t steps() const { return times_.size() - 1; }
  double operator[](std::size_t k) const { return times_.at(k); }
  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> times_;
};

ad::Tensor interpolate(const ad::Tensor& x, const ad::Tensor& eps, double t);
/// Per-row times; x and eps may be tracked.
ad::Tensor interpolate(const ad::Tensor& x, const ad::Tensor& eps, std::span<const double> t);

ad::Tensor velocity_target(const ad::Tensor& x, const ad::Tensor& eps);

/// mean over batch and dims of |net(z_t, t) - (eps - x)|^2.
ad::Tensor fm_loss(const VelocityNet& net, std::span<const ad::Tensor> params,
                   const ad::Tensor& x, const ad::Tensor& eps, std::span<const double> t);

struct DataNoise {
  ad::Tensor x;
  ad::Tensor eps;
};

/// Inverts the path given a velocity: x = z - t v, eps = z + (1 - t) v.
DataNoise recover_x_eps(const ad::Tensor& z, const ad::Tensor& v, double t);

/// Marginal score of the linear Gaussian path: z_t | x ~ N((1-t) x, t^2 I),
/// so grad log p(z_t) = -E[eps | z_t] / t, with E[eps | z_t] read off the
/// velocity. Rejects t <= 0.
ad::Tensor score_from_velocity(const ad::Tensor& z, const ad::Tensor& v, double t);
ad::Tensor score_from_velocity(const ad::Tensor& z, const ad::Tensor& v,
                               std::span<const double> t);

/// One explicit Euler step z + (t_to - t_from) * net(z, t_from).
ad::Tensor euler_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                      const ad::Tensor& z, double t_from, double t_to);

/// Full trajectory z_{t_0} = eps, ..., z_{t_S} (the sample).
std::vector<ad::Tensor> euler_sample(const VelocityNet& net, const ad::Tensor& eps,
                                     const SamplerSchedule& schedule);

/// Final state of euler_sample without keeping the trajectory.
ad::Tensor euler_final(const VelocityNet& net, const ad::Tensor& eps,
                       const SamplerSchedule& schedule);

}  // namespace dpdmd::flow
