// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/flow.hpp"

#include <string>

#include "dpdmd/error.hpp"

namespace dpdmd::flow {

namespace {

void check_unit(const char* op, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError(std::string(op) + ": t must lie in [0,1], got " + std::to_string(t));
  }
}

}  // namespace

SamplerSchedule::SamplerSchedule(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw ConfigError("sampler schedule needs at least one step");
  if (times_.front() != 1.0 || times_.back() != 0.0) {
    throw ConfigError("sampler schedule must start at exactly 1 and end at exactly 0");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] < times_[k - 1])) {
      throw ConfigError("sampler schedule must be strictly decreasing (index " +
                        std::to_string(k) + ")");
    }
  }
}

SamplerSchedule SamplerSchedule::uniform(std::size_t steps) {
  if (steps == 0) throw ConfigError("sampler schedule needs at least one step");
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    t[k] = 1.0 - static_cast<double>(k) / static_cast<double>(steps);
  }
  t.back() = 0.0;
  return SamplerSchedule(std::move(t));
}

ad::Tensor interpolate(const ad::Tensor& x, const ad::Tensor& eps, double t) {
  check_unit("interpolate", t);
  if (x.shape() != eps.shape()) {
    throw ShapeError("interpolate: shape mismatch " + ad::shape_string(x.shape()) + " vs " +
                     ad::shape_string(eps.shape()));
  }
  return ad::add(ad::scale(x, 1.0 - t), ad::scale(eps, t));
}

ad::Tensor interpolate(const ad::Tensor& x, const ad::Tensor& eps, std::span<const double> t) {
  for (double ti : t) check_unit("interpolate", ti);
  if (x.shape() != eps.shape()) {
    throw ShapeError("interpolate: shape mismatch " + ad::shape_string(x.shape()) + " vs " +
                     ad::shape_string(eps.shape()));
  }
  std::vector<double> keep(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) keep[i] = 1.0 - t[i];
  return ad::add(ad::row_scale(x, keep), ad::row_scale(eps, t));
}

ad::Tensor velocity_target(const ad::Tensor& x, const ad::Tensor& eps) {
  return ad::sub(eps, x);
}

ad::Tensor fm_loss(const VelocityNet& net, std::span<const ad::Tensor> params,
                   const ad::Tensor& x, const ad::Tensor& eps, std::span<const double> t) {
  const ad::Tensor z = interpolate(x, eps, t);
  return ad::mse(net.forward(params, z, t), velocity_target(x, eps));
}

DataNoise recover_x_eps(const ad::Tensor& z, const ad::Tensor& v, double t) {
  check_unit("recover_x_eps", t);
  return {ad::sub(z, ad::scale(v, t)), ad::add(z, ad::scale(v, 1.0 - t))};
}

ad::Tensor score_from_velocity(const ad::Tensor& z, const ad::Tensor& v, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw DomainError("score_from_velocity: t must lie in (0,1], got " + std::to_string(t));
  }
  const ad::Tensor eps_hat = ad::add(z, ad::scale(v, 1.0 - t));
  return ad::scale(eps_hat, -1.0 / t);
}

ad::Tensor score_from_velocity(const ad::Tensor& z, const ad::Tensor& v,
                               std::span<const double> t) {
  if (t.size() != z.rows()) {
    throw ShapeError("score_from_velocity: " + std::to_string(t.size()) + " times for " +
                     std::to_string(z.rows()) + " rows");
  }
  std::vector<double> keep(t.size());
  std::vector<double> inv(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0 && t[i] <= 1.0)) {
      throw DomainError("score_from_velocity: t must lie in (0,1], got " + std::to_string(t[i]));
    }
    keep[i] = 1.0 - t[i];
    inv[i] = -1.0 / t[i];
  }
  return ad::row_scale(ad::add(z, ad::row_scale(v, keep)), inv);
}

ad::Tensor euler_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                      const ad::Tensor& z, double t_from, double t_to) {
  return ad::add(z, ad::scale(net.forward(params, z, t_from), t_to - t_from));
}

std::vector<ad::Tensor> euler_sample(const VelocityNet& net, const ad::Tensor& eps,
                                     const SamplerSchedule& schedule) {
  std::vector<ad::Tensor> traj{eps};
  traj.reserve(schedule.steps() + 1);
  for (std::size_t k = 0; k < schedule.steps(); ++k) {
    traj.push_back(euler_step(net, net.parameters(), traj.back(), schedule[k], schedule[k + 1]));
  }
  return traj;
}

ad::Tensor euler_final(const VelocityNet& net, const ad::Tensor& eps,
                       const SamplerSchedule& schedule) {
  ad::Tensor z = eps;
  for (std::size_t k = 0; k < schedule.steps(); ++k) {
    z = euler_step(net, net.parameters(), z, schedule[k], schedule[k + 1]);
  }
  return z;
}

}  // namespace dpdmd::flow
