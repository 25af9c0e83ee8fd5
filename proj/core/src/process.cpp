// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/process.hpp"

#include <string>

#include "dpdmd/dpdmd.hpp"
#include "dpdmd/error.hpp"
#include "dpdmd/flow.hpp"

namespace dpdmd {

ad::Tensor rollout(const Process& process, const VelocityNet& net,
                   std::span<const ad::Tensor> params, const ad::Tensor& z, std::size_t from_step) {
  const auto& times = process.student_times();
  const std::size_t n = times.size() - 1;
  if (from_step > n) {
    throw ConfigError("rollout: from_step " + std::to_string(from_step) + " exceeds " +
                      std::to_string(n) + " student steps");
  }
  ad::Tensor out = z;
  for (std::size_t k = from_step; k < n; ++k) {
    out = process.step(net, params, out, times[k], times[k + 1]);
  }
  return out;
}

ad::Tensor sample_with_grid(const Process& process, const VelocityNet& net, const ad::Tensor& eps,
                            const std::vector<double>& times) {
  ad::Tensor z = eps;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    z = process.step(net, net.parameters(), z, times[k], times[k + 1]);
  }
  return z;
}

FlowProcess::FlowProcess(std::size_t student_steps, std::size_t teacher_steps)
    : FlowProcess(flow::SamplerSchedule::uniform(student_steps).times(),
                  flow::SamplerSchedule::uniform(teacher_steps).times()) {}

FlowProcess::FlowProcess(std::vector<double> student_times, std::vector<double> teacher_times)
    : student_(flow::SamplerSchedule(std::move(student_times)).times()),
      teacher_(flow::SamplerSchedule(std::move(teacher_times)).times()) {}

ad::Tensor FlowProcess::step(const VelocityNet& net, std::span<const ad::Tensor> params,
                             const ad::Tensor& z, double from, double to) const {
  return flow::euler_step(net, params, z, from, to);
}

FirstStep FlowProcess::first_step(const VelocityNet& net, std::span<const ad::Tensor> params,
                                  const ad::Tensor& eps) const {
  const ad::Tensor v = net.forward(params, eps, student_[0]);
  // Same arithmetic as flow::euler_step.
  return {ad::add(eps, ad::scale(v, student_[1] - student_[0])), v};
}

ad::Tensor FlowProcess::denoising_loss(const VelocityNet& net, std::span<const ad::Tensor> params,
                                       const ad::Tensor& x, const ad::Tensor& eps,
                                       std::span<const double> t) const {
  return flow::fm_loss(net, params, x, eps, t);
}

std::vector<double> FlowProcess::draw_training_times(Rng& rng, std::size_t n) const {
  std::vector<double> t(n);
  for (auto& v : t) v = rng.uniform();
  return t;
}

std::vector<double> FlowProcess::draw_dmd_times(Rng& rng, std::size_t n, double lo, double hi,
                                                bool per_sample) const {
  if (!per_sample) return std::vector<double>(n, rng.uniform_open(lo, hi));
  std::vector<double> t(n);
  for (auto& v : t) v = rng.uniform_open(lo, hi);
  return t;
}

ad::Tensor FlowProcess::noise(const ad::Tensor& x, const ad::Tensor& eps,
                              std::span<const double> t) const {
  return flow::interpolate(x, eps, t);
}

ad::Tensor FlowProcess::score(const VelocityNet& net, const ad::Tensor& z,
                              std::span<const double> t) const {
  const ad::Tensor zc = ad::detach(z);
  return flow::score_from_velocity(zc, net.forward(zc, t), t);
}

ad::Tensor FlowProcess::diversity_target(const VelocityNet& teacher,
                                         std::span<const ad::Tensor> params,
                                         const ad::Tensor& eps, std::size_t anchor_step) const {
  return make_diversity_target(teacher, params, eps, anchor_step,
                               flow::SamplerSchedule(teacher_))
      .v_target;
}

}  // namespace dpdmd
