// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/dpdmd.hpp"

#include <string>

#include "dpdmd/error.hpp"

namespace dpdmd {

DiversityTarget make_diversity_target(const VelocityNet& teacher, const ad::Tensor& eps,
                                      std::size_t anchor_step,
                                      const flow::SamplerSchedule& schedule) {
  return make_diversity_target(teacher, teacher.parameters(), eps, anchor_step, schedule);
}

DiversityTarget make_diversity_target(const VelocityNet& teacher,
                                      std::span<const ad::Tensor> teacher_params,
                                      const ad::Tensor& eps, std::size_t anchor_step,
                                      const flow::SamplerSchedule& schedule) {
  if (anchor_step == 0) {
    throw ConfigError("anchor step K must be at least 1: at t = 1 the target is 0/0");
  }
  if (anchor_step > schedule.steps()) {
    throw ConfigError("anchor step K = " + std::to_string(anchor_step) + " exceeds the " +
                      std::to_string(schedule.steps()) + "-step teacher schedule");
  }
  const ad::Tensor source = ad::detach(eps);
  ad::Tensor z = source;
  for (std::size_t k = 0; k < anchor_step; ++k) {
    z = ad::detach(flow::euler_step(teacher, teacher_params, z, schedule[k], schedule[k + 1]));
  }
  DiversityTarget target;
  target.t_k = schedule[anchor_step];
  target.anchor_state = z;
  target.source_eps = source;
  target.v_target = ad::scale(ad::sub(source, z), 1.0 / (1.0 - target.t_k));
  return target;
}

ad::Tensor diversity_loss(const VelocityNet& student, std::span<const ad::Tensor> params,
                          const ad::Tensor& eps, const DiversityTarget& target) {
  return ad::mse(student.forward(params, eps, 1.0), ad::detach(target.v_target));
}

std::vector<LogRow> train_dpdmd(const Process& process, const VelocityNet& teacher,
                                VelocityNet& student, VelocityNet& fake,
                                DistillSettings settings, const TrainSchedule& schedule,
                                std::uint64_t seed, const Evaluator& evaluator) {
  settings.method = Method::kDpdmd;
  Distiller d(process, teacher, student, fake, std::move(settings), seed);
  return train(d, schedule, evaluator);
}

}  // namespace dpdmd
