// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Diversity-preserving DMD for flow models. The student's first step is
// regressed onto a teacher anchor velocity, the rest of the rollout is
// trained by DMD, and the two are separated by a stop-gradient on z1.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dpdmd/autodiff.hpp"
#include "dpdmd/dmd.hpp"
#include "dpdmd/flow.hpp"
#include "dpdmd/network.hpp"

namespace dpdmd {

struct DiversityTarget {
  /// (source_eps - anchor_state) / (1 - t_k)
  ad::Tensor v_target;
  /// Teacher state after K Euler steps from source_eps.
  ad::Tensor anchor_state;
  double t_k = 0.0;
  ad::Tensor source_eps;
};

/// Rolls the teacher K steps along `schedule` from eps. Every output is
/// detached. Rejects K == 0 (the target would be 0/0) and K beyond the grid.
DiversityTarget make_diversity_target(const VelocityNet& teacher, const ad::Tensor& eps,
                                      std::size_t anchor_step,
                                      const flow::SamplerSchedule& schedule);
DiversityTarget make_diversity_target(const VelocityNet& teacher,
                                      std::span<const ad::Tensor> teacher_params,
                                      const ad::Tensor& eps, std::size_t anchor_step,
                                      const flow::SamplerSchedule& schedule);

/// mse(student(eps, 1), v_target).
ad::Tensor diversity_loss(const VelocityNet& student, std::span<const ad::Tensor> params,
                          const ad::Tensor& eps, const DiversityTarget& target);

/// DP-DMD training; forces method = dpdmd.
std::vector<LogRow> train_dpdmd(const Process& process, const VelocityNet& teacher,
                                VelocityNet& student, VelocityNet& fake,
                                DistillSettings settings, const TrainSchedule& schedule,
                                std::uint64_t seed, const Evaluator& evaluator = {});

}  // namespace dpdmd
