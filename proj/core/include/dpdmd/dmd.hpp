// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Distribution matching distillation: fake-model refresh, the reverse-KL
// student gradient written as a surrogate loss, student rollouts, and the
// shared training loop used by both plain DMD and DP-DMD.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpdmd/adam.hpp"
#include "dpdmd/autodiff.hpp"
#include "dpdmd/network.hpp"
#include "dpdmd/process.hpp"
#include "dpdmd/rng.hpp"

namespace dpdmd {

enum class GradNormalization { kNone, kMeanAbs };
const char* to_string(GradNormalization n);

struct DmdConfig {
  /// M: fake-model Adam steps per student step.
  std::size_t fake_updates = 5;
  double t_min = 0.02;
  double t_max = 0.98;
  GradNormalization normalization = GradNormalization::kMeanAbs;
  /// N: student sampler steps.
  std::size_t student_steps = 4;
  /// One DMD time per row rather than one per batch.
  bool per_sample_t = true;
  /// Cut the gradient after the first student step (the DP-DMD rollout with
  /// no diversity branch).
  bool detach_first_step = false;

  void validate() const;
};

struct ScorePair {
  ad::Tensor s_fake;
  ad::Tensor s_real;
  /// Per-row diffusion times at which both scores were evaluated.
  std::vector<double> t_used;
};

/// Scores of both networks at one noised copy of x (detached).
ScorePair score_pair(const Process& process, const VelocityNet& teacher, const VelocityNet& fake,
                     const ad::Tensor& x, const DmdConfig& cfg, Rng& rng);

struct DmdLoss {
  /// Surrogate mean_i <x_i, detach(g_i)>; its gradient w.r.t. x_i is g_i / B.
  ad::Tensor surrogate;
  /// The (possibly normalized) score difference fake - real.
  ad::Tensor g;
  ScorePair scores;
};

DmdLoss dmd_gradient_loss(const Process& process, const VelocityNet& teacher,
                          const VelocityNet& fake, const ad::Tensor& x_theta,
                          const DmdConfig& cfg, Rng& rng);

/// `steps` Adam updates of the denoising loss on fixed student samples.
/// Returns the loss of the last update.
double update_fake(const Process& process, VelocityNet& fake, Adam& optimizer,
                   const ad::Tensor& x_detached, std::size_t steps, Rng& rng);

/// Student steps from_step .. N-1; identity when from_step == N.
ad::Tensor rollout_student(const Process& process, const VelocityNet& student,
                           std::span<const ad::Tensor> params, const ad::Tensor& z_start,
                           std::size_t from_step);

enum class Method { kDmd, kDpdmd };
const char* to_string(Method m);

struct DistillSettings {
  Method method = Method::kDmd;
  DmdConfig dmd;
  /// K: teacher steps to the diversity anchor.
  std::size_t anchor_step = 5;
  /// lambda: weight of the first-step diversity loss.
  double lambda_div = 0.05;
  std::size_t batch_size = 256;
  AdamConfig student_opt;
  AdamConfig fake_opt;
  /// Cosine decay of the student lr over this many iterations down to
  /// student_lr_min_frac of its initial value; 0 keeps it constant.
  std::uint64_t student_lr_decay = 0;
  double student_lr_min_frac = 0.01;

  /// Student lr used for the update of iteration `iteration` (0-based).
  double student_lr_at(std::uint64_t iteration) const;

  void validate(const Process& process) const;
};

struct IterationLosses {
  double total = 0.0;
  double dmd = 0.0;
  double div = 0.0;
  double fm_fake = 0.0;
};

/// Student-side graph of one iteration, recorded on a caller-owned tape.
struct StudentGraph {
  std::vector<ad::Tensor> params;
  FirstStep first;
  /// Input of the differentiable rollout (detached when the first step is cut).
  ad::Tensor z1;
  ad::Tensor x_theta;
  DmdLoss dmd;
  /// Present for DP-DMD.
  std::optional<ad::Tensor> loss_div;
  ad::Tensor total;
};

StudentGraph build_student_graph(ad::Tape& tape, const Process& process,
                                 const VelocityNet& teacher, const VelocityNet& student,
                                 const VelocityNet& fake, const DistillSettings& settings,
                                 const ad::Tensor& eps, Rng& dmd_rng);

/// Owns optimizer state and random streams for one distillation run. The
/// teacher is only read.
class Distiller {
 public:
  Distiller(const Process& process, const VelocityNet& teacher, VelocityNet& student,
            VelocityNet& fake, DistillSettings settings, std::uint64_t seed);

  IterationLosses iterate();
  std::uint64_t iterations_done() const { return done_; }
  const DistillSettings& settings() const { return settings_; }
  const VelocityNet& student() const { return student_; }

 private:
  const Process& process_;
  const VelocityNet& teacher_;
  VelocityNet& student_;
  VelocityNet& fake_;
  DistillSettings settings_;
  Adam student_opt_;
  Adam fake_opt_;
  Rng rollout_rng_;
  Rng fake_rng_;
  Rng student_rng_;
  Rng dmd_rng_;
  std::uint64_t done_ = 0;
};

struct EvalPoint {
  double diversity = 0.0;
  std::size_t modes_covered = 0;
  double quality_nll = 0.0;
  double mean_dist = 0.0;
};

struct LogRow {
  std::uint64_t iteration = 0;
  IterationLosses losses;
  double lambda = 0.0;
  EvalPoint eval;
  double wall_ms = 0.0;
};

std::string log_csv_header();
std::string log_csv_row(const LogRow& row, const char* mode, Method method);

using Evaluator = std::function<EvalPoint(const VelocityNet& student)>;

struct TrainSchedule {
  std::uint64_t iterations = 6000;
  /// 0 disables periodic evaluation.
  std::uint64_t eval_interval = 500;
};

/// Runs the loop and returns one row per evaluation (including the last
/// iteration). Throws NumericalError naming the iteration on NaN losses.
std::vector<LogRow> train(Distiller& distiller, const TrainSchedule& schedule,
                          const Evaluator& evaluator,
                          const std::function<void(const LogRow&)>& on_row = {});

/// Convenience wrappers fixing the method.
std::vector<LogRow> train_dmd(const Process& process, const VelocityNet& teacher,
                              VelocityNet& student, VelocityNet& fake, DistillSettings settings,
                              const TrainSchedule& schedule, std::uint64_t seed,
                              const Evaluator& evaluator = {});

}  // namespace dpdmd
