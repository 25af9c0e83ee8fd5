// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/dmd.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "dpdmd/error.hpp"

namespace dpdmd {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void check_finite(double v, const char* what, std::uint64_t iteration) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string(what) + " is not finite at iteration " +
                         std::to_string(iteration));
  }
}

}  // namespace

const char* to_string(GradNormalization n) {
  return n == GradNormalization::kNone ? "none" : "mean-abs";
}

const char* to_string(Method m) { return m == Method::kDmd ? "dmd" : "dpdmd"; }

void DmdConfig::validate() const {
  if (fake_updates == 0) throw ConfigError("dmd.fake_updates (M) must be at least 1");
  if (!(t_min > 0.0 && t_min < t_max && t_max < 1.0)) {
    throw ConfigError("dmd t-range must satisfy 0 < t_min < t_max < 1, got (" +
                      std::to_string(t_min) + ", " + std::to_string(t_max) + ")");
  }
  if (student_steps == 0) throw ConfigError("student_steps (N) must be at least 1");
}

void DistillSettings::validate(const Process& process) const {
  dmd.validate();
  if (dmd.student_steps + 1 != process.student_times().size()) {
    throw ConfigError("student_steps " + std::to_string(dmd.student_steps) +
                      " does not match the process grid of " +
                      std::to_string(process.student_times().size() - 1) + " steps");
  }
  if (batch_size == 0) throw ConfigError("training.batch_size must be positive");
  if (!(lambda_div >= 0.0) || !std::isfinite(lambda_div)) {
    throw ConfigError("dpdmd.lambda must be a finite nonnegative number");
  }
  const std::size_t teacher_steps = process.teacher_times().size() - 1;
  if (method == Method::kDpdmd && (anchor_step == 0 || anchor_step > teacher_steps)) {
    throw ConfigError("dpdmd.anchor_step K must lie in [1, " + std::to_string(teacher_steps) +
                      "], got " + std::to_string(anchor_step));
  }
  if (!(student_lr_min_frac > 0.0 && student_lr_min_frac <= 1.0)) {
    throw ConfigError("student lr floor fraction must lie in (0, 1]");
  }
  student_opt.validate();
  fake_opt.validate();
}

double DistillSettings::student_lr_at(std::uint64_t iteration) const {
  return cosine_lr(student_opt.lr, iteration, student_lr_decay, student_lr_min_frac);
}

ScorePair score_pair(const Process& process, const VelocityNet& teacher, const VelocityNet& fake,
                     const ad::Tensor& x, const DmdConfig& cfg, Rng& rng) {
  const std::size_t batch = x.rows();
  std::vector<double> t = process.draw_dmd_times(rng, batch, cfg.t_min, cfg.t_max,
                                                 cfg.per_sample_t);
  const ad::Tensor eps = rng.normal_tensor(batch, x.cols());
  const ad::Tensor z = process.noise(ad::detach(x), eps, t);
  ScorePair pair{process.score(fake, z, t), process.score(teacher, z, t), std::move(t)};
  return pair;
}

DmdLoss dmd_gradient_loss(const Process& process, const VelocityNet& teacher,
                          const VelocityNet& fake, const ad::Tensor& x_theta,
                          const DmdConfig& cfg, Rng& rng) {
  ScorePair scores = score_pair(process, teacher, fake, x_theta, cfg, rng);
  ad::Tensor g = ad::sub(scores.s_fake, scores.s_real);
  if (cfg.normalization == GradNormalization::kMeanAbs) {
    double m = 0.0;
    for (double v : g.values()) m += std::abs(v);
    m /= static_cast<double>(g.size());
    // All-zero g: nothing to normalize, keep the raw (zero) difference.
    if (m > 0.0) g = ad::scale(g, 1.0 / m);
  }
  const ad::Tensor surrogate =
      ad::scale(ad::sum(ad::mul(x_theta, g)), 1.0 / static_cast<double>(x_theta.rows()));
  return {surrogate, g, std::move(scores)};
}

double update_fake(const Process& process, VelocityNet& fake, Adam& optimizer,
                   const ad::Tensor& x_detached, std::size_t steps, Rng& rng) {
  if (steps == 0) throw ConfigError("fake model needs at least one update per student step");
  const ad::Tensor x = ad::detach(x_detached);
  double last = 0.0;
  for (std::size_t m = 0; m < steps; ++m) {
    const ad::Tensor eps = rng.normal_tensor(x.rows(), x.cols());
    const std::vector<double> t = process.draw_training_times(rng, x.rows());
    ad::Tape tape;
    const auto params = fake.bind(tape);
    const ad::Tensor loss = process.denoising_loss(fake, params, x, eps, t);
    last = loss.item();
    const auto grads = tape.backward(loss).wrt(params);
    optimizer.step(fake.mutable_parameters(), grads);
  }
  return last;
}

ad::Tensor rollout_student(const Process& process, const VelocityNet& student,
                           std::span<const ad::Tensor> params, const ad::Tensor& z_start,
                           std::size_t from_step) {
  return rollout(process, student, params, z_start, from_step);
}

StudentGraph build_student_graph(ad::Tape& tape, const Process& process,
                                 const VelocityNet& teacher, const VelocityNet& student,
                                 const VelocityNet& fake, const DistillSettings& settings,
                                 const ad::Tensor& eps, Rng& dmd_rng) {
  StudentGraph g;
  g.params = student.bind(tape);
  g.first = process.first_step(student, g.params, eps);
  const bool dpdmd = settings.method == Method::kDpdmd;
  g.z1 = dpdmd || settings.dmd.detach_first_step ? ad::detach(g.first.next) : g.first.next;
  g.x_theta = rollout_student(process, student, g.params, g.z1, 1);
  g.dmd = dmd_gradient_loss(process, teacher, fake, g.x_theta, settings.dmd, dmd_rng);
  g.total = g.dmd.surrogate;
  if (dpdmd) {
    const ad::Tensor target =
        process.diversity_target(teacher, teacher.parameters(), eps, settings.anchor_step);
    g.loss_div = ad::mse(g.first.prediction, target);
    // lambda == 0 leaves the total untouched so the update matches a plain
    // cut-first-step DMD step bit for bit.
    if (settings.lambda_div > 0.0) {
      g.total = ad::add(g.dmd.surrogate, ad::scale(*g.loss_div, settings.lambda_div));
    }
  }
  return g;
}

Distiller::Distiller(const Process& process, const VelocityNet& teacher, VelocityNet& student,
                     VelocityNet& fake, DistillSettings settings, std::uint64_t seed)
    : process_(process),
      teacher_(teacher),
      student_(student),
      fake_(fake),
      settings_(std::move(settings)),
      student_opt_(settings_.student_opt, student.parameters()),
      fake_opt_(settings_.fake_opt, fake.parameters()) {
  settings_.validate(process);
  for (const VelocityNet* net : {&teacher, static_cast<const VelocityNet*>(&student),
                                  static_cast<const VelocityNet*>(&fake)}) {
    if (net->config() != teacher.config()) {
      throw ConfigError("teacher, student and fake must share one network config");
    }
    if (net->config().prediction_mode != process.prediction_mode()) {
      throw ConfigError(std::string("network prediction mode does not match the ") +
                        process.name() + " process");
    }
  }
  const Rng base = Rng(seed).split("distill");
  rollout_rng_ = base.split("fake-samples");
  fake_rng_ = base.split("fake-update");
  student_rng_ = base.split("student-noise");
  dmd_rng_ = base.split("dmd-diffusion");
}

IterationLosses Distiller::iterate() {
  const std::size_t batch = settings_.batch_size;
  const std::size_t dim = student_.config().input_dim;
  IterationLosses out;

  const ad::Tensor fake_eps = rollout_rng_.normal_tensor(batch, dim);
  const ad::Tensor samples = rollout(process_, student_, student_.parameters(), fake_eps, 0);
  out.fm_fake = update_fake(process_, fake_, fake_opt_, samples, settings_.dmd.fake_updates,
                            fake_rng_);
  check_finite(out.fm_fake, "fake denoising loss", done_);

  const ad::Tensor eps = student_rng_.normal_tensor(batch, dim);
  ad::Tape tape;
  const StudentGraph g =
      build_student_graph(tape, process_, teacher_, student_, fake_, settings_, eps, dmd_rng_);
  out.dmd = g.dmd.surrogate.item();
  out.div = g.loss_div ? g.loss_div->item() : 0.0;
  out.total = g.total.item();
  check_finite(out.total, "student loss", done_);
  const auto grads = tape.backward(g.total).wrt(g.params);
  if (settings_.student_lr_decay > 0) student_opt_.set_lr(settings_.student_lr_at(done_));
  student_opt_.step(student_.mutable_parameters(), grads);
  ++done_;
  return out;
}

std::string log_csv_header() {
  return "iteration,mode,method,fm_loss_fake,dmd_surrogate,loss_div,lambda,loss_total,"
         "diversity,mode_coverage,quality_proxy,mean_dist_to_nearest_mode,wall_ms";
}

std::string log_csv_row(const LogRow& row, const char* mode, Method method) {
  std::ostringstream os;
  os << row.iteration << ',' << mode << ',' << to_string(method) << ','
     << fmt(row.losses.fm_fake) << ',' << fmt(row.losses.dmd) << ',' << fmt(row.losses.div)
     << ',' << fmt(row.lambda) << ',' << fmt(row.losses.total) << ','
     << fmt(row.eval.diversity) << ',' << row.eval.modes_covered << ','
     << fmt(row.eval.quality_nll) << ',' << fmt(row.eval.mean_dist) << ','
     << fmt(row.wall_ms);
  return os.str();
}

std::vector<LogRow> train(Distiller& distiller, const TrainSchedule& schedule,
                          const Evaluator& evaluator,
                          const std::function<void(const LogRow&)>& on_row) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  std::vector<LogRow> rows;
  const double lambda =
      distiller.settings().method == Method::kDpdmd ? distiller.settings().lambda_div : 0.0;
  for (std::uint64_t i = 0; i < schedule.iterations; ++i) {
    const IterationLosses losses = distiller.iterate();
    const std::uint64_t done = i + 1;
    const bool last = done == schedule.iterations;
    const bool periodic = schedule.eval_interval > 0 && done % schedule.eval_interval == 0;
    if (!last && !periodic) continue;
    LogRow row;
    row.iteration = done;
    row.losses = losses;
    row.lambda = lambda;
    if (evaluator) row.eval = evaluator(distiller.student());
    row.wall_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::vector<LogRow> train_dmd(const Process& process, const VelocityNet& teacher,
                              VelocityNet& student, VelocityNet& fake, DistillSettings settings,
                              const TrainSchedule& schedule, std::uint64_t seed,
                              const Evaluator& evaluator) {
  settings.method = Method::kDmd;
  Distiller d(process, teacher, student, fake, std::move(settings), seed);
  return train(d, schedule, evaluator);
}

}  // namespace dpdmd
