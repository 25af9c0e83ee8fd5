// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "dpdmd/adam.hpp"
#include "dpdmd/checkpoint.hpp"
#include "dpdmd/error.hpp"
#include "dpdmd/run_io.hpp"

namespace dpdmd {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

VelocityNet load_teacher(const RunConfig& cfg) {
  const fs::path path = cfg.teacher_path();
  if (!fs::exists(path)) {
    throw MissingArtifactError("teacher checkpoint not found at " + path.string() +
                               " (run train-teacher with the same output_dir first)");
  }
  return load_checkpoint(path, cfg.net_config());
}

std::string sweep_label(SweepAxis axis, double v) {
  std::ostringstream os;
  os << to_string(axis) << '=' << v;
  return os.str();
}

}  // namespace

VelocityNet train_teacher(const RunConfig& cfg, const Process& process,
                          std::vector<TeacherLogRow>* log) {
  const MixtureSpec spec = cfg.mixture();
  const NetConfig nc = cfg.net_config();
  const Rng root(cfg.seed);
  VelocityNet teacher(nc, Role::kTeacher, root.split("teacher-init").next_u64());
  AdamConfig oc;
  oc.lr = cfg.training.lr;
  Adam opt(oc, teacher.parameters());
  Rng data = root.split("teacher-data");
  Rng noise = root.split("teacher-noise");
  Rng times = root.split("teacher-t");
  const std::size_t batch = cfg.training.batch_size;
  const auto start = Clock::now();
  for (std::uint64_t i = 0; i < cfg.training.teacher_iterations; ++i) {
    const ad::Tensor x = sample_mixture(spec, batch, data);
    const ad::Tensor eps = noise.normal_tensor(batch, spec.dim());
    const std::vector<double> t = process.draw_training_times(times, batch);
    if (cfg.training.teacher_lr_cosine) {
      opt.set_lr(cosine_lr(cfg.training.lr, i, cfg.training.teacher_iterations,
                           cfg.training.lr_min_frac));
    }
    ad::Tape tape;
    const auto params = teacher.bind(tape);
    const ad::Tensor loss = process.denoising_loss(teacher, params, x, eps, t);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw NumericalError("teacher loss is not finite at iteration " + std::to_string(i));
    }
    opt.step(teacher.mutable_parameters(), tape.backward(loss).wrt(params));
    const std::uint64_t done = i + 1;
    const bool periodic =
        cfg.training.eval_interval > 0 && done % cfg.training.eval_interval == 0;
    if (log && (periodic || done == cfg.training.teacher_iterations)) {
      log->push_back({done, value, ms_since(start)});
    }
  }
  return teacher;
}

ad::Tensor generate(const Process& process, const VelocityNet& net,
                    const std::vector<double>& times, std::size_t n, std::uint64_t seed) {
  Rng rng = Rng(seed).split("eval");
  const ad::Tensor eps = rng.normal_tensor(n, net.config().input_dim);
  return sample_with_grid(process, net, eps, times);
}

metrics::MetricsReport evaluate_model(const Process& process, const VelocityNet& net,
                                      const std::vector<double>& times, const RunConfig& cfg) {
  const std::size_t n = cfg.eval.groups * cfg.eval.group_size;
  const ad::Tensor samples = generate(process, net, times, n, cfg.seed);
  metrics::MetricsReport r = metrics::evaluate_samples(samples, cfg.mixture(), cfg.eval, cfg.seed);
  r.config_hash = cfg.hash();
  r.checkpoint_hash = checkpoint_hash(net);
  return r;
}

DistillOutcome distill(const RunConfig& cfg, const Process& process, const VelocityNet& teacher,
                       const std::function<void(const LogRow&)>& on_row) {
  VelocityNet student = teacher.clone();
  student.set_role(Role::kStudent);
  VelocityNet fake = teacher.clone();
  fake.set_role(Role::kFake);
  Distiller d(process, teacher, student, fake, cfg.distill_settings(), cfg.seed);
  const Evaluator evaluator = [&](const VelocityNet& s) {
    const metrics::MetricsReport r = evaluate_model(process, s, process.student_times(), cfg);
    return EvalPoint{r.diversity, r.modes_covered, r.quality_proxy, r.mean_dist_to_nearest_mode};
  };
  TrainSchedule schedule{cfg.training.iterations, cfg.training.eval_interval};
  std::vector<LogRow> log = train(d, schedule, evaluator, on_row);
  metrics::MetricsReport report = evaluate_model(process, student, process.student_times(), cfg);
  report.label = to_string(cfg.method);
  return {std::move(student), std::move(log), std::move(report)};
}

fs::path distill_dir(const RunConfig& cfg) {
  return fs::path(cfg.output_dir) / to_string(cfg.method);
}

TeacherResult cmd_train_teacher(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto start = Clock::now();
  const fs::path dir = cfg.output_dir;
  RunGuard guard(dir, "train-teacher");
  const auto process = cfg.make_process();
  std::vector<TeacherLogRow> rows;
  log << "training " << to_string(cfg.mode) << " teacher for " << cfg.training.teacher_iterations
      << " iterations\n";
  const VelocityNet teacher = train_teacher(cfg, *process, &rows);
  const fs::path ckpt = cfg.teacher_path();
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(teacher, ckpt);

  std::vector<std::string> lines;
  for (const auto& r : rows) {
    lines.push_back(std::to_string(r.iteration) + "," + fmt(r.loss) + "," + fmt(r.wall_ms));
  }
  write_text_atomic(dir / "teacher_log.csv",
                    csv_document(cfg.hash(), "iteration,loss,wall_ms", lines));

  const ad::Tensor samples =
      generate(*process, teacher, process->teacher_times(), cfg.teacher_eval_samples, cfg.seed);
  TeacherResult result;
  result.checkpoint_hash = checkpoint_hash(teacher);
  result.fidelity = metrics::evaluate_samples(samples, cfg.mixture(), cfg.eval, cfg.seed);
  result.fidelity.label = "teacher";
  result.fidelity.config_hash = cfg.hash();
  result.fidelity.checkpoint_hash = result.checkpoint_hash;
  write_text_atomic(dir / "teacher_fidelity.json", result.fidelity.to_json());
  log << "teacher covers " << result.fidelity.modes_covered << " modes with "
      << cfg.teacher_steps << " steps\n";

  RunManifest m;
  m.command = "train-teacher";
  m.config_hash = cfg.hash();
  m.checkpoints = {{"teacher", file_hash(ckpt)}};
  m.metric_files = {"teacher_log.csv", "teacher_fidelity.json"};
  m.wall_clock_ms = ms_since(start);
  guard.commit(m);
  return result;
}

DistillResult cmd_distill(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto start = Clock::now();
  const VelocityNet teacher = load_teacher(cfg);
  const fs::path dir = distill_dir(cfg);
  RunGuard guard(dir, "distill");
  const auto process = cfg.make_process();
  log << "distilling with " << to_string(cfg.method) << " (" << to_string(cfg.mode) << ", "
      << cfg.training.iterations << " iterations)\n";
  DistillOutcome out = distill(cfg, *process, teacher, [&](const LogRow& r) {
    log << "  iter " << r.iteration << "  diversity " << r.eval.diversity << "  modes "
        << r.eval.modes_covered << "\n";
  });

  save_checkpoint(out.student, dir / "student.ckpt");
  std::vector<std::string> lines;
  for (const auto& r : out.log) lines.push_back(log_csv_row(r, process->name(), cfg.method));
  const std::string hash = cfg.hash();
  write_text_atomic(dir / "log.csv", csv_document(hash, log_csv_header(), lines));
  write_text_atomic(dir / "metrics.json", out.report.to_json());
  write_text_atomic(dir / "metrics.csv",
                    csv_document(hash, metrics::MetricsReport::csv_header(), {out.report.csv_row()}));
  metrics::write_scatter_csv(
      dir / "scatter.csv",
      generate(*process, out.student, process->student_times(),
               cfg.eval.groups * cfg.eval.group_size, cfg.seed),
      cfg.mixture(), cfg.eval.radius_sigmas);

  RunManifest m;
  m.command = "distill";
  m.config_hash = hash;
  m.checkpoints = {{"teacher", file_hash(cfg.teacher_path())},
                   {"student", file_hash(dir / "student.ckpt")}};
  m.metric_files = {"log.csv", "metrics.json", "metrics.csv", "scatter.csv"};
  m.wall_clock_ms = ms_since(start);
  guard.commit(m);
  return {out.report.checkpoint_hash, out.report, dir};
}

metrics::MetricsReport cmd_eval(const RunConfig& cfg, EvalTarget target,
                                const std::optional<fs::path>& checkpoint, std::ostream& log) {
  cfg.validate();
  const auto start = Clock::now();
  const auto process = cfg.make_process();
  fs::path ckpt;
  fs::path dir;
  if (target == EvalTarget::kTeacher) {
    ckpt = checkpoint.value_or(cfg.teacher_path());
    dir = fs::path(cfg.output_dir) / "teacher";
  } else {
    ckpt = checkpoint.value_or(distill_dir(cfg) / "student.ckpt");
    dir = ckpt.has_parent_path() ? ckpt.parent_path() : fs::path(".");
  }
  if (!fs::exists(ckpt)) throw MissingArtifactError("checkpoint not found at " + ckpt.string());
  const VelocityNet net = load_checkpoint(ckpt, cfg.net_config());
  RunGuard guard(dir, "eval");
  const auto& times =
      target == EvalTarget::kTeacher ? process->teacher_times() : process->student_times();
  metrics::MetricsReport report = evaluate_model(*process, net, times, cfg);
  report.label = target == EvalTarget::kTeacher ? "teacher" : to_string(cfg.method);
  const std::string hash = cfg.hash();
  write_text_atomic(dir / "eval.metrics.json", report.to_json());
  write_text_atomic(dir / "eval.metrics.csv",
                    csv_document(hash, metrics::MetricsReport::csv_header(), {report.csv_row()}));
  metrics::write_scatter_csv(
      dir / "eval.scatter.csv",
      generate(*process, net, times, cfg.eval.groups * cfg.eval.group_size, cfg.seed),
      cfg.mixture(), cfg.eval.radius_sigmas);
  log << report.label << ": diversity " << report.diversity << ", modes " << report.modes_covered
      << ", mean distance " << report.mean_dist_to_nearest_mode << "\n";
  RunManifest m;
  m.command = "eval";
  m.config_hash = hash;
  m.checkpoints = {{report.label, file_hash(ckpt)}};
  m.metric_files = {"eval.metrics.json", "eval.metrics.csv", "eval.scatter.csv"};
  m.wall_clock_ms = ms_since(start);
  guard.commit(m);
  return report;
}

std::string sweep_csv_header(SweepAxis axis) {
  return std::string(to_string(axis)) +
         ",diversity,modes_covered,quality_proxy_nll,mean_dist_to_nearest_mode,checkpoint_hash";
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, std::size_t threads, std::ostream& log) {
  cfg.validate();
  const auto start = Clock::now();
  (void)load_teacher(cfg);
  const fs::path root = cfg.output_dir;
  RunGuard guard(root, "sweep");
  const std::size_t n = cfg.sweep.values.size();
  std::vector<RunConfig> runs;
  for (double v : cfg.sweep.values) {
    RunConfig sub = cfg;
    sub.method = Method::kDpdmd;
    if (cfg.sweep.axis == SweepAxis::kAnchorStep) {
      sub.anchor_step = static_cast<std::size_t>(v);
    } else {
      sub.lambda_div = v;
    }
    sub.teacher_checkpoint = cfg.teacher_path().string();
    sub.output_dir = (root / ("sweep-" + std::string(to_string(cfg.sweep.axis))) /
                      sweep_label(cfg.sweep.axis, v))
                         .string();
    runs.push_back(std::move(sub));
  }

  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      std::ostringstream run_log;
      try {
        const DistillResult r = cmd_distill(runs[i], run_log);
        rows[i] = {cfg.sweep.values[i], r.report};
        rows[i].report.label = sweep_label(cfg.sweep.axis, cfg.sweep.values[i]);
      } catch (...) {
        const std::lock_guard lock(log_mu);
        if (!failure) failure = std::current_exception();
      }
      const std::lock_guard lock(log_mu);
      log << "[" << sweep_label(cfg.sweep.axis, cfg.sweep.values[i]) << "]\n" << run_log.str();
    }
  };
  const std::size_t workers = std::min(n, threads == 0 ? n : threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> lines;
  for (const auto& r : rows) {
    lines.push_back(fmt(r.value) + "," + fmt(r.report.diversity) + "," +
                    std::to_string(r.report.modes_covered) + "," + fmt(r.report.quality_proxy) +
                    "," + fmt(r.report.mean_dist_to_nearest_mode) + "," +
                    r.report.checkpoint_hash);
  }
  const std::string file = "sweep-" + std::string(to_string(cfg.sweep.axis)) + ".csv";
  write_text_atomic(root / file, csv_document(cfg.hash(), sweep_csv_header(cfg.sweep.axis), lines));
  RunManifest m;
  m.command = "sweep";
  m.config_hash = cfg.hash();
  for (const auto& r : rows) m.checkpoints.emplace_back(r.report.label, r.report.checkpoint_hash);
  m.metric_files = {file};
  m.wall_clock_ms = ms_since(start);
  guard.commit(m);
  return rows;
}

}  // namespace dpdmd
