// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// The experiment commands behind the CLI, plus the in-memory building blocks
// they are made of (usable without touching the filesystem).

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dpdmd/config.hpp"
#include "dpdmd/dmd.hpp"
#include "dpdmd/metrics.hpp"
#include "dpdmd/mixture.hpp"
#include "dpdmd/network.hpp"
#include "dpdmd/process.hpp"

namespace dpdmd {

struct TeacherLogRow {
  std::uint64_t iteration = 0;
  double loss = 0.0;
  double wall_ms = 0.0;
};

/// Denoising-loss training of a fresh teacher on mixture samples.
VelocityNet train_teacher(const RunConfig& cfg, const Process& process,
                          std::vector<TeacherLogRow>* log = nullptr);

/// Samples `n` points with the given time grid from the evaluation noise
/// stream of `seed`.
ad::Tensor generate(const Process& process, const VelocityNet& net,
                    const std::vector<double>& times, std::size_t n, std::uint64_t seed);

/// groups x group_size samples through `times`, then every metric.
metrics::MetricsReport evaluate_model(const Process& process, const VelocityNet& net,
                                      const std::vector<double>& times, const RunConfig& cfg);

/// Student and fake both start as copies of the teacher.
struct DistillOutcome {
  VelocityNet student;
  std::vector<LogRow> log;
  metrics::MetricsReport report;
};
DistillOutcome distill(const RunConfig& cfg, const Process& process, const VelocityNet& teacher,
                       const std::function<void(const LogRow&)>& on_row = {});

enum class EvalTarget { kStudent, kTeacher };

std::filesystem::path distill_dir(const RunConfig& cfg);

/// Each command writes under cfg.output_dir and returns a summary.
struct TeacherResult {
  std::string checkpoint_hash;
  metrics::MetricsReport fidelity;
};
TeacherResult cmd_train_teacher(const RunConfig& cfg, std::ostream& log);

struct DistillResult {
  std::string checkpoint_hash;
  metrics::MetricsReport report;
  std::filesystem::path dir;
};
DistillResult cmd_distill(const RunConfig& cfg, std::ostream& log);

metrics::MetricsReport cmd_eval(const RunConfig& cfg, EvalTarget target,
                                const std::optional<std::filesystem::path>& checkpoint,
                                std::ostream& log);

struct SweepRow {
  double value = 0.0;
  metrics::MetricsReport report;
};
/// One distill + eval per sweep value on `threads` workers (0: one per value).
std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, std::size_t threads, std::ostream& log);
std::string sweep_csv_header(SweepAxis axis);

}  // namespace dpdmd
