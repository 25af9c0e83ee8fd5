// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration. Text form is flat `key = value` lines with dotted
// sections (`#` starts a comment); JSON objects are accepted too and are
// flattened to the same dotted keys.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dpdmd/dmd.hpp"
#include "dpdmd/metrics.hpp"
#include "dpdmd/mixture.hpp"
#include "dpdmd/network.hpp"
#include "dpdmd/process.hpp"

namespace dpdmd {

enum class Mode { kFlow, kDiffusion };
const char* to_string(Mode m);

enum class SweepAxis { kAnchorStep, kLambda };
const char* to_string(SweepAxis a);

struct RunConfig {
  std::string dataset = "ring8";
  NetConfig net;
  std::size_t teacher_steps = 30;
  DmdConfig dmd;
  std::size_t anchor_step = 5;
  double lambda_div = 0.05;

  struct Training {
    std::uint64_t teacher_iterations = 20000;
    std::uint64_t iterations = 6000;
    std::size_t batch_size = 256;
    /// Teacher learning rate.
    double lr = 1e-3;
    double student_lr = 1e-3;
    double fake_lr = 1e-3;
    /// Cosine decay over the run down to lr_min_frac of the initial lr.
    bool teacher_lr_cosine = false;
    bool student_lr_cosine = false;
    double lr_min_frac = 0.01;
    std::uint64_t eval_interval = 500;
  } training;

  metrics::EvalSettings eval;
  /// Samples drawn when checking teacher fidelity after training.
  std::size_t teacher_eval_samples = 2000;

  struct Diffusion {
    std::size_t T = 1000;
    double alpha_bar_min = 0.005;
  } diffusion;

  struct Sweep {
    SweepAxis axis = SweepAxis::kAnchorStep;
    std::vector<double> values = {1, 3, 5, 10};
  } sweep;

  std::uint64_t seed = 0;
  Mode mode = Mode::kFlow;
  Method method = Method::kDpdmd;
  std::string output_dir = "runs/default";
  /// Empty: <output_dir>/teacher.ckpt.
  std::string teacher_checkpoint;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  /// Sets one dotted key from its text value.
  void set(const std::string& key, const std::string& value);
  /// All keys, sorted, one `key = value` per line.
  std::string canonical() const;
  /// CRC-64 of the canonical form without the path keys.
  std::string hash() const;
  std::string to_json() const;

  static std::vector<std::string> keys();

  MixtureSpec mixture() const;
  NetConfig net_config() const;
  std::unique_ptr<Process> make_process() const;
  DistillSettings distill_settings() const;
  std::filesystem::path teacher_path() const;
};

/// Parses text; JSON when the first non-space character is '{'.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace dpdmd
