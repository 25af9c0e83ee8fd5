// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0
//
// dpdmd command-line front end.
//
// Exit codes: 0 success, 2 configuration error, 3 missing input artifact,
// 4 numerical abort, 1 anything else.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpdmd/checkpoint.hpp"
#include "dpdmd/commands.hpp"
#include "dpdmd/config.hpp"
#include "dpdmd/error.hpp"

namespace {

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumerical = 4;

std::size_t sweep_threads() {
  const char* env = std::getenv("DPDMD_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const long v = std::stol(env);
    if (v < 1) throw dpdmd::ConfigError("DPDMD_THREADS must be a positive integer");
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw dpdmd::ConfigError(std::string("DPDMD_THREADS is not an integer: ") + env);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diversity-preserving distribution matching distillation on toy data"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string mode;
  std::string out;
  std::vector<std::string> overrides;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (key = value or JSON)");
    sub->add_option("--seed", seed, "Run seed");
    sub->add_option("--method", method, "Distillation method")
        ->check(CLI::IsMember({"dmd", "dpdmd"}));
    sub->add_option("--mode", mode, "Model family")->check(CLI::IsMember({"flow", "diffusion"}));
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--set", overrides, "Override one config key (key=value), repeatable");
  };

  auto* teacher = app.add_subcommand("train-teacher", "Train the teacher on mixture samples");
  auto* distill = app.add_subcommand("distill", "Distill a few-step student from the teacher");
  auto* eval = app.add_subcommand("eval", "Sample a checkpoint and compute all metrics");
  auto* sweep = app.add_subcommand("sweep", "Distill + evaluate over a list of K or lambda");
  auto* print = app.add_subcommand("print-config", "Print the effective configuration");
  for (auto* sub : {teacher, distill, eval, sweep, print}) common(sub);

  std::string target = "student";
  std::string checkpoint;
  eval->add_option("--target", target, "Which model to evaluate")
      ->check(CLI::IsMember({"student", "teacher"}));
  eval->add_option("--checkpoint", checkpoint, "Checkpoint path (default: from the output dir)");
  std::string axis;
  std::string values;
  sweep->add_option("--axis", axis, "Swept parameter")->check(CLI::IsMember({"K", "lambda"}));
  sweep->add_option("--values", values, "Comma-separated values");
  bool as_json = false;
  print->add_flag("--json", as_json, "Print JSON instead of key = value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    dpdmd::RunConfig cfg;
    if (!config_path.empty()) cfg = dpdmd::load_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw dpdmd::ConfigError("--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (!method.empty()) cfg.set("method", method);
    if (!mode.empty()) cfg.set("mode", mode);
    if (!out.empty()) cfg.output_dir = out;
    if (!axis.empty()) cfg.set("sweep.axis", axis);
    if (!values.empty()) cfg.set("sweep.values", values);

    if (*print) {
      cfg.validate();
      std::cout << (as_json ? cfg.to_json() : cfg.canonical());
      std::cout << "# config_hash=" << cfg.hash() << "\n";
    } else if (*teacher) {
      dpdmd::cmd_train_teacher(cfg, std::cout);
    } else if (*distill) {
      const auto r = dpdmd::cmd_distill(cfg, std::cout);
      std::cout << r.report.to_json();
    } else if (*eval) {
      std::optional<std::filesystem::path> ck;
      if (!checkpoint.empty()) ck = checkpoint;
      dpdmd::cmd_eval(cfg,
                      target == "teacher" ? dpdmd::EvalTarget::kTeacher
                                          : dpdmd::EvalTarget::kStudent,
                      ck, std::cout);
    } else if (*sweep) {
      const auto rows = dpdmd::cmd_sweep(cfg, sweep_threads(), std::cout);
      std::cout << dpdmd::sweep_csv_header(cfg.sweep.axis) << "\n";
      for (const auto& r : rows) {
        std::cout << r.value << "," << r.report.diversity << "," << r.report.modes_covered << ","
                  << r.report.quality_proxy << "," << r.report.mean_dist_to_nearest_mode << ","
                  << r.report.checkpoint_hash << "\n";
      }
    }
  } catch (const dpdmd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dpdmd::MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitMissing;
  } catch (const dpdmd::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const dpdmd::CheckpointError& e) {
    std::cerr << "checkpoint error (" << dpdmd::to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == dpdmd::CheckpointError::Kind::kShapeMismatch ? kExitConfig : kExitOther;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return 0;
}
