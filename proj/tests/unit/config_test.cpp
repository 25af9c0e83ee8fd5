// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

#include "dpdmd/config.hpp"
#include "dpdmd/diffusion.hpp"
#include "dpdmd/error.hpp"
#include "test_util.hpp"

namespace dpdmd {
namespace {

TEST(Config, DefaultsValidate) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.dmd.student_steps, 4u);
  EXPECT_EQ(c.eval.group_size, 9u);
  EXPECT_EQ(c.teacher_steps, 30u);
}

TEST(Config, CanonicalIsSortedAndReparses) {
  RunConfig c;
  c.set("seed", "17");
  c.set("dpdmd.lambda", "0.1");
  c.set("sweep.values", "0.01, 0.05,0.1");
  const std::string text = c.canonical();
  std::vector<std::string> keys;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) keys.push_back(line.substr(0, line.find(" =")));
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_EQ(keys, RunConfig::keys());
  const RunConfig back = parse_config(text);
  EXPECT_EQ(back.canonical(), text);
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(back.sweep.values, (std::vector<double>{0.01, 0.05, 0.1}));
}

TEST(Config, FlatAndJsonAgree) {
  const RunConfig flat = parse_config(
      "# comment\n"
      "seed = 3\n"
      "net.hidden_width = 64   # trailing\n"
      "\n"
      "method = dmd\n"
      "sweep.values = 1,3\n");
  const RunConfig json = parse_config(
      R"({"seed": 3, "net": {"hidden_width": 64}, "method": "dmd", "sweep": {"values": [1, 3]}})");
  EXPECT_EQ(flat.canonical(), json.canonical());
  EXPECT_EQ(flat.net.hidden_width, 64u);
  EXPECT_EQ(flat.method, Method::kDmd);
}

TEST(Config, ErrorsNameTheKey) {
  RunConfig c;
  auto message = [&](const std::string& k, const std::string& v) {
    try {
      c.set(k, v);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("training.lr", "fast").find("training.lr"), std::string::npos);
  EXPECT_NE(message("seed", "-1").find("seed"), std::string::npos);
  EXPECT_NE(message("bogus.key", "1").find("bogus.key"), std::string::npos);
  EXPECT_NE(message("mode", "sde").find("mode"), std::string::npos);
  EXPECT_NE(message("dmd.detach_first_step", "maybe").find("detach_first_step"),
            std::string::npos);
  EXPECT_THROW(parse_config("seed 3\n"), ConfigError);
  EXPECT_THROW(parse_config("{\"seed\": "), ConfigError);
}

TEST(Config, ValidationRejectsBadCombinations) {
  RunConfig c;
  c.anchor_step = 31;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.dmd.t_min = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.sweep.values = {2.5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.dataset = "spiral";
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.net.input_dim = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.mode = Mode::kDiffusion;
  c.diffusion.T = 10;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, HashIgnoresPathsOnly) {
  RunConfig a;
  RunConfig b;
  b.output_dir = "elsewhere";
  b.teacher_checkpoint = "/tmp/t.ckpt";
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 1;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Config, DerivedObjects) {
  RunConfig c;
  EXPECT_EQ(c.teacher_path(), std::filesystem::path("runs/default") / "teacher.ckpt");
  c.teacher_checkpoint = "x.ckpt";
  EXPECT_EQ(c.teacher_path(), std::filesystem::path("x.ckpt"));
  EXPECT_EQ(c.net_config().prediction_mode, PredictionMode::kVelocity);
  EXPECT_STREQ(c.make_process()->name(), "flow");
  c.mode = Mode::kDiffusion;
  EXPECT_EQ(c.net_config().prediction_mode, PredictionMode::kEpsilon);
  const auto p = c.make_process();
  EXPECT_STREQ(p->name(), "diffusion");
  EXPECT_EQ(p->student_times().front(), 1000.0);
  const DistillSettings s = c.distill_settings();
  EXPECT_EQ(s.method, Method::kDpdmd);
  EXPECT_EQ(s.anchor_step, 5u);
  EXPECT_EQ(s.student_opt.lr, c.training.student_lr);
  EXPECT_EQ(c.mixture().size(), 8u);
}

TEST(Config, LoadFromFile) {
  const auto dir = testing::temp_dir("config");
  {
    std::ofstream os(dir / "run.cfg");
    os << "seed = 9\nmode = diffusion\n";
  }
  const RunConfig c = load_config(dir / "run.cfg");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.mode, Mode::kDiffusion);
  EXPECT_THROW(load_config(dir / "missing.cfg"), ConfigError);
}

}  // namespace
}  // namespace dpdmd
