// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dpdmd/adam.hpp"
#include "dpdmd/error.hpp"

namespace dpdmd {
namespace {

TEST(Adam, FirstStepMovesBySignTimesLr) {
  // After one step both moments are bias-corrected to g and g^2.
  AdamConfig cfg;
  cfg.lr = 0.1;
  std::vector<ad::Tensor> p{ad::Tensor({3}, {1.0, 2.0, 3.0})};
  Adam opt(cfg, p);
  const std::vector<ad::Tensor> g{ad::Tensor({3}, {0.5, -2.0, 0.0})};
  opt.step(p, g);
  EXPECT_NEAR(p[0][0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p[0][1], 2.0 + 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_EQ(p[0][2], 3.0);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, SecondStepMatchesHandRecursion) {
  AdamConfig cfg;
  cfg.lr = 0.01;
  std::vector<ad::Tensor> p{ad::Tensor({1}, {0.0})};
  Adam opt(cfg, p);
  opt.step(p, std::vector<ad::Tensor>{ad::Tensor({1}, {1.0})});
  opt.step(p, std::vector<ad::Tensor>{ad::Tensor({1}, {3.0})});
  const double m = 0.9 * 0.1 + 0.1 * 3.0;
  const double v = 0.999 * 0.001 + 0.001 * 9.0;
  const double m_hat = m / (1 - 0.81);
  const double v_hat = v / (1 - 0.999 * 0.999);
  const double expected = -0.01 * 1.0 / (1.0 + 1e-8) - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
  EXPECT_NEAR(p[0][0], expected, 1e-14);
}

TEST(Adam, NonFiniteGradientLeavesParametersUntouched) {
  std::vector<ad::Tensor> p{ad::Tensor({2}, {1.0, 2.0})};
  const ad::Tensor before = p[0];
  Adam opt(AdamConfig{}, p);
  const std::vector<ad::Tensor> g{ad::Tensor({2}, {0.1, std::numeric_limits<double>::quiet_NaN()})};
  EXPECT_THROW(opt.step(p, g), NumericalError);
  EXPECT_TRUE(p[0].shares_storage(before));
  EXPECT_EQ(opt.steps(), 0u);
}

TEST(Adam, RejectsShapeMismatch) {
  std::vector<ad::Tensor> p{ad::Tensor({2}, {1.0, 2.0})};
  Adam opt(AdamConfig{}, p);
  EXPECT_THROW(opt.step(p, std::vector<ad::Tensor>{ad::Tensor({3}, {1, 2, 3})}), ShapeError);
}

TEST(Adam, UpdateAllocatesFreshBuffers) {
  std::vector<ad::Tensor> p{ad::Tensor({1}, {1.0})};
  const ad::Tensor alias = p[0];
  Adam opt(AdamConfig{}, p);
  opt.step(p, std::vector<ad::Tensor>{ad::Tensor({1}, {1.0})});
  EXPECT_EQ(alias[0], 1.0);
  EXPECT_NE(p[0][0], 1.0);
}

TEST(Adam, ValidatesConfig) {
  AdamConfig cfg;
  cfg.lr = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AdamConfig{};
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace dpdmd
