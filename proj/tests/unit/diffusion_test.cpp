// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dpdmd/diffusion.hpp"
#include "dpdmd/error.hpp"
#include "test_util.hpp"

namespace dpdmd {
namespace {

using ad::Tensor;
using diffusion::DiffusionSchedule;

NetConfig eps_config(std::uint32_t dim = 2) {
  return testing::small_config(dim, 8, 2, PredictionMode::kEpsilon);
}

TEST(Schedule, Validation) {
  EXPECT_NO_THROW(DiffusionSchedule({1.0, 0.5, 0.1}));
  EXPECT_THROW(DiffusionSchedule({0.9, 0.5}), ConfigError);
  EXPECT_THROW(DiffusionSchedule({1.0, 0.5, 0.5}), ConfigError);
  EXPECT_THROW(DiffusionSchedule({1.0, 0.0}), ConfigError);
  EXPECT_THROW(DiffusionSchedule({1.0}), ConfigError);
  EXPECT_THROW(DiffusionSchedule::cosine(0), ConfigError);
  EXPECT_THROW(DiffusionSchedule::cosine(100, 1.0), ConfigError);
}

TEST(Schedule, CosineEndpoints) {
  const auto s = DiffusionSchedule::cosine(1000, 0.005);
  EXPECT_EQ(s.T(), 1000u);
  EXPECT_EQ(s.alpha_bar(0), 1.0);
  EXPECT_NEAR(s.alpha_bar(1000), 0.005, 1e-12);
  for (std::size_t t = 1; t <= 1000; ++t) ASSERT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
}

TEST(Diffuse, Examples) {
  const DiffusionSchedule s({1.0, 0.25});
  const Tensor x({1, 1}, {2.0});
  const Tensor zero({1, 1}, {0.0});
  EXPECT_DOUBLE_EQ(diffusion::diffuse(x, zero, 1, s)[0], 1.0);
  EXPECT_EQ(diffusion::diffuse(x, Tensor({1, 1}, {3.0}), 0, s)[0], 2.0);
  EXPECT_THROW(diffusion::diffuse(x, zero, 2, s), DomainError);
}

TEST(X0FromEps, Examples) {
  const DiffusionSchedule s({1.0, 0.25});
  const Tensor one({1, 1}, {1.0});
  EXPECT_NEAR(diffusion::x0_from_eps(one, one, 1, s)[0], (1.0 - std::sqrt(0.75)) / 0.5, 1e-15);
  EXPECT_NEAR(diffusion::x0_from_eps(one, one, 1, s)[0], 0.267949, 1e-6);
  const Tensor z({1, 1}, {0.7});
  EXPECT_EQ(diffusion::x0_from_eps(z, one, 0, s)[0], 0.7);
}

TEST(X0FromEps, RoundTripWithTrueNoise) {
  const auto s = DiffusionSchedule::cosine(1000);
  std::mt19937_64 gen(8);
  for (std::size_t t : {1u, 10u, 250u, 500u, 999u, 1000u}) {
    const Tensor x = testing::random_tensor({16, 2}, gen, -3.0, 3.0);
    const Tensor e = testing::random_tensor({16, 2}, gen, -3.0, 3.0);
    const Tensor back = diffusion::x0_from_eps(diffusion::diffuse(x, e, t, s), e, t, s);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(back[i], x[i], 1e-12) << "t=" << t;
  }
}

TEST(Ddim, TrueNoiseLandsOnTheForwardProcess) {
  const auto s = DiffusionSchedule::cosine(1000);
  std::mt19937_64 gen(9);
  const Tensor x = testing::random_tensor({4, 2}, gen);
  const Tensor e = testing::random_tensor({4, 2}, gen);
  const Tensor z = diffusion::diffuse(x, e, 1000, s);
  const Tensor mid = diffusion::ddim_from_prediction(z, e, 1000, 400, s);
  const Tensor expect = diffusion::diffuse(x, e, 400, s);
  const Tensor end = diffusion::ddim_from_prediction(z, e, 1000, 0, s);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(mid[i], expect[i], 1e-12);
    EXPECT_NEAR(end[i], x[i], 1e-12);
  }
  const VelocityNet net(eps_config(), Role::kTeacher, 1);
  EXPECT_THROW(diffusion::ddim_step(net, net.parameters(), z, 10, 10, s), DomainError);
}

TEST(Ddim, UniformGrid) {
  EXPECT_EQ(diffusion::uniform_grid(1000, 4), (std::vector<std::size_t>{1000, 750, 500, 250, 0}));
  EXPECT_EQ(diffusion::uniform_grid(1000, 30)[1], 967u);
  EXPECT_THROW(diffusion::uniform_grid(10, 11), ConfigError);
  EXPECT_THROW(diffusion::uniform_grid(10, 0), ConfigError);
}

TEST(X0Target, ZeroNoisePredictorKeepsTheScaledInput) {
  // eps_hat == 0 means each DDIM step rescales z, so every x0 estimate is z_T / sqrt(ab_T).
  const auto s = DiffusionSchedule::cosine(1000);
  const VelocityNet teacher(eps_config(), Role::kTeacher, 2);
  const Tensor eps({2, 2}, {1.0, -0.5, 0.25, 2.0});
  const auto grid = diffusion::uniform_grid(1000, 30);
  for (std::size_t K : {1u, 5u, 29u}) {
    const Tensor target = diffusion::make_x0_target(teacher, teacher.parameters(), eps, K, grid, s);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      EXPECT_NEAR(target[i], eps[i] / std::sqrt(s.alpha_bar(1000)), 1e-10);
    }
  }
  EXPECT_THROW(diffusion::make_x0_target(teacher, teacher.parameters(), eps, 0, grid, s),
               ConfigError);
  EXPECT_THROW(diffusion::make_x0_target(teacher, teacher.parameters(), eps, 31, grid, s),
               ConfigError);
}

TEST(DiversityLoss, ExamplesAndDetachedTarget) {
  const DiffusionSchedule s({1.0, 0.5});
  const VelocityNet student(eps_config(1), Role::kStudent, 3);
  ad::Tape tape;
  const Tensor target = tape.leaf(Tensor({1, 1}, {1.0}));
  const Tensor loss = diffusion::diffusion_diversity_loss(student, student.parameters(),
                                                          Tensor({1, 1}, {0.0}), s, target);
  EXPECT_DOUBLE_EQ(loss.item(), 1.0);
  EXPECT_FALSE(tape.backward(loss).reached(target));
}

TEST(Score, FromEps) {
  const DiffusionSchedule s({1.0, 0.75});
  const std::vector<std::size_t> t1{1};
  EXPECT_DOUBLE_EQ(diffusion::score_from_eps(Tensor({1, 1}, {1.0}), t1, s)[0], -2.0);
  const std::vector<std::size_t> t0{0};
  EXPECT_THROW(diffusion::score_from_eps(Tensor({1, 1}, {1.0}), t0, s), DomainError);
}

TEST(Process, TimesAndFirstStep) {
  const diffusion::DiffusionProcess p(DiffusionSchedule::cosine(1000), 4, 30);
  EXPECT_EQ(p.student_times(), (std::vector<double>{1000, 750, 500, 250, 0}));
  Rng rng(4);
  const auto t = p.draw_dmd_times(rng, 2000, 0.02, 0.98, true);
  for (double v : t) {
    ASSERT_EQ(v, std::floor(v));
    ASSERT_GE(v, 20.0);
    ASSERT_LE(v, 980.0);
  }
  const auto train = p.draw_training_times(rng, 2000);
  for (double v : train) {
    ASSERT_GE(v, 1.0);
    ASSERT_LE(v, 1000.0);
  }
  const std::vector<double> bad{0.5};
  EXPECT_THROW(p.noise(Tensor({1, 2}, {0.0, 0.0}), Tensor({1, 2}, {0.0, 0.0}), bad), DomainError);

  const VelocityNet net = testing::constant_net(eps_config(), {0.3, -0.2});
  const Tensor eps({1, 2}, {0.5, 1.0});
  const FirstStep f = p.first_step(net, net.parameters(), eps);
  const Tensor next = p.step(net, net.parameters(), eps, 1000, 750);
  EXPECT_EQ(f.next[0], next[0]);
  EXPECT_EQ(f.next[1], next[1]);
  const Tensor x0 = diffusion::x0_from_eps(eps, Tensor({1, 2}, {0.3, -0.2}), 1000, p.schedule());
  EXPECT_EQ(f.prediction[0], x0[0]);
}

}  // namespace
}  // namespace dpdmd
