// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dpdmd/error.hpp"
#include "dpdmd/mixture.hpp"

namespace dpdmd {
namespace {

TEST(Mixture, WeightsAreNormalized) {
  const MixtureSpec m({{{0.0, 0.0}, 1.0, 2.0}, {{1.0, 0.0}, 1.0, 6.0}});
  EXPECT_DOUBLE_EQ(m[0].weight, 0.25);
  EXPECT_DOUBLE_EQ(m[1].weight, 0.75);
}

TEST(Mixture, RejectsInvalidSpecs) {
  EXPECT_THROW(MixtureSpec({}), ConfigError);
  EXPECT_THROW(MixtureSpec({{{0.0}, 0.0, 1.0}}), ConfigError);
  EXPECT_THROW(MixtureSpec({{{0.0}, 1.0, -1.0}}), ConfigError);
  EXPECT_THROW(MixtureSpec({{{0.0}, 1.0, 1.0}, {{0.0, 1.0}, 1.0, 1.0}}), ConfigError);
  EXPECT_THROW(MixtureSpec::preset("spiral"), ConfigError);
}

TEST(Mixture, RingModesLieOnTheUnitCircle) {
  const auto ring = MixtureSpec::ring(8, 1.0, 0.1);
  ASSERT_EQ(ring.size(), 8u);
  for (const auto& c : ring.components()) {
    EXPECT_NEAR(std::hypot(c.mean[0], c.mean[1]), 1.0, 1e-15);
  }
  EXPECT_NEAR(ring[2].mean[1], 1.0, 1e-15);
}

TEST(Mixture, ParseAcceptsPresetsAndFamilies) {
  EXPECT_EQ(MixtureSpec::parse("ring8").size(), 8u);
  const auto r = MixtureSpec::parse("ring(6,2,0.2)");
  EXPECT_EQ(r.size(), 6u);
  EXPECT_NEAR(r[0].mean[0], 2.0, 1e-15);
  EXPECT_EQ(MixtureSpec::parse("checkerboard(4,0.1)").size(), 8u);
  EXPECT_EQ(MixtureSpec::parse("gaussian(1,2,0.5)")[0].mean[1], 2.0);
  EXPECT_THROW(MixtureSpec::parse("ring(6,x,0.2)"), ConfigError);
  EXPECT_THROW(MixtureSpec::parse("ring(6,2)"), ConfigError);
}

TEST(Mixture, LogDensityOfStandardGaussianAtMean) {
  const auto g = MixtureSpec::gaussian({0.0, 0.0}, 1.0);
  const double x[2] = {0.0, 0.0};
  EXPECT_NEAR(-g.log_density(x), std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(Mixture, LogDensityIsStableFarAway) {
  const auto ring = MixtureSpec::ring(8, 1.0, 0.01);
  const double x[2] = {50.0, 50.0};
  EXPECT_TRUE(std::isfinite(ring.log_density(x)));
}

TEST(Mixture, NearestMode) {
  const auto ring = MixtureSpec::ring(4, 1.0, 0.1);
  const double x[2] = {0.1, 0.9};
  const auto [idx, dist] = ring.nearest_mode(x);
  EXPECT_EQ(idx, 1u);
  EXPECT_NEAR(dist, std::hypot(0.1, 0.1), 1e-15);
}

TEST(Mixture, ZeroWidthComponentReturnsItsMean) {
  const auto g = MixtureSpec::gaussian({0.25, -3.0}, 1e-300);
  Rng rng(1);
  const auto x = sample_mixture(g, 10, rng);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(x.at(i, 0), 0.25);
    EXPECT_EQ(x.at(i, 1), -3.0);
  }
}

TEST(Mixture, RingModesReceiveTheirShare) {
  // Binomial sd at n = 8000, p = 1/8 is ~0.37%; the 2% band is > 5 sd.
  const auto ring = MixtureSpec::ring(8, 1.0, 0.05);
  Rng rng(2024);
  const auto x = sample_mixture(ring, 8000, rng);
  std::vector<int> counts(8, 0);
  for (std::size_t i = 0; i < 8000; ++i) {
    const double p[2] = {x.at(i, 0), x.at(i, 1)};
    ++counts[ring.nearest_mode(p).first];
  }
  for (int c : counts) EXPECT_NEAR(c / 8000.0, 0.125, 0.02);
}

TEST(Mixture, SameSeedSameSamples) {
  const auto ring = MixtureSpec::preset("ring8");
  Rng a(9);
  Rng b(9);
  const auto xa = sample_mixture(ring, 50, a);
  const auto xb = sample_mixture(ring, 50, b);
  for (std::size_t i = 0; i < xa.size(); ++i) EXPECT_EQ(xa[i], xb[i]);
  Rng c(9);
  EXPECT_THROW(sample_mixture(ring, 0, c), ConfigError);
}

}  // namespace
}  // namespace dpdmd
