// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <numeric>
#include <random>

#include "dpdmd/error.hpp"
#include "dpdmd/metrics.hpp"
#include "test_util.hpp"

namespace dpdmd {
namespace {

using ad::Tensor;
using metrics::FeatureMap;

TEST(Diversity, IdenticalVectorsGiveZero) {
  const Tensor x({4, 2}, {0.3, 0.4, 0.3, 0.4, 0.3, 0.4, 0.3, 0.4});
  EXPECT_NEAR(metrics::pairwise_diversity(x, FeatureMap::raw()), 0.0, 1e-9);
}

TEST(Diversity, OrthogonalPairGivesOne) {
  const Tensor x({2, 2}, {1.0, 0.0, 0.0, 1.0});
  EXPECT_NEAR(metrics::pairwise_diversity(x, FeatureMap::raw()), 1.0, 1e-9);
}

TEST(Diversity, ThreeVectorExample) {
  const double r = 1.0 / std::sqrt(2.0);
  const Tensor x({3, 2}, {1.0, 0.0, 0.0, 1.0, r, r});
  EXPECT_NEAR(metrics::pairwise_diversity(x, FeatureMap::raw()), 1.0 - std::sqrt(2.0) / 3.0,
              1e-9);
  EXPECT_NEAR(metrics::pairwise_diversity(x, FeatureMap::raw()), 0.5286, 1e-4);
}

TEST(Diversity, OppositeVectorsGiveTwo) {
  const Tensor x({2, 3}, {1.0, 2.0, 3.0, -2.0, -4.0, -6.0});
  EXPECT_NEAR(metrics::pairwise_diversity(x, FeatureMap::raw()), 2.0, 1e-12);
}

TEST(Diversity, ScaleAndPermutationInvariance) {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t L = size(gen);
    const std::size_t d = 1 + size(gen) % 5;
    const Tensor x = testing::random_tensor({L, d}, gen);
    const double base = metrics::pairwise_diversity(x, FeatureMap::raw());
    ASSERT_GE(base, -1e-12);
    ASSERT_LE(base, 2.0 + 1e-12);

    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> scaled(L * d);
    std::vector<double> permuted(L * d);
    for (std::size_t i = 0; i < L; ++i) {
      const double s = scale(gen);
      for (std::size_t j = 0; j < d; ++j) {
        scaled[i * d + j] = s * x.at(i, j);
        permuted[i * d + j] = x.at(perm[i], j);
      }
    }
    EXPECT_NEAR(metrics::pairwise_diversity(Tensor({L, d}, scaled), FeatureMap::raw()), base,
                1e-12);
    EXPECT_NEAR(metrics::pairwise_diversity(Tensor({L, d}, permuted), FeatureMap::raw()), base,
                1e-12);
  }
}

TEST(Diversity, RejectsZeroNormAndSingleRow) {
  const Tensor x({3, 2}, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0});
  try {
    metrics::pairwise_diversity(x, FeatureMap::raw());
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("vector 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(metrics::pairwise_diversity(Tensor({1, 2}, {1.0, 1.0}), FeatureMap::raw()),
               ShapeError);
}

TEST(Diversity, GroupedAveragesGroups) {
  // Group 1 identical (0), group 2 orthogonal (1); trailing row ignored.
  const Tensor x({5, 2}, {1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 5.0, 5.0});
  EXPECT_NEAR(metrics::grouped_diversity(x, 2, FeatureMap::raw()), 0.5, 1e-12);
  EXPECT_THROW(metrics::grouped_diversity(x, 1, FeatureMap::raw()), ConfigError);
  EXPECT_THROW(metrics::grouped_diversity(x, 6, FeatureMap::raw()), ShapeError);
}

TEST(FeatureMap, ProjectionIsSeededAndFixed) {
  const auto a = FeatureMap::random_projection(2, 16, 5);
  const auto b = FeatureMap::random_projection(2, 16, 5);
  const auto c = FeatureMap::random_projection(2, 16, 6);
  const Tensor x({3, 2}, {1.0, 2.0, -1.0, 0.5, 0.0, 1.0});
  const Tensor fa = a.apply(x);
  EXPECT_EQ(fa.shape(), (ad::Shape{3, 16}));
  const Tensor fb = b.apply(x);
  const Tensor fc = c.apply(x);
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(fa[i], fb[i]);
  EXPECT_NE(fa[0], fc[0]);
  EXPECT_THROW(FeatureMap::random_projection(0, 4, 1), ConfigError);
}

TEST(Coverage, AllAtOneModeCoversOne) {
  const auto ring = MixtureSpec::ring(8, 1.0, 0.05);
  const Tensor x({10, 2}, std::vector<double>(20, 0.0));
  std::vector<double> v;
  for (int i = 0; i < 10; ++i) v.insert(v.end(), {1.0, 0.0});
  const auto cov = metrics::mode_coverage(Tensor({10, 2}, v), ring, 3.0, 0.03);
  EXPECT_EQ(cov.modes_covered, 1u);
  EXPECT_EQ(cov.histogram[0], 10u);
  // The origin is 1.0 from every mode: outside 3 sigma.
  EXPECT_EQ(metrics::mode_coverage(x, ring, 3.0, 0.03).modes_covered, 0u);
}

TEST(Coverage, ExactMixtureSamplesCoverAllModes) {
  const auto ring = MixtureSpec::ring(8, 1.0, 0.05);
  Rng rng(11);
  const auto x = sample_mixture(ring, 4000, rng);
  const auto cov = metrics::mode_coverage(x, ring, 3.0, 0.03);
  EXPECT_EQ(cov.modes_covered, 8u);
}

TEST(Coverage, MonotoneInRadiusAndMinFrac) {
  const auto ring = MixtureSpec::ring(8, 1.0, 0.05);
  Rng rng(12);
  // Blur the samples so coverage actually depends on the thresholds.
  const auto clean = sample_mixture(ring, 400, rng);
  std::vector<double> v(clean.values().begin(), clean.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.1 * rng.normal() * (i % 3 == 0);
  const Tensor x({400, 2}, v);
  std::size_t prev = 0;
  for (double r : {0.5, 1.0, 2.0, 3.0, 5.0, 8.0}) {
    const auto c = metrics::mode_coverage(x, ring, r, 0.03).modes_covered;
    EXPECT_GE(c, prev);
    prev = c;
  }
  prev = 9;
  for (double f : {0.01, 0.05, 0.1, 0.12, 0.2}) {
    const auto c = metrics::mode_coverage(x, ring, 3.0, f).modes_covered;
    EXPECT_LE(c, prev);
    prev = c;
  }
  EXPECT_THROW(metrics::mode_coverage(x, ring, 0.0, 0.03), ConfigError);
  EXPECT_THROW(metrics::mode_coverage(x, ring, 3.0, 1.0), ConfigError);
}

TEST(Quality, StandardGaussianAtMean) {
  const auto g = MixtureSpec::gaussian({0.0, 0.0}, 1.0);
  const auto q = metrics::quality_proxy(Tensor({2, 2}, {0.0, 0.0, 0.0, 0.0}), g);
  EXPECT_NEAR(q.mean_nll, std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(q.mean_nll, 1.8379, 1e-4);
  EXPECT_EQ(q.mean_dist_to_nearest_mode, 0.0);
}

TEST(Quality, DistanceToNearestMode) {
  const auto ring = MixtureSpec::ring(4, 1.0, 0.1);
  const auto q = metrics::quality_proxy(Tensor({2, 2}, {2.0, 0.0, 0.0, 1.0}), ring);
  EXPECT_NEAR(q.mean_dist_to_nearest_mode, 0.5, 1e-15);
}

TEST(Report, JsonKeyOrderAndCsv) {
  const auto ring = MixtureSpec::ring(8, 1.0, 0.05);
  Rng rng(3);
  const auto x = sample_mixture(ring, 288, rng);
  metrics::EvalSettings s;
  auto report = metrics::evaluate_samples(x, ring, s, 0);
  report.label = "unit";
  const auto j = nlohmann::ordered_json::parse(report.to_json());
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"label", "diversity", "modes_covered",
                                            "coverage_histogram", "quality_proxy_nll",
                                            "mean_dist_to_nearest_mode", "samples", "seed",
                                            "config_hash", "checkpoint_hash"}));
  EXPECT_EQ(j["samples"], 288);
  EXPECT_EQ(report.to_json(), report.to_json());
  const auto header = metrics::MetricsReport::csv_header();
  const auto row = report.csv_row();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(Report, ScatterCsv) {
  const auto ring = MixtureSpec::ring(8, 1.0, 0.05);
  const auto dir = testing::temp_dir("scatter");
  metrics::write_scatter_csv(dir / "s.csv", Tensor({2, 2}, {1.0, 0.0, 0.0, 0.0}), ring, 3.0);
  std::ifstream is(dir / "s.csv");
  std::string header, a, b;
  std::getline(is, header);
  std::getline(is, a);
  std::getline(is, b);
  EXPECT_EQ(header, "x,y,mode");
  EXPECT_EQ(a.substr(a.rfind(',') + 1), "0");
  EXPECT_EQ(b.substr(b.rfind(',') + 1), "-1");
}

}  // namespace
}  // namespace dpdmd
