// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dpdmd/rng.hpp"

namespace dpdmd {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(43);
  EXPECT_NE(Rng(42).next_u64(), c.next_u64());
}

TEST(Rng, SplitStreamsAreIndependentOfParentConsumption) {
  Rng a(7);
  const Rng fresh_child = a.split("noise");
  for (int i = 0; i < 10; ++i) a.next_u64();
  Rng later_child = a.split("noise");
  Rng first = fresh_child;
  EXPECT_EQ(first.next_u64(), later_child.next_u64());
  EXPECT_NE(Rng(7).split("noise").next_u64(), Rng(7).split("data").next_u64());
}

TEST(Rng, CounterBasedDrawsAreAddressable) {
  Rng a(3);
  a.next_u64();
  a.next_u64();
  const std::uint64_t third = a.next_u64();
  EXPECT_EQ(a.counter(), 3u);
  EXPECT_EQ(third, mix64(a.key() + 3 * 0x9E3779B97F4A7C15ULL));
}

TEST(Rng, UniformStaysInRange) {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double o = r.uniform_open(0.02, 0.98);
    ASSERT_GT(o, 0.02);
    ASSERT_LT(o, 0.98);
  }
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng r(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, NormalMomentsMatchStandardGaussian) {
  Rng r(11);
  const int n = 200000;
  double s = 0.0;
  double s2 = 0.0;
  double s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(s4 / n, 3.0, 0.05);
}

TEST(Rng, NormalTensorShape) {
  Rng r(2);
  const auto t = r.normal_tensor(5, 3);
  EXPECT_EQ(t.shape(), (ad::Shape{5, 3}));
}

}  // namespace
}  // namespace dpdmd
