// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dpdmd/error.hpp"
#include "dpdmd/network.hpp"
#include "test_util.hpp"

namespace dpdmd {
namespace {

using testing::small_config;

TEST(NetConfig, ParameterShapesFollowLayerOrder) {
  NetConfig c = small_config(2, 8, 2);
  const auto shapes = c.parameter_shapes();
  ASSERT_EQ(shapes.size(), 6u);
  EXPECT_EQ(shapes[0], (ad::Shape{6, 8}));
  EXPECT_EQ(shapes[1], (ad::Shape{8}));
  EXPECT_EQ(shapes[2], (ad::Shape{8, 8}));
  EXPECT_EQ(shapes[4], (ad::Shape{8, 2}));
  EXPECT_EQ(shapes[5], (ad::Shape{2}));
  EXPECT_EQ(c.parameter_count(), 6u * 8 + 8 + 64 + 8 + 16 + 2);
}

TEST(NetConfig, RejectsInvalidFields) {
  NetConfig c = small_config();
  c.time_embed_dim = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.hidden_width = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(TimeEmbedding, SinCosLayout) {
  const std::vector<double> t{0.0, 0.25};
  const auto e = time_embedding(t, 4);
  ASSERT_EQ(e.shape(), (ad::Shape{2, 4}));
  // freq = {1000, sqrt(1000)}
  EXPECT_EQ(e.at(0, 0), 0.0);
  EXPECT_EQ(e.at(0, 2), 1.0);
  EXPECT_NEAR(e.at(1, 0), std::sin(250.0), 1e-12);
  EXPECT_NEAR(e.at(1, 1), std::sin(0.25 * std::sqrt(1000.0)), 1e-12);
  EXPECT_NEAR(e.at(1, 3), std::cos(0.25 * std::sqrt(1000.0)), 1e-12);
}

TEST(VelocityNet, FreshNetworkPredictsZero) {
  const VelocityNet net(small_config(), Role::kTeacher, 5);
  const auto v = net.forward(ad::Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}), 0.5);
  for (double x : v.values()) EXPECT_EQ(x, 0.0);
}

TEST(VelocityNet, SeededInitIsReproducibleAndBounded) {
  const VelocityNet a(small_config(), Role::kTeacher, 5);
  const VelocityNet b(small_config(), Role::kTeacher, 5);
  const VelocityNet c(small_config(), Role::kTeacher, 6);
  EXPECT_EQ(std::vector<double>(a.parameters()[0].values().begin(), a.parameters()[0].values().end()),
            std::vector<double>(b.parameters()[0].values().begin(), b.parameters()[0].values().end()));
  EXPECT_NE(a.parameters()[0][0], c.parameters()[0][0]);
  const double bound = 1.0 / std::sqrt(6.0);
  for (double w : a.parameters()[0].values()) EXPECT_LE(std::abs(w), bound);
}

TEST(VelocityNet, ConstantHeadOutputsBias) {
  const VelocityNet net = testing::constant_net(small_config(), {0.3, -0.7});
  const auto v = net.forward(ad::Tensor::matrix(2, 2, {9, 9, -9, 1}), 0.1);
  EXPECT_EQ(v.at(0, 0), 0.3);
  EXPECT_EQ(v.at(1, 1), -0.7);
}

TEST(VelocityNet, PerRowTimesMatchScalarTime) {
  std::mt19937_64 gen(4);
  VelocityNet net(small_config(), Role::kTeacher, 1);
  net.mutable_parameters().back() = ad::Tensor({2}, {0.1, 0.2});
  net.mutable_parameters()[4] = testing::random_tensor({8, 2}, gen);
  const auto z = testing::random_tensor({3, 2}, gen);
  const std::vector<double> t(3, 0.4);
  const auto a = net.forward(z, 0.4);
  const auto b = net.forward(z, t);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(VelocityNet, RejectsBadInputs) {
  const VelocityNet net(small_config(), Role::kTeacher, 1);
  EXPECT_THROW(net.forward(ad::Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}), 0.5), ShapeError);
  EXPECT_THROW(net.forward(ad::Tensor::matrix(1, 2, {1, 2}), 1.5), DomainError);
  EXPECT_THROW(net.forward(ad::Tensor::matrix(1, 2, {1, 2}), -0.1), DomainError);
  EXPECT_THROW(VelocityNet(small_config(), Role::kTeacher, std::vector<ad::Tensor>{}), ShapeError);
}

TEST(VelocityNet, CloneIsIndependent) {
  VelocityNet a(small_config(), Role::kTeacher, 1);
  VelocityNet b = a.clone();
  b.mutable_parameters()[0] = ad::Tensor::zeros(b.parameters()[0].shape());
  EXPECT_NE(a.parameters()[0][0], 0.0);
}

TEST(VelocityNet, GradientsMatchFiniteDifferences) {
  std::mt19937_64 gen(8);
  VelocityNet net(small_config(2, 6, 2), Role::kTeacher, 3);
  for (auto& p : net.mutable_parameters()) p = testing::random_tensor(p.shape(), gen, -0.5, 0.5);
  const auto z = testing::random_tensor({4, 2}, gen);
  const std::vector<double> t{0.1, 0.5, 0.7, 0.9};
  auto loss = [&](const std::vector<ad::Tensor>& params) {
    return ad::mean(ad::square(net.forward(params, z, t)));
  };
  ad::Tape tape;
  const auto bound = net.bind(tape);
  const auto grads = tape.backward(loss(bound));
  std::vector<ad::Tensor> params(net.parameters().begin(), net.parameters().end());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto num = testing::numeric_grad([&](const auto& p) { return loss(p).item(); }, params, k);
    EXPECT_LE(testing::max_rel_error(grads.wrt(bound[k]).values(), num), 1e-6) << "param " << k;
  }
}

}  // namespace
}  // namespace dpdmd
