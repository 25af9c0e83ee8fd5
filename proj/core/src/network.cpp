// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpdmd/error.hpp"
#include "dpdmd/rng.hpp"

namespace dpdmd {

namespace {

constexpr double kMaxFrequency = 1000.0;

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError("network time must lie in [0,1], got " + std::to_string(t));
  }
}

}  // namespace

const char* to_string(PredictionMode mode) {
  return mode == PredictionMode::kVelocity ? "velocity" : "epsilon";
}

const char* to_string(Activation act) { return act == Activation::kSilu ? "silu" : "tanh"; }

const char* to_string(Role role) {
  switch (role) {
    case Role::kTeacher: return "teacher";
    case Role::kFake: return "fake";
    case Role::kStudent: return "student";
  }
  return "?";
}

void NetConfig::validate() const {
  if (input_dim == 0) throw ConfigError("net.input_dim must be positive");
  if (hidden_width == 0) throw ConfigError("net.hidden_width must be positive");
  if (time_embed_dim == 0 || time_embed_dim % 2 != 0) {
    throw ConfigError("net.time_embed_dim must be even and positive, got " +
                      std::to_string(time_embed_dim));
  }
  if (activation != Activation::kSilu && activation != Activation::kTanh) {
    throw ConfigError("net.activation tag is invalid");
  }
  if (prediction_mode != PredictionMode::kVelocity &&
      prediction_mode != PredictionMode::kEpsilon) {
    throw ConfigError("net.prediction_mode tag is invalid");
  }
}

std::vector<ad::Shape> NetConfig::parameter_shapes() const {
  std::vector<ad::Shape> shapes;
  std::size_t fan_in = input_dim + time_embed_dim;
  for (std::uint32_t l = 0; l < depth; ++l) {
    shapes.push_back({fan_in, hidden_width});
    shapes.push_back({hidden_width});
    fan_in = hidden_width;
  }
  shapes.push_back({fan_in, input_dim});
  shapes.push_back({input_dim});
  return shapes;
}

std::size_t NetConfig::parameter_count() const {
  std::size_t n = 0;
  for (const auto& s : parameter_shapes()) n += ad::shape_size(s);
  return n;
}

ad::Tensor time_embedding(std::span<const double> t, std::uint32_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> freq(half);
  for (std::size_t i = 0; i < half; ++i) {
    freq[i] = std::pow(kMaxFrequency, 1.0 - static_cast<double>(i) / static_cast<double>(half));
  }
  std::vector<double> out(t.size() * dim);
  for (std::size_t r = 0; r < t.size(); ++r) {
    double* row = out.data() + r * dim;
    if (r > 0 && t[r] == t[r - 1]) {
      std::copy_n(row - dim, dim, row);
      continue;
    }
    for (std::size_t i = 0; i < half; ++i) {
      row[i] = std::sin(freq[i] * t[r]);
      row[half + i] = std::cos(freq[i] * t[r]);
    }
  }
  return ad::Tensor::matrix(t.size(), dim, std::move(out));
}

VelocityNet::VelocityNet(NetConfig config, Role role, std::uint64_t init_seed)
    : config_(config), role_(role) {
  config_.validate();
  Rng rng = Rng(init_seed).split("init");
  const auto shapes = config_.parameter_shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const bool is_weight = i % 2 == 0;
    const bool is_head = i + 2 >= shapes.size();
    if (!is_weight || is_head) {
      params_.push_back(ad::Tensor::zeros(shapes[i]));
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(shapes[i][0]));
    std::vector<double> w(ad::shape_size(shapes[i]));
    for (auto& x : w) x = -bound + 2.0 * bound * rng.uniform();
    params_.emplace_back(shapes[i], std::move(w));
  }
}

VelocityNet::VelocityNet(NetConfig config, Role role, std::vector<ad::Tensor> parameters)
    : config_(config), role_(role), params_(std::move(parameters)) {
  config_.validate();
  const auto shapes = config_.parameter_shapes();
  if (shapes.size() != params_.size()) {
    throw ShapeError("network expects " + std::to_string(shapes.size()) +
                     " parameter tensors, got " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (params_[i].shape() != shapes[i]) {
      throw ShapeError("network parameter " + std::to_string(i) + " expects shape " +
                       ad::shape_string(shapes[i]) + ", got " +
                       ad::shape_string(params_[i].shape()));
    }
  }
}

std::vector<ad::Tensor> VelocityNet::bind(ad::Tape& tape) const { return tape.leaves(params_); }

ad::Tensor VelocityNet::forward(const ad::Tensor& z, double t) const {
  return forward(params_, z, t);
}

ad::Tensor VelocityNet::forward(const ad::Tensor& z, std::span<const double> t) const {
  return forward(params_, z, t);
}

ad::Tensor VelocityNet::forward(std::span<const ad::Tensor> params, const ad::Tensor& z,
                                double t) const {
  check_time(t);
  std::vector<double> times(z.rank() == 2 ? z.rows() : 1, t);
  return forward(params, z, times);
}

ad::Tensor VelocityNet::forward(std::span<const ad::Tensor> params, const ad::Tensor& z,
                                std::span<const double> t) const {
  if (z.rank() != 2 || z.shape()[1] != config_.input_dim) {
    throw ShapeError("network input must be [batch," + std::to_string(config_.input_dim) +
                     "], got " + ad::shape_string(z.shape()));
  }
  if (t.size() != z.rows()) {
    throw ShapeError("network got " + std::to_string(t.size()) + " times for batch of " +
                     std::to_string(z.rows()));
  }
  if (params.size() != 2 * (config_.depth + 1)) {
    throw ShapeError("network forward got " + std::to_string(params.size()) +
                     " parameter tensors");
  }
  for (double ti : t) check_time(ti);

  ad::Tensor h = ad::concat(z, time_embedding(t, config_.time_embed_dim));
  for (std::uint32_t l = 0; l < config_.depth; ++l) {
    h = ad::add(ad::matmul(h, params[2 * l]), params[2 * l + 1]);
    h = config_.activation == Activation::kSilu ? ad::silu(h) : ad::tanh(h);
  }
  return ad::add(ad::matmul(h, params[2 * config_.depth]), params[2 * config_.depth + 1]);
}

}  // namespace dpdmd
