// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpdmd/autodiff.hpp"

namespace dpdmd {

enum class PredictionMode : std::uint8_t { kVelocity = 0, kEpsilon = 1 };
enum class Activation : std::uint32_t { kSilu = 0, kTanh = 1 };
enum class Role : std::uint32_t { kTeacher = 0, kFake = 1, kStudent = 2 };

const char* to_string(PredictionMode mode);
const char* to_string(Activation act);
const char* to_string(Role role);

struct NetConfig {
  std::uint32_t input_dim = 2;
  std::uint32_t hidden_width = 128;
  /// Number of hidden layers.
  std::uint32_t depth = 3;
  /// Must be even: one (sin, cos) pair per frequency.
  std::uint32_t time_embed_dim = 32;
  Activation activation = Activation::kSilu;
  PredictionMode prediction_mode = PredictionMode::kVelocity;

  void validate() const;
  /// Shapes of the weight/bias tensors in forward order.
  std::vector<ad::Shape> parameter_shapes() const;
  std::size_t parameter_count() const;

  bool operator==(const NetConfig&) const = default;
};

/// Sinusoidal embedding of per-row times, [t.size(), time_embed_dim].
ad::Tensor time_embedding(std::span<const double> t, std::uint32_t dim);

/// Time-conditioned MLP: concat(z, embed(t)) -> hidden layers -> linear head.
/// Depending on the prediction mode the head is read as a velocity (eps - x
/// direction) or as a noise estimate.
class VelocityNet {
 public:
  /// Hidden layers get U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights drawn from
  /// `init_seed`; biases and the whole output layer start at zero.
  VelocityNet(NetConfig config, Role role, std::uint64_t init_seed);
  VelocityNet(NetConfig config, Role role, std::vector<ad::Tensor> parameters);

  const NetConfig& config() const { return config_; }
  Role role() const { return role_; }
  void set_role(Role role) { role_ = role; }

  std::span<const ad::Tensor> parameters() const { return params_; }
  std::vector<ad::Tensor>& mutable_parameters() { return params_; }

  /// Registers the parameters as leaves of `tape`.
  std::vector<ad::Tensor> bind(ad::Tape& tape) const;

  /// Uses the stored parameters as constants; z may still be tracked.
  ad::Tensor forward(const ad::Tensor& z, double t) const;
  ad::Tensor forward(const ad::Tensor& z, std::span<const double> t) const;
  /// Uses caller-provided (usually bound) parameters.
  ad::Tensor forward(std::span<const ad::Tensor> params, const ad::Tensor& z, double t) const;
  ad::Tensor forward(std::span<const ad::Tensor> params, const ad::Tensor& z,
                     std::span<const double> t) const;

  /// Deep copy; parameters are immutable buffers so later updates to either
  /// copy never reach the other.
  VelocityNet clone() const { return *this; }

 private:
  NetConfig config_;
  Role role_;
  std::vector<ad::Tensor> params_;
};

}  // namespace dpdmd
