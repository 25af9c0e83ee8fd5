// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpdmd/autodiff.hpp"

namespace dpdmd {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled (AdamW) decay; 0 reduces to plain Adam.
  double weight_decay = 0.0;

  void validate() const;
};

/// Adam(W) optimizer state for a fixed list of parameter tensors.
class Adam {
 public:
  Adam(AdamConfig config, std::span<const ad::Tensor> params);

  /// Applies one bias-corrected update in place. Throws NumericalError when a
  /// gradient contains NaN or infinity (parameters are left untouched).
  void step(std::vector<ad::Tensor>& params, std::span<const ad::Tensor> grads);

  /// Changes the learning rate for later steps (schedules).
  void set_lr(double lr);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  std::span<const std::vector<double>> first_moments() const { return m_; }
  std::span<const std::vector<double>> second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<ad::Shape> shapes_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t steps_ = 0;
};

/// Cosine decay from `lr` at step 0 to `min_frac * lr` at `total` (held
/// there afterwards).
double cosine_lr(double lr, std::uint64_t step, std::uint64_t total, double min_frac);

}  // namespace dpdmd
