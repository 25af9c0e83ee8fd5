// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dpdmd/error.hpp"

namespace dpdmd {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("adam: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("adam: weight_decay must be nonnegative");
}

Adam::Adam(AdamConfig config, std::span<const ad::Tensor> params) : config_(config) {
  config_.validate();
  for (const auto& p : params) {
    shapes_.push_back(p.shape());
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

double cosine_lr(double lr, std::uint64_t step, std::uint64_t total, double min_frac) {
  if (total == 0) return lr;
  const double u = static_cast<double>(std::min(step, total)) / static_cast<double>(total);
  return lr * (min_frac + (1.0 - min_frac) * 0.5 * (1.0 + std::cos(std::numbers::pi * u)));
}

void Adam::set_lr(double lr) {
  if (!(lr > 0.0)) throw ConfigError("adam: lr must be positive");
  config_.lr = lr;
}

void Adam::step(std::vector<ad::Tensor>& params, std::span<const ad::Tensor> grads) {
  if (params.size() != shapes_.size() || grads.size() != shapes_.size()) {
    throw ShapeError("adam: expected " + std::to_string(shapes_.size()) +
                     " parameter/gradient pairs, got " + std::to_string(params.size()) + "/" +
                     std::to_string(grads.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != shapes_[i] || grads[i].shape() != shapes_[i]) {
      throw ShapeError("adam: parameter " + std::to_string(i) + " expects shape " +
                       ad::shape_string(shapes_[i]) + ", got " +
                       ad::shape_string(params[i].shape()) + " / gradient " +
                       ad::shape_string(grads[i].shape()));
    }
    for (double g : grads[i].values()) {
      if (!std::isfinite(g)) {
        throw NumericalError("adam: non-finite gradient in parameter " + std::to_string(i) +
                             " at step " + std::to_string(steps_ + 1));
      }
    }
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto g = grads[i].values();
    const auto p = params[i].values();
    auto& m = m_[i];
    auto& v = v_[i];
    std::vector<double> next(p.begin(), p.end());
    for (std::size_t j = 0; j < next.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      if (config_.weight_decay > 0.0) next[j] -= config_.lr * config_.weight_decay * next[j];
      next[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
    params[i] = ad::Tensor(shapes_[i], std::move(next));
  }
}

}  // namespace dpdmd
