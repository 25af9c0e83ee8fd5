// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dpdmd/autodiff.hpp"
#include "dpdmd/network.hpp"

namespace dpdmd::testing {

inline ad::Tensor with_value(const ad::Tensor& t, std::size_t i, double v) {
  std::vector<double> vals(t.values().begin(), t.values().end());
  vals[i] = v;
  return ad::Tensor(t.shape(), std::move(vals));
}

/// Central differences of a scalar function of several tensors, w.r.t.
/// input `which`.
inline std::vector<double> numeric_grad(
    const std::function<double(const std::vector<ad::Tensor>&)>& f,
    std::vector<ad::Tensor> inputs, std::size_t which, double h = 1e-6) {
  std::vector<double> g(inputs[which].size());
  const ad::Tensor base = inputs[which];
  for (std::size_t i = 0; i < g.size(); ++i) {
    inputs[which] = with_value(base, i, base[i] + h);
    const double up = f(inputs);
    inputs[which] = with_value(base, i, base[i] - h);
    const double down = f(inputs);
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(1, |a_i|, |b_i|) style relative error.
inline double max_rel_error(std::span<const double> a, std::span<const double> b,
                            double floor = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& gen, double lo = -1.0,
                                double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(ad::shape_size(shape));
  for (auto& x : v) x = u(gen);
  return ad::Tensor(std::move(shape), std::move(v));
}

/// Network whose head bias is `bias` and everything else zero: it outputs
/// `bias` for every input.
inline VelocityNet constant_net(NetConfig cfg, std::vector<double> bias, Role role = Role::kTeacher) {
  std::vector<ad::Tensor> params;
  for (const auto& s : cfg.parameter_shapes()) params.push_back(ad::Tensor::zeros(s));
  params.back() = ad::Tensor({cfg.input_dim}, std::move(bias));
  return VelocityNet(cfg, role, std::move(params));
}

inline NetConfig small_config(std::uint32_t dim = 2, std::uint32_t width = 8,
                              std::uint32_t depth = 2,
                              PredictionMode mode = PredictionMode::kVelocity) {
  NetConfig c;
  c.input_dim = dim;
  c.hidden_width = width;
  c.depth = depth;
  c.time_embed_dim = 4;
  c.prediction_mode = mode;
  return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("dpdmd_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace dpdmd::testing
