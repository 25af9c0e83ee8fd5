// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dpdmd/error.hpp"

namespace dpdmd {

MixtureSpec::MixtureSpec(std::vector<Component> components) : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  const std::size_t d = components_.front().mean.size();
  if (d == 0) throw ConfigError("mixture components need a nonempty mean");
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != d) throw ConfigError("mixture components disagree on dimension");
    if (!(c.stddev > 0.0)) throw ConfigError("mixture stddev must be positive");
    if (!(c.weight > 0.0)) throw ConfigError("mixture weight must be positive");
    total += c.weight;
  }
  for (auto& c : components_) c.weight /= total;
}

MixtureSpec MixtureSpec::ring(std::size_t count, double radius, double stddev) {
  std::vector<Component> comps;
  for (std::size_t i = 0; i < count; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
    comps.push_back({{radius * std::cos(a), radius * std::sin(a)}, stddev, 1.0});
  }
  return MixtureSpec(std::move(comps));
}

MixtureSpec MixtureSpec::gaussian(std::vector<double> mean, double stddev) {
  return MixtureSpec({{std::move(mean), stddev, 1.0}});
}

MixtureSpec MixtureSpec::checkerboard(std::size_t cells, double stddev) {
  std::vector<Component> comps;
  const double cell = 2.0 / static_cast<double>(cells);
  for (std::size_t r = 0; r < cells; ++r) {
    for (std::size_t c = 0; c < cells; ++c) {
      if ((r + c) % 2 != 0) continue;
      comps.push_back({{-1.0 + cell * (static_cast<double>(c) + 0.5),
                        -1.0 + cell * (static_cast<double>(r) + 0.5)},
                       stddev,
                       1.0});
    }
  }
  return MixtureSpec(std::move(comps));
}

MixtureSpec MixtureSpec::preset(const std::string& name) {
  if (name == "ring8") return ring(8, 1.0, 0.05);
  if (name == "gaussian") return gaussian({0.5, -0.25}, 0.5);
  if (name == "checkerboard") return checkerboard(4, 0.08);
  throw ConfigError("unknown dataset preset '" + name + "' (expected ring8, gaussian, checkerboard)");
}

MixtureSpec MixtureSpec::parse(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos) return preset(text);
  if (text.back() != ')') throw ConfigError("malformed dataset spec '" + text + "'");
  const std::string fn = text.substr(0, open);
  std::vector<double> args;
  std::stringstream ss(text.substr(open + 1, text.size() - open - 2));
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      args.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("dataset spec '" + text + "': bad number '" + item + "'");
    }
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n) {
      throw ConfigError("dataset spec '" + text + "' expects " + std::to_string(n) + " arguments");
    }
  };
  auto count = [&](double v) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw ConfigError("dataset spec '" + text + "': counts must be positive integers");
    }
    return static_cast<std::size_t>(v);
  };
  if (fn == "ring") {
    need(3);
    return ring(count(args[0]), args[1], args[2]);
  }
  if (fn == "gaussian") {
    need(3);
    return gaussian({args[0], args[1]}, args[2]);
  }
  if (fn == "checkerboard") {
    need(2);
    return checkerboard(count(args[0]), args[1]);
  }
  throw ConfigError("unknown dataset family '" + fn + "'");
}

double MixtureSpec::log_density(std::span<const double> x) const {
  const double d = static_cast<double>(dim());
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (const auto& c : components_) {
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) sq += (x[j] - c.mean[j]) * (x[j] - c.mean[j]);
    const double var = c.stddev * c.stddev;
    const double lp = std::log(c.weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * var) -
                      0.5 * sq / var;
    terms.push_back(lp);
    best = std::max(best, lp);
  }
  double acc = 0.0;
  for (double lp : terms) acc += std::exp(lp - best);
  return best + std::log(acc);
}

std::pair<std::size_t, double> MixtureSpec::nearest_mode(std::span<const double> x) const {
  std::size_t best = 0;
  double best_sq = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < components_.size(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double diff = x[j] - components_[i].mean[j];
      sq += diff * diff;
    }
    if (sq < best_sq) {
      best_sq = sq;
      best = i;
    }
  }
  return {best, std::sqrt(best_sq)};
}

ad::Tensor sample_mixture(const MixtureSpec& spec, std::size_t n, Rng& rng) {
  if (n == 0) throw ConfigError("sample_mixture needs n >= 1");
  const std::size_t d = spec.dim();
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : spec.components()) cumulative.push_back(acc += c.weight);
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative.begin()), spec.size() - 1);
    const auto& c = spec[k];
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = c.mean[j] + c.stddev * rng.normal();
  }
  return ad::Tensor::matrix(n, d, std::move(out));
}

}  // namespace dpdmd
