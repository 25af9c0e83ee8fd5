// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpdmd/autodiff.hpp"
#include "dpdmd/rng.hpp"

namespace dpdmd {

/// Isotropic Gaussian mixture used as ground-truth data distribution.
class MixtureSpec {
 public:
  struct Component {
    std::vector<double> mean;
    double stddev = 1.0;
    double weight = 1.0;
  };

  /// Normalizes weights to sum to one; rejects empty specs, mixed
  /// dimensions, and nonpositive stddev or weight.
  explicit MixtureSpec(std::vector<Component> components);

  /// `count` equal-weight modes evenly spaced on a circle.
  static MixtureSpec ring(std::size_t count, double radius, double stddev);
  static MixtureSpec gaussian(std::vector<double> mean, double stddev);
  /// Modes on the dark cells of a `cells` x `cells` board spanning [-1, 1]^2.
  static MixtureSpec checkerboard(std::size_t cells, double stddev);
  /// Named presets: "ring8", "gaussian", "checkerboard".
  static MixtureSpec preset(const std::string& name);
  /// A preset name or one of ring(count,radius,stddev),
  /// gaussian(mean_x,mean_y,stddev), checkerboard(cells,stddev).
  static MixtureSpec parse(const std::string& text);

  std::size_t dim() const { return components_.front().mean.size(); }
  std::size_t size() const { return components_.size(); }
  const std::vector<Component>& components() const { return components_; }
  const Component& operator[](std::size_t i) const { return components_.at(i); }

  /// log p(x) for one point.
  double log_density(std::span<const double> x) const;
  /// Index of the component with the closest mean and the distance to it.
  std::pair<std::size_t, double> nearest_mode(std::span<const double> x) const;

 private:
  std::vector<Component> components_;
};

/// Seeded i.i.d. draws: component by weight, then a Gaussian around it.
ad::Tensor sample_mixture(const MixtureSpec& spec, std::size_t n, Rng& rng);

}  // namespace dpdmd
