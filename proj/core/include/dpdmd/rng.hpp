// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dpdmd/autodiff.hpp"

namespace dpdmd {

/// Counter-based generator: output i of a stream is a pure function of
/// (key, i), so draws are reproducible across platforms and independent
/// streams never interact. Normals use Box-Muller instead of
/// std::normal_distribution, whose output is library-specific.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent child stream keyed by a purpose label ("data", "noise", ...).
  Rng split(std::string_view purpose) const;
  Rng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (lo, hi).
  double uniform_open(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  ad::Tensor normal_tensor(std::size_t rows, std::size_t cols);
  std::vector<double> uniform_vector(std::size_t n, double lo, double hi);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, bool);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer; also used for hashing stream labels.
std::uint64_t mix64(std::uint64_t x);

}  // namespace dpdmd
