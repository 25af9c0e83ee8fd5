// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dpdmd/autodiff.hpp"
#include "dpdmd/mixture.hpp"

namespace dpdmd::metrics {

/// Features the diversity metric compares. Raw coordinates, or a fixed
/// seeded Gaussian projection to `dim` outputs that is never trained.
class FeatureMap {
 public:
  enum class Kind { kRaw, kRandomProjection };

  static FeatureMap raw();
  static FeatureMap random_projection(std::size_t input_dim, std::size_t output_dim,
                                      std::uint64_t seed);

  Kind kind() const { return kind_; }
  /// [n, d] -> [n, m]
  ad::Tensor apply(const ad::Tensor& samples) const;

 private:
  Kind kind_ = Kind::kRaw;
  ad::Tensor projection_;
};

/// One minus the mean cosine similarity over all L(L-1)/2 unordered pairs
/// of rows. Throws DomainError naming the row when a feature vector has zero
/// norm.
double pairwise_diversity(const ad::Tensor& samples, const FeatureMap& features);

/// Mean pairwise_diversity over consecutive groups of `group_size` rows.
double grouped_diversity(const ad::Tensor& samples, std::size_t group_size,
                         const FeatureMap& features);

struct Coverage {
  std::size_t modes_covered = 0;
  /// Samples per mode that are nearest to it and within the radius.
  std::vector<std::size_t> histogram;
};

/// A mode counts as covered when at least `min_frac` of all samples are
/// nearest to it and lie within `radius_sigmas` of its stddev.
Coverage mode_coverage(const ad::Tensor& samples, const MixtureSpec& spec, double radius_sigmas,
                       double min_frac);

struct Quality {
  double mean_nll = 0.0;
  double mean_dist_to_nearest_mode = 0.0;
};

Quality quality_proxy(const ad::Tensor& samples, const MixtureSpec& spec);

struct EvalSettings {
  std::size_t groups = 32;
  std::size_t group_size = 9;
  double radius_sigmas = 3.0;
  double min_frac = 0.03;
  FeatureMap::Kind feature_kind = FeatureMap::Kind::kRaw;
  std::size_t projection_dim = 16;

  void validate() const;
};

struct MetricsReport {
  double diversity = 0.0;
  std::size_t modes_covered = 0;
  std::vector<std::size_t> coverage_histogram;
  double quality_proxy = 0.0;  // mean NLL
  double mean_dist_to_nearest_mode = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string checkpoint_hash;
  std::string label;

  /// Stable key order; no wall-clock fields.
  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// All metrics for one batch of samples (rows grouped consecutively).
MetricsReport evaluate_samples(const ad::Tensor& samples, const MixtureSpec& spec,
                               const EvalSettings& settings, std::uint64_t feature_seed);

/// Per-sample CSV for scatter plots: coordinates then the covered-mode index
/// (-1 when the sample is outside every mode's radius).
void write_scatter_csv(const std::filesystem::path& path, const ad::Tensor& samples,
                       const MixtureSpec& spec, double radius_sigmas);

}  // namespace dpdmd::metrics
