// Copyright 2026 The dpdmd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "dpdmd/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dpdmd/error.hpp"
#include "dpdmd/rng.hpp"

namespace dpdmd::metrics {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

FeatureMap FeatureMap::raw() { return FeatureMap(); }

FeatureMap FeatureMap::random_projection(std::size_t input_dim, std::size_t output_dim,
                                         std::uint64_t seed) {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("projection dims must be positive");
  Rng rng = Rng(seed).split("feature-projection");
  FeatureMap f;
  f.kind_ = Kind::kRandomProjection;
  std::vector<double> w(input_dim * output_dim);
  const double s = 1.0 / std::sqrt(static_cast<double>(output_dim));
  for (auto& x : w) x = s * rng.normal();
  f.projection_ = ad::Tensor::matrix(input_dim, output_dim, std::move(w));
  return f;
}

ad::Tensor FeatureMap::apply(const ad::Tensor& samples) const {
  if (kind_ == Kind::kRaw) return ad::detach(samples);
  return ad::matmul(ad::detach(samples), projection_);
}

double pairwise_diversity(const ad::Tensor& samples, const FeatureMap& features) {
  const ad::Tensor f = features.apply(samples);
  if (f.rank() != 2 || f.rows() < 2) {
    throw ShapeError("pairwise_diversity needs [L>=2, d] samples, got " +
                     ad::shape_string(f.shape()));
  }
  const std::size_t L = f.rows();
  const std::size_t d = f.cols();
  std::vector<double> unit(f.values().begin(), f.values().end());
  for (std::size_t i = 0; i < L; ++i) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) n2 += unit[i * d + j] * unit[i * d + j];
    if (!(n2 > 0.0)) {
      throw DomainError("pairwise_diversity: feature vector " + std::to_string(i) +
                        " has zero norm");
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (std::size_t j = 0; j < d; ++j) unit[i * d + j] *= inv;
  }
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t k = i + 1; k < L; ++k) {
      double c = 0.0;
      for (std::size_t j = 0; j < d; ++j) c += unit[i * d + j] * unit[k * d + j];
      cos_sum += c;
    }
  }
  const double pairs = static_cast<double>(L * (L - 1) / 2);
  return 1.0 - cos_sum / pairs;
}

double grouped_diversity(const ad::Tensor& samples, std::size_t group_size,
                         const FeatureMap& features) {
  if (group_size < 2) throw ConfigError("diversity group size must be at least 2");
  const std::size_t groups = samples.rows() / group_size;
  if (groups == 0) throw ShapeError("fewer samples than one diversity group");
  const std::size_t d = samples.cols();
  double acc = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto v = samples.values();
    std::vector<double> rows(v.begin() + static_cast<std::ptrdiff_t>(g * group_size * d),
                             v.begin() + static_cast<std::ptrdiff_t>((g + 1) * group_size * d));
    acc += pairwise_diversity(ad::Tensor::matrix(group_size, d, std::move(rows)), features);
  }
  return acc / static_cast<double>(groups);
}

Coverage mode_coverage(const ad::Tensor& samples, const MixtureSpec& spec, double radius_sigmas,
                       double min_frac) {
  if (!(radius_sigmas > 0.0)) throw ConfigError("coverage radius_sigmas must be positive");
  if (!(min_frac > 0.0 && min_frac < 1.0)) throw ConfigError("coverage min_frac must lie in (0,1)");
  Coverage cov;
  cov.histogram.assign(spec.size(), 0);
  const std::size_t d = samples.cols();
  const auto v = samples.values();
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const auto [mode, dist] = spec.nearest_mode(v.subspan(i * d, d));
    if (dist <= radius_sigmas * spec[mode].stddev) ++cov.histogram[mode];
  }
  const double need = min_frac * static_cast<double>(samples.rows());
  for (std::size_t c : cov.histogram) {
    if (static_cast<double>(c) >= need) ++cov.modes_covered;
  }
  return cov;
}

Quality quality_proxy(const ad::Tensor& samples, const MixtureSpec& spec) {
  Quality q;
  const std::size_t d = samples.cols();
  const auto v = samples.values();
  const std::size_t n = samples.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = v.subspan(i * d, d);
    q.mean_nll -= spec.log_density(x);
    q.mean_dist_to_nearest_mode += spec.nearest_mode(x).second;
  }
  q.mean_nll /= static_cast<double>(n);
  q.mean_dist_to_nearest_mode /= static_cast<double>(n);
  return q;
}

void EvalSettings::validate() const {
  if (groups == 0) throw ConfigError("eval.groups must be positive");
  if (group_size < 2) throw ConfigError("eval.group_size must be at least 2");
  if (!(radius_sigmas > 0.0)) throw ConfigError("eval.radius_sigmas must be positive");
  if (!(min_frac > 0.0 && min_frac < 1.0)) throw ConfigError("eval.min_frac must lie in (0,1)");
  if (projection_dim == 0) throw ConfigError("eval.projection_dim must be positive");
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["diversity"] = diversity;
  j["modes_covered"] = modes_covered;
  j["coverage_histogram"] = coverage_histogram;
  j["quality_proxy_nll"] = quality_proxy;
  j["mean_dist_to_nearest_mode"] = mean_dist_to_nearest_mode;
  j["samples"] = samples;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["checkpoint_hash"] = checkpoint_hash;
  return j.dump(2) + "\n";
}

std::string MetricsReport::csv_header() {
  return "label,diversity,modes_covered,quality_proxy_nll,mean_dist_to_nearest_mode,samples,"
         "seed,config_hash,checkpoint_hash";
}

std::string MetricsReport::csv_row() const {
  std::ostringstream os;
  os << label << ',' << fmt(diversity) << ',' << modes_covered << ',' << fmt(quality_proxy)
     << ',' << fmt(mean_dist_to_nearest_mode) << ',' << samples << ',' << seed << ','
     << config_hash << ',' << checkpoint_hash;
  return os.str();
}

MetricsReport evaluate_samples(const ad::Tensor& samples, const MixtureSpec& spec,
                               const EvalSettings& settings, std::uint64_t feature_seed) {
  settings.validate();
  const FeatureMap features =
      settings.feature_kind == FeatureMap::Kind::kRaw
          ? FeatureMap::raw()
          : FeatureMap::random_projection(samples.cols(), settings.projection_dim, feature_seed);
  MetricsReport r;
  r.diversity = grouped_diversity(samples, settings.group_size, features);
  const Coverage cov = mode_coverage(samples, spec, settings.radius_sigmas, settings.min_frac);
  r.modes_covered = cov.modes_covered;
  r.coverage_histogram = cov.histogram;
  const Quality q = quality_proxy(samples, spec);
  r.quality_proxy = q.mean_nll;
  r.mean_dist_to_nearest_mode = q.mean_dist_to_nearest_mode;
  r.samples = samples.rows();
  r.seed = feature_seed;
  return r;
}

void write_scatter_csv(const std::filesystem::path& path, const ad::Tensor& samples,
                       const MixtureSpec& spec, double radius_sigmas) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write scatter data " + path.string());
  const std::size_t d = samples.cols();
  if (d == 2) {
    os << "x,y";
  } else {
    for (std::size_t j = 0; j < d; ++j) os << (j ? "," : "") << 'x' << j;
  }
  os << ",mode\n";
  const auto v = samples.values();
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    const auto x = v.subspan(i * d, d);
    for (std::size_t j = 0; j < d; ++j) os << (j ? "," : "") << fmt(x[j]);
    const auto [mode, dist] = spec.nearest_mode(x);
    const long assigned = dist <= radius_sigmas * spec[mode].stddev ? static_cast<long>(mode) : -1;
    os << ',' << assigned << '\n';
  }
}

}  // namespace dpdmd::metrics
