#pragma once

#include "ksm/adjoint.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ksm {

struct NoiseConfig {
  double D = 0.02;
  /// Spacing of the adjoint samples the noise is attached to.
  double dt = 0.01;
  int ensemble = 500;
  std::uint64_t seed = 0;
  /// 0 = hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct EnsembleResult {
  std::vector<double> samples;
  double sample_mean = 0.0;
  /// Unbiased.
  double sample_var = 0.0;
  double predicted_var = 0.0;
  double rms = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent generator for realization `index`.
std::mt19937_64 realization_rng(std::uint64_t seed, std::uint64_t index);

/// D * sum_n |psi(t_n)|^2 dt.
double predicted_variance(const AdjointTrajectory& adj, const NoiseConfig& noise);

/// sum_n <psi(t_n), eta_n> dt with eta_n ~ N(0, D/dt) componentwise.
double sample_melnikov(const AdjointTrajectory& adj, const NoiseConfig& noise, std::mt19937_64& rng);

/// Realization i uses realization_rng(seed, i); results do not depend on the thread count.
EnsembleResult run_ensemble(const AdjointTrajectory& adj, const NoiseConfig& noise);

double gaussian_density(double m, double variance);
double gaussian_cdf(double m, double variance);

/// Least-squares slope of log y against log x. Throws DegenerateGrid.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingPoint {
  double D = 0.0;
  double rms = 0.0;
  double predicted_rms = 0.0;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double slope = 0.0;
};

/// One ensemble per D; ensemble k is seeded with splitmix64(seed + k).
ScalingFit rms_scaling_fit(const AdjointTrajectory& adj, const std::vector<double>& d_grid,
                           const NoiseConfig& base);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  int count = 0;
  double pdf_at_center = 0.0;
};

/// `bins` equal bins over +-width_sigmas predicted standard deviations.
std::vector<HistogramBin> ensemble_histogram(const EnsembleResult& r, int bins = 30, double width_sigmas = 4.0);

/// Kolmogorov-Smirnov statistic sup |F_n - F| against N(0, variance).
double ks_statistic(std::vector<double> samples, double variance);

/// Asymptotic Kolmogorov tail probability P(K > x).
double kolmogorov_tail(double x);

/// Two-sided chi-square interval for a sample variance with `dof` degrees of freedom
/// (Wilson-Hilferty), returned as multipliers of the true variance.
std::pair<double, double> variance_interval(int dof, double z);

double excess_kurtosis(const std::vector<double>& samples);

}  // namespace ksm
