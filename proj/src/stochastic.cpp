#include "ksm/stochastic.hpp"

#include "ksm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace ksm {

void NoiseConfig::validate() const {
  if (!(D >= 0.0)) throw ValidationError("noise.D", ">= 0");
  if (!(dt > 0.0)) throw ValidationError("noise.dt", "> 0");
  if (ensemble < 1) throw ValidationError("noise.ensemble", ">= 1");
  if (threads < 0) throw ValidationError("threads", ">= 0");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 realization_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index)));
}

double predicted_variance(const AdjointTrajectory& adj, const NoiseConfig& noise) {
  return noise.D * adj.path.states.squaredNorm() * noise.dt;
}

double sample_melnikov(const AdjointTrajectory& adj, const NoiseConfig& noise, std::mt19937_64& rng) {
  if (noise.D == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, std::sqrt(noise.D / noise.dt));
  const Eigen::MatrixXd& psi = adj.path.states;
  double m = 0.0;
  for (Eigen::Index n = 0; n < psi.cols(); ++n)
    for (Eigen::Index k = 0; k < psi.rows(); ++k) m += psi(k, n) * normal(rng);
  return m * noise.dt;
}

EnsembleResult run_ensemble(const AdjointTrajectory& adj, const NoiseConfig& noise) {
  noise.validate();
  EnsembleResult r;
  r.samples.assign(noise.ensemble, 0.0);
  r.predicted_var = predicted_variance(adj, noise);

  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int workers = std::clamp(noise.threads > 0 ? noise.threads : hw, 1, noise.ensemble);
  auto work = [&](int w) {
    for (int i = w; i < noise.ensemble; i += workers) {
      auto rng = realization_rng(noise.seed, static_cast<std::uint64_t>(i));
      r.samples[i] = sample_melnikov(adj, noise, rng);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  const double n = static_cast<double>(noise.ensemble);
  double sum = 0.0, sq = 0.0;
  for (double m : r.samples) {
    sum += m;
    sq += m * m;
  }
  r.sample_mean = sum / n;
  double dev = 0.0;
  for (double m : r.samples) dev += (m - r.sample_mean) * (m - r.sample_mean);
  r.sample_var = noise.ensemble > 1 ? dev / (n - 1.0) : 0.0;
  r.rms = std::sqrt(sq / n);
  return r;
}

double gaussian_density(double m, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_density: variance must be positive");
  return std::exp(-0.5 * m * m / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double gaussian_cdf(double m, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("gaussian_cdf: variance must be positive");
  return 0.5 * std::erfc(-m / std::sqrt(2.0 * variance));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("loglog_slope needs matching data");
  if (x.size() < 2) throw DegenerateGrid("fewer than two grid points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (sxx <= 0.0) throw DegenerateGrid("all grid values are equal");
  return sxy / sxx;
}

ScalingFit rms_scaling_fit(const AdjointTrajectory& adj, const std::vector<double>& d_grid,
                           const NoiseConfig& base) {
  if (d_grid.size() < 3) throw std::invalid_argument("scaling fit needs at least three D values");
  ScalingFit fit;
  std::vector<double> ds, rms;
  for (std::size_t k = 0; k < d_grid.size(); ++k) {
    if (!(d_grid[k] > 0.0)) throw ValidationError("noise.D", "> 0 in the scaling grid");
    NoiseConfig cfg = base;
    cfg.D = d_grid[k];
    cfg.seed = splitmix64(base.seed + k);
    const EnsembleResult r = run_ensemble(adj, cfg);
    fit.points.push_back({cfg.D, r.rms, std::sqrt(r.predicted_var)});
    ds.push_back(cfg.D);
    rms.push_back(r.rms);
  }
  fit.slope = loglog_slope(ds, rms);
  return fit;
}

std::vector<HistogramBin> ensemble_histogram(const EnsembleResult& r, int bins, double width_sigmas) {
  if (bins < 1 || !(width_sigmas > 0.0)) throw std::invalid_argument("invalid histogram layout");
  if (!(r.predicted_var > 0.0)) throw std::invalid_argument("histogram needs a positive predicted variance");
  const double sigma = std::sqrt(r.predicted_var);
  const double lo = -width_sigmas * sigma, width = 2.0 * width_sigmas * sigma / bins;
  std::vector<HistogramBin> h(bins);
  for (int b = 0; b < bins; ++b) {
    h[b].left = lo + width * b;
    h[b].right = lo + width * (b + 1);
    h[b].pdf_at_center = gaussian_density(0.5 * (h[b].left + h[b].right), r.predicted_var);
  }
  for (double m : r.samples) {
    const double pos = (m - lo) / width;
    if (pos < 0.0 || pos >= bins) continue;
    ++h[static_cast<int>(pos)].count;
  }
  return h;
}

double ks_statistic(std::vector<double> samples, double variance) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = gaussian_cdf(samples[i], variance);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double kolmogorov_tail(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) return 1.0;  // series converges slowly; the tail is 1 to double precision here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

std::pair<double, double> variance_interval(int dof, double z) {
  if (dof < 1) throw std::invalid_argument("variance_interval needs dof >= 1");
  const double k = dof;
  const double c = 2.0 / (9.0 * k);
  // chi2_k / k quantiles
  const auto quantile = [&](double zz) { return std::pow(1.0 - c + zz * std::sqrt(c), 3); };
  return {quantile(-z), quantile(z)};
}

double excess_kurtosis(const std::vector<double>& s) {
  if (s.size() < 4) throw std::invalid_argument("excess_kurtosis needs at least four samples");
  const double n = static_cast<double>(s.size());
  double mean = 0.0;
  for (double x : s) mean += x;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : s) {
    const double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 3.0;
}

}  // namespace ksm
