#include "ksm/melnikov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ksm {

double simpson(const Eigen::Ref<const Eigen::VectorXd>& v, double h) {
  const Eigen::Index n = v.size() - 1;  // intervals
  if (n < 1) return 0.0;
  if (n == 1) return 0.5 * h * (v[0] + v[1]);
  if (n == 2) return h / 3.0 * (v[0] + 4.0 * v[1] + v[2]);
  const Eigen::Index even = n % 2 == 0 ? n : n - 3;
  double total = 0.0;
  if (even > 0) {
    double s = v[0] + v[even];
    for (Eigen::Index i = 1; i < even; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * v[i];
    total = h / 3.0 * s;
  }
  if (even != n) total += 3.0 * h / 8.0 * (v[even] + 3.0 * v[even + 1] + 3.0 * v[even + 2] + v[n]);
  return total;
}

namespace {

struct Range {
  Eigen::Index first = 0;
  Eigen::Index count = 0;
};

Range window_range(const SampledPath& p, const TimeWindow& w) {
  const double* b = p.times.data();
  const double* e = b + p.size();
  const double slack = 1e-9 * p.spacing();
  const Eigen::Index first = std::lower_bound(b, e, w.lo - slack) - b;
  const Eigen::Index last = std::upper_bound(b, e, w.hi + slack) - b;
  return {first, std::max<Eigen::Index>(0, last - first)};
}

}  // namespace

double melnikov_general(const AdjointTrajectory& adj, const ForcingField& forcing, double t0,
                        const TimeWindow& window) {
  const SampledPath& psi = adj.path;
  const Range r = window_range(psi, window);
  if (r.count < 2) return 0.0;
  Eigen::VectorXd h(r.count);
  for (Eigen::Index i = 0; i < r.count; ++i) {
    const Eigen::Index j = r.first + i;
    h[i] = psi.states.col(j).dot(forcing(psi.times[j] + t0));
  }
  return simpson(h, psi.spacing());
}

ForcingProfile sine_profile(const Domain& dom, int mode) {
  if (mode < 1 || mode > dom.modes()) throw std::invalid_argument("forcing mode outside 1..N");
  ForcingProfile p;
  p.modal_g = Eigen::VectorXd::Zero(dom.real_dim());
  p.modal_g[im_slot(mode)] = -0.5;
  p.description = "sin(" + std::to_string(mode) + " q x)";
  return p;
}

double MelnikovResult::evaluate(double t0) const {
  return A * std::cos(omega * t0) + B * std::sin(omega * t0);
}

std::vector<MelnikovZero> harmonic_zeros(double A, double B, double omega, double zero_tol) {
  std::vector<MelnikovZero> zeros;
  if (!(omega > 0.0) || std::hypot(A, B) <= zero_tol) return zeros;
  // A cos + B sin = R cos(w t0 - phi), zero where w t0 = phi + pi/2 + k pi
  const double period = 2.0 * std::numbers::pi / omega;
  const double phi = std::atan2(B, A);
  for (int k = -2; k <= 3; ++k) {
    double t = (phi + 0.5 * std::numbers::pi + k * std::numbers::pi) / omega;
    if (t < 0.0 || t >= period) continue;
    const double slope = -A * omega * std::sin(omega * t) + B * omega * std::cos(omega * t);
    zeros.push_back({t, slope});
  }
  std::sort(zeros.begin(), zeros.end(), [](const MelnikovZero& a, const MelnikovZero& b) { return a.t0 < b.t0; });
  return zeros;
}

MelnikovResult melnikov_periodic(const AdjointTrajectory& adj, const Eigen::VectorXd& g, double omega,
                                 const MelnikovOptions& opts) {
  if (!(omega >= 0.0)) throw std::invalid_argument("forcing frequency must be >= 0");
  const SampledPath& psi = adj.path;
  if (g.size() != psi.dim()) throw std::invalid_argument("forcing profile dimension mismatch");
  const Range r = window_range(psi, opts.window);

  MelnikovResult res;
  res.omega = omega;
  Eigen::VectorXd h;
  Eigen::ArrayXd wt;
  if (r.count >= 2) {
    h = psi.states.middleCols(r.first, r.count).transpose() * g;
    wt = omega * psi.times.segment(r.first, r.count).array();
    res.A = simpson((h.array() * wt.cos()).matrix(), psi.spacing());
    res.B = omega == 0.0 ? 0.0 : -simpson((h.array() * wt.sin()).matrix(), psi.spacing());
  }
  res.amplitude = std::hypot(res.A, res.B);
  const bool vanishes = res.amplitude <= opts.zero_tol;
  if (vanishes) res.A = res.B = res.amplitude = 0.0;

  // phase samples by direct quadrature, independent of the A, B decomposition
  const double period = omega > 0.0 ? 2.0 * std::numbers::pi / omega : 1.0;
  res.samples.reserve(opts.phase_samples);
  for (int i = 0; i < opts.phase_samples; ++i) {
    const double t0 = period * i / opts.phase_samples;
    double m = 0.0;
    if (r.count >= 2 && !vanishes)
      m = simpson((h.array() * (wt + omega * t0).cos()).matrix(), psi.spacing());
    res.samples.push_back({t0, m});
  }
  res.zeros = harmonic_zeros(res.A, res.B, omega, opts.zero_tol);
  return res;
}

double harmonic_residual(const MelnikovResult& r) {
  double worst = 0.0;
  for (const auto& s : r.samples) worst = std::max(worst, std::abs(s.value - r.evaluate(s.t0)));
  return worst;
}

std::vector<MelnikovResult> frequency_sweep(const AdjointTrajectory& adj, const Eigen::VectorXd& g,
                                            const std::vector<double>& omegas,
                                            const MelnikovOptions& opts, bool keep_samples) {
  if (omegas.empty()) throw std::invalid_argument("frequency grid is empty");
  MelnikovOptions o = opts;
  if (!keep_samples) o.phase_samples = 0;
  std::vector<MelnikovResult> out;
  out.reserve(omegas.size());
  for (double w : omegas) out.push_back(melnikov_periodic(adj, g, w, o));
  return out;
}

std::vector<double> frequency_grid(double omega_min, double omega_max, double step) {
  if (!(step > 0.0) || omega_max < omega_min || omega_min < 0.0)
    throw std::invalid_argument("invalid frequency grid");
  const long n = std::lround(std::floor((omega_max - omega_min) / step + 1e-9));
  std::vector<double> grid;
  for (long i = 0; i <= n; ++i) grid.push_back(omega_min + step * static_cast<double>(i));
  return grid;
}

bool transversality_check(const MelnikovResult& r, double tol) {
  return r.omega > 0.0 && r.amplitude > tol;
}

}  // namespace ksm
