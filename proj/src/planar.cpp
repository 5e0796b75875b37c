#include "ksm/planar.hpp"

#include <cmath>
#include <numbers>

namespace ksm {

using Eigen::Matrix2d;
using Eigen::Vector2d;

PlanarSystem duffing() {
  PlanarSystem s;
  s.f = [](const Vector2d& x) { return Vector2d(x[1], x[0] - x[0] * x[0] * x[0]); };
  s.jacobian = [](const Vector2d& x) {
    Matrix2d j;
    j << 0.0, 1.0, 1.0 - 3.0 * x[0] * x[0], 0.0;
    return j;
  };
  s.homoclinic = duffing_homoclinic;
  return s;
}

Vector2d duffing_homoclinic(double t) {
  const double sech = 1.0 / std::cosh(t);
  return {std::numbers::sqrt2 * sech, -std::numbers::sqrt2 * sech * std::tanh(t)};
}

PlanarForcing duffing_forcing(double omega) {
  return [omega](const Vector2d&, double t) { return Vector2d(0.0, std::cos(omega * t)); };
}

OrbitTrajectory analytic_orbit(const PlanarSystem& sys, double half_width, double spacing) {
  if (!sys.homoclinic) throw std::invalid_argument("system has no closed-form homoclinic orbit");
  if (!(half_width > 0.0) || !(spacing > 0.0)) throw std::invalid_argument("invalid orbit sampling");
  const Eigen::Index n = 2 * static_cast<Eigen::Index>(std::ceil(half_width / spacing)) + 1;
  const double h = 2.0 * half_width / static_cast<double>(n - 1);
  OrbitTrajectory o;
  o.path.times.resize(n);
  o.path.states.resize(2, n);
  o.path.derivs.resize(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = -half_width + h * static_cast<double>(i);
    o.path.times[i] = t;
    o.path.states.col(i) = sys.homoclinic(t);
    o.path.derivs.col(i) = sys.f(o.path.states.col(i));
  }
  o.steady = sys.saddle;
  o.return_distance = o.initial_return_distance = 0.0;
  o.converged = true;
  return o;
}

double analytic_half_width(const PlanarSystem& sys, double clip_fraction) {
  const double peak = (sys.homoclinic(0.0) - sys.saddle).norm();
  double lo = 0.0, hi = 1.0;
  while ((sys.homoclinic(hi) - sys.saddle).norm() > clip_fraction * peak) hi *= 2.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((sys.homoclinic(mid) - sys.saddle).norm() > clip_fraction * peak ? lo : hi) = mid;
  }
  return hi;
}

FlowIntegrator planar_flow(const PlanarSystem& sys, double dt, int sample_stride) {
  return [sys, dt, sample_stride](const Eigen::VectorXd& x0, double horizon) {
    return rk4_integrate(
        [&sys](double, const Eigen::VectorXd& x, Eigen::VectorXd& out) { out = sys.f(Vector2d(x)); },
        x0, 0.0, horizon, dt, sample_stride);
  };
}

SpectralData planar_saddle_spectrum(const PlanarSystem& sys) {
  return eigen_analysis(sys.jacobian(sys.saddle));
}

SeedGeometry planar_seed_geometry(const PlanarSystem& sys) {
  const SpectralData sd = planar_saddle_spectrum(sys);
  if (sd.n_unstable == 0) throw UnstableSubspaceEmpty();
  SeedGeometry geo;
  geo.steady = sys.saddle;
  geo.unstable = sd.unstable_basis();
  // orient towards the loop so that sign = +1 is the homoclinic branch
  if (sys.homoclinic && geo.unstable.col(0).dot(sys.homoclinic(0.0) - sys.saddle) < 0.0)
    geo.unstable *= -1.0;
  return geo;
}

AdjointField planar_adjoint_field(const PlanarSystem& sys, const OrbitTrajectory& orbit) {
  return [&sys, &orbit](double t, const Eigen::VectorXd& psi, Eigen::VectorXd& out) {
    out = -sys.jacobian(Vector2d(orbit.path.value(t))).transpose() * psi;
  };
}

AdjointTrajectory planar_adjoint_solve(const PlanarSystem& sys, const OrbitTrajectory& orbit) {
  const SpectralData sd = planar_saddle_spectrum(sys);
  AdjointConfig cfg;
  // the largest |eigenvalue| of J along the loop
  double bound = sd.eigenvalues.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < orbit.path.size(); i += 10)
    bound = std::max(bound, sys.jacobian(Vector2d(orbit.path.states.col(i))).eigenvalues().cwiseAbs().maxCoeff());
  cfg.spectral_bound = bound;
  return adjoint_solve(orbit, planar_adjoint_field(sys, orbit), sd, cfg);
}

double melnikov_planar(const OrbitTrajectory& orbit, const AdjointTrajectory& adj,
                       const PlanarForcing& g, double t0, const TimeWindow& window) {
  const SampledPath& psi = adj.path;
  if (psi.size() != orbit.path.size()) throw std::invalid_argument("adjoint and orbit samples differ");
  std::vector<double> h;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    const double t = psi.times[i];
    if (t < window.lo - 1e-9 * psi.spacing() || t > window.hi + 1e-9 * psi.spacing()) continue;
    h.push_back(psi.states.col(i).dot(g(Vector2d(orbit.path.states.col(i)), t + t0)));
  }
  return simpson(Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size())),
                 psi.spacing());
}

namespace {

struct Forced {
  const PlanarSystem& sys;
  const PlanarForcing& g;
  double eps;

  Vector2d rhs(const Vector2d& x, double t) const {
    Vector2d v = sys.f(x);
    if (eps != 0.0) v += eps * g(x, t);
    return v;
  }

  Vector2d step(const Vector2d& x, double t, double h) const {
    const Vector2d k1 = rhs(x, t);
    const Vector2d k2 = rhs(x + 0.5 * h * k1, t + 0.5 * h);
    const Vector2d k3 = rhs(x + 0.5 * h * k2, t + 0.5 * h);
    const Vector2d k4 = rhs(x + h * k3, t + h);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // state and variational matrix from t to t + span
  std::pair<Vector2d, Matrix2d> flow_map(const Vector2d& x0, double t, double span, double dt) const {
    const long n = std::max(1L, std::lround(std::ceil(std::abs(span) / dt)));
    const double h = span / static_cast<double>(n);
    Vector2d x = x0;
    Matrix2d m = Matrix2d::Identity();
    const auto jf = [&](const Vector2d& y, const Matrix2d& a) -> Matrix2d { return sys.jacobian(y) * a; };
    for (long i = 0; i < n; ++i) {
      const double s = t + h * static_cast<double>(i);
      const Vector2d k1 = rhs(x, s);
      const Matrix2d m1 = jf(x, m);
      const Vector2d x2 = x + 0.5 * h * k1;
      const Vector2d k2 = rhs(x2, s + 0.5 * h);
      const Matrix2d m2 = jf(x2, m + 0.5 * h * m1);
      const Vector2d x3 = x + 0.5 * h * k2;
      const Vector2d k3 = rhs(x3, s + 0.5 * h);
      const Matrix2d m3 = jf(x3, m + 0.5 * h * m2);
      const Vector2d x4 = x + h * k3;
      const Vector2d k4 = rhs(x4, s + h);
      const Matrix2d m4 = jf(x4, m + h * m3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      m += h / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    }
    return {x, m};
  }
};

struct SaddleOrbit {
  Vector2d point;
  Vector2d unstable;
  Vector2d stable;
};

// Periodic orbit of the forced system through phase `t`, with the Floquet directions there.
SaddleOrbit saddle_orbit(const Forced& fs, double t, double period, const SplitConfig& cfg) {
  Vector2d x = fs.sys.saddle;
  Matrix2d mono = Matrix2d::Identity();
  for (int it = 0; it < cfg.newton_iterations; ++it) {
    const auto [end, m] = fs.flow_map(x, t, period, cfg.dt);
    mono = m;
    const Vector2d r = end - x;
    if (r.norm() < 1e-15) break;
    x -= (m - Matrix2d::Identity()).partialPivLu().solve(r);
  }
  if (fs.eps != 0.0) mono = fs.flow_map(x, t, period, cfg.dt).second;
  Eigen::EigenSolver<Matrix2d> es(mono);
  const auto mu = es.eigenvalues();
  if (std::abs(mu[0].imag()) > 0.0 || std::abs(mu[1].imag()) > 0.0)
    throw SectionMiss("perturbed saddle is not hyperbolic");
  const int iu = std::abs(mu[0].real()) > std::abs(mu[1].real()) ? 0 : 1;
  SaddleOrbit out;
  out.point = x;
  out.unstable = es.eigenvectors().col(iu).real().normalized();
  out.stable = es.eigenvectors().col(1 - iu).real().normalized();
  return out;
}

struct Crossing {
  Vector2d x;
  double t = 0.0;
};

// Integrates from (x, t) in direction sign(h) until s(x) = <x - apex, tangent> crosses
// zero near the apex, refining the crossing by bisection on the last step.
Crossing to_section(const Forced& fs, Vector2d x, double t, double h, const Vector2d& apex,
                    const Vector2d& tangent, double reach, double max_time) {
  const auto s = [&](const Vector2d& y) { return (y - apex).dot(tangent); };
  const double want = h > 0.0 ? 1.0 : -1.0;  // sign of s after the crossing
  const long max_steps = std::lround(max_time / std::abs(h));
  for (long i = 0; i < max_steps; ++i) {
    const Vector2d next = fs.step(x, t, h);
    if (!next.allFinite()) throw NonFinite("brute_force_split", t);
    if ((next - apex).norm() < reach && want * s(x) <= 0.0 && want * s(next) > 0.0) {
      double lo = 0.0, hi = h;
      for (int k = 0; k < 200 && std::abs(hi - lo) > 1e-15; ++k) {
        const double mid = 0.5 * (lo + hi);
        (want * s(fs.step(x, t, mid)) <= 0.0 ? lo : hi) = mid;
      }
      const double frac = 0.5 * (lo + hi);
      return {fs.step(x, t, frac), t + frac};
    }
    x = next;
    t += h;
  }
  throw SectionMiss("trajectory did not reach the apex section within " + std::to_string(max_time));
}

}  // namespace

double brute_force_split(const PlanarSystem& sys, const PlanarForcing& g, double epsilon, double omega,
                         double t0, const SplitConfig& cfg) {
  if (!(epsilon >= 0.0) || epsilon > 1e-2) throw std::invalid_argument("epsilon must lie in [0, 1e-2]");
  if (!(omega > 0.0)) throw std::invalid_argument("forcing frequency must be positive");
  if (!sys.homoclinic) throw std::invalid_argument("system needs its homoclinic loop");
  const double period = 2.0 * std::numbers::pi / omega;
  const Vector2d apex = sys.homoclinic(0.0);
  const Vector2d tangent = sys.f(apex).normalized();
  Vector2d normal(-tangent[1], tangent[0]);
  if (normal.dot(apex - sys.saddle) < 0.0) normal = -normal;
  const double reach = 0.5 * (apex - sys.saddle).norm();
  const double max_time = 200.0;

  // unperturbed passage times from the seeds to the section fix when to launch
  const Forced free{sys, g, 0.0};
  const SaddleOrbit rest = saddle_orbit(free, 0.0, period, cfg);
  const auto oriented = [&](Vector2d v) { return v.dot(apex - sys.saddle) < 0.0 ? Vector2d(-v) : v; };
  const double d = cfg.seed_distance;
  const double t_u =
      to_section(free, rest.point + d * oriented(rest.unstable), 0.0, cfg.dt, apex, tangent, reach, max_time).t;
  const double t_s =
      -to_section(free, rest.point + d * oriented(rest.stable), 0.0, -cfg.dt, apex, tangent, reach, max_time).t;

  const Forced forced{sys, g, epsilon};
  const SaddleOrbit su = saddle_orbit(forced, t0 - t_u, period, cfg);
  const SaddleOrbit ss = saddle_orbit(forced, t0 + t_s, period, cfg);
  const Crossing cu = to_section(forced, su.point + d * oriented(su.unstable), t0 - t_u, cfg.dt, apex,
                                 tangent, reach, max_time);
  const Crossing cs = to_section(forced, ss.point + d * oriented(ss.stable), t0 + t_s, -cfg.dt, apex,
                                 tangent, reach, max_time);
  return normal.dot(cu.x - cs.x);
}

}  // namespace ksm
