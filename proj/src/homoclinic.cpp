#include "ksm/homoclinic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ksm {

void ShootingConfig::validate() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("shooting horizon must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("shooting dt must be positive");
  if (sample_stride < 1) throw std::invalid_argument("shooting sample_stride must be >= 1");
  if (!(delta_min > 0.0) || !(delta_max >= delta_min) || !(delta_max < 0.1))
    throw std::invalid_argument("delta range must satisfy 0 < delta_min <= delta_max < 0.1");
  if (eta_max != 0.0 && (!(eta_min > 0.0) || !(eta_max >= eta_min)))
    throw std::invalid_argument("eta range must satisfy 0 < eta_min <= eta_max");
  if (!(return_tol > 0.0)) throw std::invalid_argument("return_tol must be positive");
  if (max_evaluations < 1) throw std::invalid_argument("max_evaluations must be >= 1");
  if (scan_angles < 1 || scan_etas < 1) throw std::invalid_argument("scan grid must be nonempty");
  if (!(clip_fraction >= 0.0 && clip_fraction < 1.0))
    throw std::invalid_argument("clip_fraction must lie in [0, 1)");
}

Eigen::VectorXd shot_initial_state(const SeedGeometry& geo, const ShotParameters& p) {
  const int m = geo.unstable_dim();
  if (m == 0) throw UnstableSubspaceEmpty();
  if (static_cast<int>(p.angles.size()) != m - 1)
    throw std::invalid_argument("shot needs " + std::to_string(m - 1) + " direction angles");
  // hyperspherical coordinates on the unit sphere of the unstable subspace
  Eigen::VectorXd dir(m);
  double sin_prod = 1.0;
  for (int i = 0; i < m - 1; ++i) {
    dir[i] = sin_prod * std::cos(p.angles[i]);
    sin_prod *= std::sin(p.angles[i]);
  }
  dir[m - 1] = sin_prod;
  if (m == 1) dir[0] = p.sign >= 0 ? 1.0 : -1.0;

  Eigen::VectorXd x = geo.steady + std::pow(10.0, p.log_delta) * (geo.unstable * dir);
  if (p.log_eta) {
    if (!geo.has_transverse()) throw std::invalid_argument("shot has eta but no transverse vector");
    x += std::pow(10.0, *p.log_eta) * geo.transverse;
  }
  return x;
}

ShotResult shoot(const FlowIntegrator& flow, const SeedGeometry& geo, const ShotParameters& p,
                 const ShootingConfig& cfg) {
  ShotResult out;
  out.path = flow(shot_initial_state(geo, p), cfg.horizon);
  const SampledPath& path = out.path;
  const Eigen::Index n = path.size();
  Eigen::VectorXd dist(n);
  for (Eigen::Index i = 0; i < n; ++i) dist[i] = (path.states.col(i) - geo.steady).norm();
  out.peak = dist.maxCoeff(&out.peak_index);

  const double t_half = path.front_time() + 0.5 * (path.back_time() - path.front_time());
  Eigen::Index first = out.peak_index + 1;
  while (first < n && path.times[first] < t_half) ++first;
  if (first >= n || out.peak <= 0.0) {
    out.return_distance = 1.0;
    out.return_index = n - 1;
    return out;
  }
  Eigen::Index rel = 0;
  const double best = dist.segment(first, n - first).minCoeff(&rel);
  out.return_index = first + rel;
  out.return_distance = best / out.peak;
  return out;
}

void recentre(OrbitTrajectory& orbit) {
  SampledPath& path = orbit.path;
  const Eigen::Index n = path.size();
  Eigen::Index imax = 0;
  double dmax = -1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = orbit.excursion(i);
    if (d > dmax) {
      dmax = d;
      imax = i;
    }
  }
  // d/dt |x - x_s|^2 / 2 = <x - x_s, x'>, which changes sign at an interior maximum
  auto slope = [&](double t) { return (path.value(t) - orbit.steady).dot(path.derivative(t)); };
  double t_peak = path.times[imax];
  if (imax > 0 && imax + 1 < n) {
    double lo = path.times[imax - 1], hi = path.times[imax + 1];
    double g_lo = slope(lo);
    if (g_lo > 0.0 && slope(hi) < 0.0) {
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = slope(mid);
        if ((g > 0.0) == (g_lo > 0.0)) {
          lo = mid;
          g_lo = g;
        } else {
          hi = mid;
        }
      }
      const double cand = 0.5 * (lo + hi);
      if ((path.value(cand) - orbit.steady).norm() >= dmax) t_peak = cand;
    }
  }
  orbit.t_center = t_peak + (orbit.time_offset_applied ? orbit.t_center : 0.0);
  path.shift_time(-t_peak);
  orbit.time_offset_applied = true;
}

OrbitTrajectory orbit_from_shot(const ShotResult& shot, const SeedGeometry& geo,
                                const ShootingConfig& cfg) {
  OrbitTrajectory orbit;
  orbit.steady = geo.steady;
  orbit.return_distance = shot.return_distance;
  orbit.converged = shot.return_distance <= cfg.return_tol;

  const SampledPath& path = shot.path;
  const double floor = cfg.clip_fraction * shot.peak;
  auto dist = [&](Eigen::Index i) { return (path.states.col(i) - geo.steady).norm(); };
  Eigen::Index first = 0, last = shot.return_index;
  while (first < shot.peak_index && dist(first) < floor) ++first;
  while (last > shot.peak_index && dist(last) < floor) --last;
  if (last - first < 1) throw OutOfRange("orbit has fewer than two samples after clipping");
  orbit.path = path.slice(first, last);
  recentre(orbit);
  return orbit;
}

OrbitTrajectory find_homoclinic(const FlowIntegrator& flow, const SeedGeometry& geo,
                                const ShootingConfig& cfg) {
  cfg.validate();
  const int m = geo.unstable_dim();
  if (m == 0) throw UnstableSubspaceEmpty();
  const bool use_eta = geo.has_transverse() && cfg.eta_max > 0.0;
  const int n_angles = m - 1;
  const int dims = 1 + n_angles + (use_eta ? 1 : 0);

  Eigen::VectorXd lower(dims), upper(dims), centre(dims);
  lower[0] = std::log10(cfg.delta_min);
  upper[0] = std::log10(cfg.delta_max);
  for (int i = 0; i < n_angles; ++i) {
    lower[1 + i] = -std::numbers::pi;
    upper[1 + i] = std::numbers::pi;
  }
  if (use_eta) {
    lower[dims - 1] = std::log10(cfg.eta_min);
    upper[dims - 1] = std::log10(cfg.eta_max);
  }
  centre = 0.5 * (lower + upper);

  auto unpack = [&](const Eigen::VectorXd& v, int sign) {
    ShotParameters p;
    p.log_delta = v[0];
    for (int i = 0; i < n_angles; ++i) p.angles.push_back(v[1 + i]);
    if (use_eta) p.log_eta = v[dims - 1];
    p.sign = sign;
    return p;
  };

  int evaluations = 0;
  std::optional<ShotResult> best;
  ShotParameters best_params;
  // log of the return distance; blow-ups rank below every finite shot
  auto evaluate = [&](const ShotParameters& p) {
    ++evaluations;
    try {
      ShotResult r = shoot(flow, geo, p, cfg);
      const double value = std::log(std::max(r.return_distance, 1e-300));
      if (!best || r.return_distance < best->return_distance) {
        best = std::move(r);
        best_params = p;
      }
      return value;
    } catch (const NonFinite&) {
      return 1.0;
    }
  };

  evaluate(unpack(centre, 1));
  const double initial = best ? best->return_distance : 1.0;
  const int budget = cfg.max_evaluations;

  if (dims == 1) {
    // one-dimensional unstable manifold: both branches, golden section on log delta
    for (int sign : {1, -1}) {
      const int share = std::max(1, (budget - evaluations) / (sign == 1 ? 2 : 1));
      golden_section([&](double ld) { return evaluate(unpack(Eigen::VectorXd::Constant(1, ld), sign)); },
                     lower[0], upper[0], share);
    }
  } else {
    // coarse multistart over direction and transverse amplitude, then a simplex polish
    Eigen::VectorXd start = centre;
    double start_value = std::log(std::max(initial, 1e-300));
    const int na = n_angles > 0 ? cfg.scan_angles : 1;
    const int ne = use_eta ? cfg.scan_etas : 1;
    for (int ia = 0; ia < na && evaluations < budget; ++ia) {
      for (int ie = 0; ie < ne && evaluations < budget; ++ie) {
        Eigen::VectorXd v = centre;
        if (n_angles > 0) v[1] = -std::numbers::pi + 2.0 * std::numbers::pi * ia / na;
        if (use_eta)
          v[dims - 1] = ne == 1 ? centre[dims - 1]
                                : lower[dims - 1] + (upper[dims - 1] - lower[dims - 1]) * ie / (ne - 1);
        if ((v - centre).norm() == 0.0) continue;
        const double val = evaluate(unpack(v, 1));
        if (val < start_value) {
          start_value = val;
          start = v;
        }
      }
    }
    Eigen::VectorXd step(dims);
    step[0] = 0.25 * (upper[0] - lower[0]);
    for (int i = 0; i < n_angles; ++i) step[1 + i] = 0.5 * std::numbers::pi / na;
    if (use_eta) step[dims - 1] = 0.25 * (upper[dims - 1] - lower[dims - 1]) / std::max(1, ne - 1);
    if (evaluations < budget)
      nelder_mead([&](const Eigen::VectorXd& v) { return evaluate(unpack(v, 1)); }, start, step,
                  lower, upper, budget - evaluations, 0.0);
  }

  if (!best) throw NonFinite("find_homoclinic: every shot", 0.0);
  OrbitTrajectory orbit = orbit_from_shot(*best, geo, cfg);
  orbit.initial_return_distance = initial;
  orbit.evaluations = evaluations;
  orbit.params = best_params;
  return orbit;
}

Eigen::VectorXd orbit_interpolate(const OrbitTrajectory& orbit, double t, Extrapolation mode) {
  if (mode == Extrapolation::ClampToSteady &&
      (t < orbit.path.front_time() || t > orbit.path.back_time()))
    return orbit.steady;
  return orbit.path.value(t);
}

double tail_decay_rate(const OrbitTrajectory& orbit, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  const SampledPath& p = orbit.path;
  const double t0 = p.back_time() - fraction * (p.back_time() - p.front_time());
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p.times[i] < t0) continue;
    const double y = std::log(orbit.excursion(i));
    const double t = p.times[i];
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++n;
  }
  if (n < 2) throw DegenerateGrid("tail window holds fewer than two samples");
  return (n * sty - st * sy) / (n * stt - st * st);
}

FlowIntegrator ks_flow(const Domain& dom, double dt, int sample_stride) {
  return [dom, dt, sample_stride](const Eigen::VectorXd& x0, double horizon) {
    IntegrationConfig cfg;
    cfg.dt = dt;
    cfg.horizon = horizon;
    cfg.sample_stride = sample_stride;
    return integrate_ks(from_real(x0), dom, cfg);
  };
}

SeedGeometry ks_seed_geometry(const ModalState& steady, const Domain& dom, Subspace subspace,
                              bool with_transverse) {
  const SpectralData sd = steady_spectrum(steady, dom, subspace);
  SeedGeometry geo;
  geo.steady = to_real(steady);
  geo.unstable = sd.unstable_basis();
  if (geo.unstable.cols() == 0) throw UnstableSubspaceEmpty();
  if (with_transverse) {
    const int ls = sd.leading_stable_index();
    if (ls >= 0) {
      Eigen::VectorXd v = sd.eigenvectors.col(ls).real();
      if (v.norm() < 1e-8) v = sd.eigenvectors.col(ls).imag();
      geo.transverse = v.normalized();
    }
  }
  return geo;
}

ModalState orbit_state(const OrbitTrajectory& orbit, double t, Extrapolation mode) {
  return from_real(orbit_interpolate(orbit, t, mode));
}

MinimizeResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           int max_evaluations, double ftol) {
  const Eigen::Index n = start.size();
  auto clamp = [&](Eigen::VectorXd v) { return v.cwiseMax(lower).cwiseMin(upper).eval(); };
  MinimizeResult res;
  auto eval = [&](const Eigen::VectorXd& v) {
    ++res.evaluations;
    return f(v);
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.push_back(clamp(start));
  vals.push_back(eval(pts[0]));
  for (Eigen::Index i = 0; i < n && res.evaluations < max_evaluations; ++i) {
    Eigen::VectorXd v = pts[0];
    v[i] += step[i];
    if (v[i] > upper[i]) v[i] = pts[0][i] - step[i];
    pts.push_back(clamp(v));
    vals.push_back(eval(pts.back()));
  }
  if (static_cast<Eigen::Index>(pts.size()) < n + 1) {
    const auto it = std::min_element(vals.begin(), vals.end());
    res.x = pts[it - vals.begin()];
    res.value = *it;
    return res;
  }

  std::vector<std::size_t> order(n + 1);
  while (res.evaluations < max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t ib = order.front(), iw = order.back(), is = order[n - 1];
    if (vals[iw] - vals[ib] <= ftol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < order.size() - 1; ++k) centroid += pts[order[k]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = clamp(centroid + (centroid - pts[iw]));
    const double fr = eval(xr);
    if (fr < vals[ib]) {
      if (res.evaluations >= max_evaluations) {
        pts[iw] = xr;
        vals[iw] = fr;
        break;
      }
      const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - pts[iw]));
      const double fe = eval(xe);
      if (fe < fr) {
        pts[iw] = xe;
        vals[iw] = fe;
      } else {
        pts[iw] = xr;
        vals[iw] = fr;
      }
    } else if (fr < vals[is]) {
      pts[iw] = xr;
      vals[iw] = fr;
    } else {
      if (res.evaluations >= max_evaluations) break;
      const bool outside = fr < vals[iw];
      const Eigen::VectorXd xc =
          outside ? clamp(centroid + 0.5 * (xr - centroid)) : clamp(centroid + 0.5 * (pts[iw] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[iw])) {
        pts[iw] = xc;
        vals[iw] = fc;
      } else {
        for (std::size_t k = 0; k < pts.size() && res.evaluations < max_evaluations; ++k) {
          if (k == ib) continue;
          pts[k] = clamp(pts[ib] + 0.5 * (pts[k] - pts[ib]));
          vals[k] = eval(pts[k]);
        }
      }
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[it - vals.begin()];
  res.value = *it;
  return res;
}

MinimizeResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                              int max_evaluations, double xtol) {
  if (!(hi >= lo)) throw std::invalid_argument("golden_section: empty interval");
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  MinimizeResult res;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  res.evaluations = 2;
  while (res.evaluations < max_evaluations && b - a > xtol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
    ++res.evaluations;
  }
  res.x = Eigen::VectorXd::Constant(1, fc < fd ? c : d);
  res.value = std::min(fc, fd);
  return res;
}

}  // namespace ksm
