#include "ksm/pipeline.hpp"

#include "ksm/errors.hpp"
#include "ksm/io.hpp"
#include "ksm/melnikov.hpp"
#include "ksm/planar.hpp"
#include "ksm/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#ifndef KSM_VERSION
#define KSM_VERSION "dev"
#endif

namespace ksm {

std::string code_version() { return KSM_VERSION; }

namespace {

const std::vector<std::pair<Verb, std::string>>& verb_table() {
  static const std::vector<std::pair<Verb, std::string>> t = {
      {Verb::Steady, "steady"},         {Verb::Orbit, "orbit"},   {Verb::Adjoint, "adjoint"},
      {Verb::Melnikov, "melnikov"},     {Verb::Sweep, "sweep"},   {Verb::Stochastic, "stochastic"},
      {Verb::Wander, "wander"},         {Verb::Manifolds, "manifolds"}, {Verb::Oracle, "oracle"},
      {Verb::Figures, "figures"}};
  return t;
}

std::vector<double> mode_row(double t, const Eigen::VectorXd& x) {
  const ModePair m = project_modes(from_real(x));
  return {t, m.mode1, m.mode2};
}

std::filesystem::path cache_root(const RunOptions& opts, const std::filesystem::path& out) {
  return opts.cache_dir.empty() ? out / "cache" : opts.cache_dir;
}

std::string hash_vector(const Eigen::VectorXd& v) {
  return hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size())));
}

}  // namespace

std::optional<Verb> parse_verb(std::string_view name) {
  for (const auto& [v, n] : verb_table())
    if (n == name) return v;
  return std::nullopt;
}

std::string verb_name(Verb v) {
  for (const auto& [vv, n] : verb_table())
    if (vv == v) return n;
  return "?";
}

const std::vector<std::string>& verb_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [v, n] : verb_table()) out.push_back(n);
    return out;
  }();
  return names;
}

Pipeline::Pipeline(RunConfig cfg, RunOptions opts) : cfg_(std::move(cfg)), opts_(std::move(opts)) {
  cfg_.validate();
}

std::ostream& Pipeline::log() { return opts_.log ? *opts_.log : std::cerr; }

std::uint64_t Pipeline::seed() const { return opts_.seed_override.value_or(cfg_.noise.seed); }

std::filesystem::path Pipeline::output_dir() const {
  return opts_.output_dir.empty() ? std::filesystem::path(cfg_.output_directory) : opts_.output_dir;
}

CsvMeta Pipeline::meta(const std::string& name, const std::string& note) const {
  RunConfig effective = cfg_;
  effective.noise.seed = seed();
  return {name, config_hash(effective), code_version(), seed(), note};
}

std::filesystem::path Pipeline::write(const std::string& file, const std::vector<std::string>& columns,
                                      const std::vector<std::vector<double>>& rows, const std::string& note) {
  const auto path = output_dir() / file;
  const std::string name = file.substr(0, file.rfind('.'));
  write_csv(path, meta(name, note), columns, rows);
  log() << "[ksm] wrote " << path.string() << " (" << rows.size() << " rows)\n";
  return path;
}

const SteadyState& Pipeline::steady() {
  if (!steady_) {
    NewtonOptions nopt;
    nopt.tol = cfg_.steady.tol;
    nopt.max_iter = cfg_.steady.max_iter;
    nopt.subspace = cfg_.steady.subspace;
    steady_ = seed_steady(cfg_.domain.domain(), cfg_.steady.amplitude, cfg_.steady.settle_time, cfg_.integration.dt,
                          nopt);
    log() << "[ksm] steady: residual " << steady_->residual_norm << " after " << steady_->newton_iterations
          << " Newton iterations\n";
  }
  return *steady_;
}

const SpectralData& Pipeline::spectrum() {
  if (!spectrum_) spectrum_ = steady_spectrum(steady().state, cfg_.domain.domain(), Subspace::Full);
  return *spectrum_;
}

std::string Pipeline::orbit_key() {
  std::string id;
  const auto num = [&](const char* k, double v) { id += std::string(k) + "=" + hex_double(v) + ";"; };
  num("L", cfg_.domain.length);
  num("N", cfg_.domain.modes);
  num("dt", cfg_.shooting.dt);
  num("stride", cfg_.shooting.sample_stride);
  id += "subspace=" + subspace_name(cfg_.orbit_subspace) + ";";
  id += "steady=" + hash_vector(to_real(steady().state)) + ";";
  num("T", cfg_.shooting.horizon);
  num("delta_min", cfg_.shooting.delta_min);
  num("delta_max", cfg_.shooting.delta_max);
  num("eta_min", cfg_.shooting.eta_min);
  num("eta_max", cfg_.shooting.eta_max);
  num("return_tol", cfg_.shooting.return_tol);
  num("max_evaluations", cfg_.shooting.max_evaluations);
  num("scan_angles", cfg_.shooting.scan_angles);
  num("scan_etas", cfg_.shooting.scan_etas);
  num("clip", cfg_.shooting.clip_fraction);
  return hex64(fnv1a64(id));
}

std::string Pipeline::adjoint_key() {
  return hex64(fnv1a64(orbit_key() + ";adjoint_tol=" + hex_double(cfg_.melnikov.adjoint_tol)));
}

const OrbitTrajectory& Pipeline::orbit() {
  if (orbit_) return *orbit_;
  const auto path = cache_root(opts_, output_dir()) / ("orbit-" + orbit_key() + ".ksm");
  if (std::filesystem::exists(path)) {
    try {
      orbit_ = read_orbit_cache(path);
      orbit_cached_ = true;
      log() << "[ksm] orbit: reusing cache " << path.string() << "\n";
      return *orbit_;
    } catch (const Error& e) {
      log() << "[ksm] orbit: ignoring unreadable cache (" << e.what() << ")\n";
    }
  }
  const Domain dom = cfg_.domain.domain();
  const SeedGeometry geo =
      ks_seed_geometry(steady().state, dom, cfg_.orbit_subspace, cfg_.shooting.eta_max > 0.0);
  log() << "[ksm] orbit: shooting in the " << subspace_name(cfg_.orbit_subspace) << " space, "
        << geo.unstable_dim() << " unstable directions, up to " << cfg_.shooting.max_evaluations << " shots\n";
  ++shooting_runs_;
  orbit_ = find_homoclinic(ks_flow(dom, cfg_.shooting.dt, cfg_.shooting.sample_stride), geo, cfg_.shooting);
  log() << "[ksm] orbit: return distance " << orbit_->initial_return_distance << " -> " << orbit_->return_distance
        << " after " << orbit_->evaluations << " shots" << (orbit_->converged ? "" : " (not converged)") << "\n";
  write_orbit_cache(*orbit_, path);
  return *orbit_;
}

const AdjointTrajectory& Pipeline::adjoint() {
  if (adjoint_) return *adjoint_;
  const auto path = cache_root(opts_, output_dir()) / ("adjoint-" + adjoint_key() + ".ksm");
  const OrbitTrajectory& o = orbit();
  if (std::filesystem::exists(path)) {
    try {
      adjoint_ = read_adjoint_cache(path);
      log() << "[ksm] adjoint: reusing cache " << path.string() << "\n";
      return *adjoint_;
    } catch (const Error& e) {
      log() << "[ksm] adjoint: ignoring unreadable cache (" << e.what() << ")\n";
    }
  }
  adjoint_ = ks_adjoint_solve(o, cfg_.domain.domain(), cfg_.melnikov.adjoint_tol);
  log() << "[ksm] adjoint: pairing drift " << adjoint_->pairing_drift << ", start defect " << adjoint_->start_defect
        << "\n";
  write_adjoint_cache(*adjoint_, path);
  return *adjoint_;
}

RunReport Pipeline::run(Verb verb) {
  switch (verb) {
    case Verb::Steady: return stage_steady();
    case Verb::Orbit: return stage_orbit();
    case Verb::Adjoint: return stage_adjoint();
    case Verb::Melnikov: return stage_melnikov();
    case Verb::Sweep: return stage_sweep();
    case Verb::Stochastic: return stage_stochastic();
    case Verb::Wander: return stage_wander();
    case Verb::Manifolds: return stage_manifolds();
    case Verb::Oracle: return stage_oracle();
    case Verb::Figures: {
      RunOptions o = opts_;
      if (o.output_dir.empty()) o.output_dir = output_dir();
      return run_figures(o);
    }
  }
  throw std::invalid_argument("unknown verb");
}

namespace {

int orbit_status(const OrbitTrajectory& o) { return o.converged ? kSuccess : kNotConverged; }

}  // namespace

RunReport Pipeline::stage_steady() {
  const SteadyState& s = steady();
  const SpectralData& sd = spectrum();
  RunReport r;
  std::vector<std::vector<double>> rows;
  for (Eigen::Index k = 1; k < s.state.size(); ++k)
    rows.push_back({static_cast<double>(k), s.state[k].real(), s.state[k].imag()});
  r.files.push_back(write("steady_state.csv", {"k", "re_a", "im_a"}, rows));
  rows.clear();
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i)
    rows.push_back({static_cast<double>(i), sd.eigenvalues[i].real(), sd.eigenvalues[i].imag()});
  r.files.push_back(write("steady_spectrum.csv", {"index", "re_lambda", "im_lambda"}, rows));
  if (s.residual_norm > cfg_.steady.tol) r.exit_code = kNotConverged;
  return r;
}

RunReport Pipeline::stage_orbit() {
  const OrbitTrajectory& o = orbit();
  std::vector<std::vector<double>> rows;
  rows.reserve(o.path.size());
  for (Eigen::Index i = 0; i < o.path.size(); ++i) {
    auto row = mode_row(o.path.times[i], o.path.states.col(i));
    row.push_back(o.excursion(i));
    rows.push_back(std::move(row));
  }
  RunReport r;
  r.files.push_back(write("fig1_orbit.csv", {"t", "mode1", "mode2", "excursion_norm"}, rows));
  r.exit_code = orbit_status(o);
  return r;
}

RunReport Pipeline::stage_adjoint() {
  const OrbitTrajectory& o = orbit();
  const AdjointTrajectory& a = adjoint();
  std::vector<std::vector<double>> rows;
  rows.reserve(a.path.size());
  for (Eigen::Index i = 0; i < a.path.size(); ++i)
    rows.push_back({a.path.times[i], a.path.states.col(i).norm(), a.path.states.col(i).dot(o.path.derivs.col(i))});
  RunReport r;
  r.files.push_back(write("adjoint.csv", {"t", "psi_norm", "pairing"}, rows));
  r.exit_code = orbit_status(o);
  return r;
}

RunReport Pipeline::stage_melnikov() {
  const Domain dom = cfg_.domain.domain();
  const OrbitTrajectory& o = orbit();
  const AdjointTrajectory& a = adjoint();
  const ForcingProfile g = sine_profile(dom, cfg_.forcing.mode);
  MelnikovOptions mopt;
  mopt.phase_samples = cfg_.melnikov.phase_samples;
  mopt.window = TimeWindow::symmetric(cfg_.melnikov.window);
  const MelnikovResult m = melnikov_periodic(a, g.modal_g, cfg_.forcing.omega, mopt);
  log() << "[ksm] melnikov: omega " << m.omega << " A " << m.A << " B " << m.B << " amplitude " << m.amplitude
        << ", " << m.zeros.size() << " zeros per period\n";

  RunReport r;
  std::vector<std::vector<double>> rows;
  for (const auto& s : m.samples) rows.push_back({s.t0, s.value});
  r.files.push_back(write("melnikov_phase.csv", {"t0", "M"}, rows));
  rows.clear();
  for (const auto& z : m.zeros) rows.push_back({z.t0, z.slope});
  r.files.push_back(write("melnikov_zeros.csv", {"t0", "slope"}, rows));

  // the forced flow started where the orbit leaves the steady state
  IntegrationConfig ic = cfg_.integration;
  const ModalState g_modal = from_real(g.modal_g);
  const double eps = cfg_.forcing.epsilon, w = cfg_.forcing.omega;
  const SampledPath forced = integrate_ks_forced(
      from_real(Eigen::VectorXd(o.path.states.col(0))), dom, ic,
      [&](double t) -> ModalState { return (eps * std::cos(w * t)) * g_modal; });
  rows.clear();
  for (Eigen::Index i = 0; i < forced.size(); ++i) rows.push_back(mode_row(forced.times[i], forced.states.col(i)));
  r.files.push_back(write("fig3_splitting.csv", {"t", "mode1", "mode2"}, rows));
  r.exit_code = orbit_status(o);
  return r;
}

RunReport Pipeline::stage_sweep() {
  const Domain dom = cfg_.domain.domain();
  const AdjointTrajectory& a = adjoint();
  const ForcingProfile g = sine_profile(dom, cfg_.forcing.mode);
  MelnikovOptions mopt;
  mopt.phase_samples = cfg_.melnikov.phase_samples;
  mopt.window = TimeWindow::symmetric(cfg_.melnikov.window);
  const auto grid = frequency_grid(cfg_.melnikov.omega_min, cfg_.melnikov.omega_max, cfg_.melnikov.omega_step);
  const auto results = frequency_sweep(a, g.modal_g, grid, mopt);
  std::vector<std::vector<double>> rows;
  for (const auto& m : results) rows.push_back({m.omega, m.A, m.B, m.amplitude});
  RunReport r;
  r.files.push_back(write("fig4_sweep.csv", {"omega", "A", "B", "amplitude"}, rows));
  r.exit_code = orbit_status(orbit());
  return r;
}

RunReport Pipeline::stage_stochastic() {
  const AdjointTrajectory& a = adjoint();
  NoiseConfig nc;
  nc.D = cfg_.noise.D;
  nc.dt = a.path.spacing();
  nc.ensemble = cfg_.noise.ensemble;
  nc.seed = seed();
  nc.threads = opts_.threads;
  const EnsembleResult e = run_ensemble(a, nc);
  log() << "[ksm] stochastic: mean " << e.sample_mean << " variance " << e.sample_var << " predicted "
        << e.predicted_var << "\n";

  RunReport r;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < e.samples.size(); ++i) rows.push_back({static_cast<double>(i), e.samples[i]});
  r.files.push_back(write("stochastic_samples.csv", {"realization", "M"}, rows));
  rows.clear();
  if (e.predicted_var > 0.0)
    for (const auto& b : ensemble_histogram(e, cfg_.noise.histogram_bins))
      rows.push_back({b.left, b.right, static_cast<double>(b.count), b.pdf_at_center});
  r.files.push_back(write("fig5_hist.csv", {"bin_left", "bin_right", "count", "gaussian_pdf"}, rows));

  const ScalingFit fit = rms_scaling_fit(a, cfg_.noise.scaling_D, nc);
  log() << "[ksm] stochastic: rms ~ D^" << fit.slope << "\n";
  rows.clear();
  for (const auto& p : fit.points) rows.push_back({p.D, p.rms, p.predicted_rms});
  r.files.push_back(write("scaling.csv", {"D", "rms", "predicted_rms"}, rows));
  r.exit_code = orbit_status(orbit());
  return r;
}

RunReport Pipeline::stage_wander() {
  const Domain dom = cfg_.domain.domain();
  const OrbitTrajectory& o = orbit();
  const double dt = cfg_.integration.dt, D = cfg_.noise.D;
  const long steps = std::lround(cfg_.integration.horizon / dt);
  const int stride = cfg_.integration.sample_stride;
  const double q = dom.wavenumber();
  const auto nonlinear = [q](double, const ModalState& a) { return ks_nonlinear(a, q); };
  const Etdrk4 stepper(linear_spectrum(dom), dt, cfg_.integration.contour_points);
  auto rng = realization_rng(seed(), 0);
  std::normal_distribution<double> normal(0.0, std::sqrt(D * dt));

  // nearest orbit sample: coarse pass over every 10th sample, then the neighbourhood
  const Eigen::Index n = o.path.size();
  const auto nearest = [&](const Eigen::VectorXd& x) {
    Eigen::Index best = 0;
    double bd = (o.path.states.col(0) - x).squaredNorm();
    for (Eigen::Index i = 0; i < n; i += 10)
      if (const double d = (o.path.states.col(i) - x).squaredNorm(); d < bd) bd = d, best = i;
    for (Eigen::Index i = std::max<Eigen::Index>(0, best - 10); i <= std::min(n - 1, best + 10); ++i)
      if (const double d = (o.path.states.col(i) - x).squaredNorm(); d < bd) bd = d;
    return std::sqrt(bd);
  };

  Eigen::VectorXd x = o.path.states.col(0);
  ModalState a = from_real(x);
  std::vector<std::vector<double>> rows;
  for (long i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (i % stride == 0 || i == steps) {
      x = to_real(a);
      auto row = mode_row(t, x);
      row.push_back(nearest(x));
      rows.push_back(std::move(row));
    }
    if (i == steps) break;
    stepper.step(t, a, nonlinear);
    for (Eigen::Index k = 1; k < a.size(); ++k) a[k] += std::complex<double>(normal(rng), normal(rng));
    if (!a.allFinite()) throw NonFinite("wander", t + dt);
  }
  RunReport r;
  r.files.push_back(write("fig6_wander.csv", {"t", "mode1", "mode2", "manifold_distance_proxy"}, rows,
                          "proxy=distance_to_nearest_orbit_sample"));
  r.exit_code = orbit_status(o);
  return r;
}

RunReport Pipeline::stage_manifolds() {
  const Domain dom = cfg_.domain.domain();
  const SpectralData& sd = spectrum();
  const Eigen::VectorXd xs = to_real(steady().state);
  const int is = sd.leading_stable_index();
  if (sd.n_unstable == 0) throw UnstableSubspaceEmpty();
  if (is < 0) throw Error("steady state has no stable eigenvalue");
  const Eigen::VectorXd vu = sd.eigenvectors.col(0).real().normalized();
  const Eigen::VectorXd vs = sd.eigenvectors.col(is).real().normalized();

  IntegrationConfig ic = cfg_.integration;
  ic.horizon = cfg_.manifolds.horizon;
  std::vector<std::vector<double>> rows;
  const struct {
    const Eigen::VectorXd& v;
    double delta;
  } seeds[] = {{vu, cfg_.manifolds.delta_unstable}, {vu, -cfg_.manifolds.delta_unstable},
               {vs, cfg_.manifolds.delta_stable},   {vs, -cfg_.manifolds.delta_stable}};
  for (int b = 0; b < 4; ++b) {
    const SampledPath p = integrate_ks(from_real(Eigen::VectorXd(xs + seeds[b].delta * seeds[b].v)), dom, ic);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      auto row = mode_row(p.times[i], p.states.col(i));
      row.insert(row.begin(), static_cast<double>(b));
      rows.push_back(std::move(row));
    }
  }
  RunReport r;
  r.files.push_back(write("fig2_manifolds.csv", {"branch_id", "t", "mode1", "mode2"}, rows,
                          "branches=unstable+,unstable-,stable+,stable-"));
  return r;
}

RunReport Pipeline::stage_oracle() {
  const PlanarSystem sys = duffing();
  const OrbitTrajectory o = analytic_orbit(sys, analytic_half_width(sys, cfg_.shooting.clip_fraction), 0.01);
  const AdjointTrajectory a = planar_adjoint_solve(sys, o);
  const double omega = 1.0, eps = 1e-3;
  const PlanarForcing g = duffing_forcing(omega);
  const int n = 64;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) {
    const double t0 = 2.0 * std::numbers::pi / omega * i / n;
    rows.push_back({t0, melnikov_planar(o, a, g, t0), brute_force_split(sys, g, eps, omega, t0) / eps});
  }
  RunReport r;
  r.files.push_back(write("oracle.csv", {"t0", "melnikov", "gap_over_eps"}, rows));
  log() << "[ksm] oracle: adjoint pairing drift " << a.pairing_drift << "\n";
  return r;
}

Verb preset_verb(std::string_view preset) {
  if (preset == "fig1") return Verb::Orbit;
  if (preset == "fig2") return Verb::Manifolds;
  if (preset == "fig3") return Verb::Melnikov;
  if (preset == "fig4") return Verb::Sweep;
  if (preset == "fig5") return Verb::Stochastic;
  if (preset == "fig6") return Verb::Wander;
  throw std::invalid_argument("unknown preset '" + std::string(preset) + "'");
}

RunReport run_figures(const RunOptions& opts) {
  RunReport all;
  RunOptions o = opts;
  for (const std::string& name : preset_names()) {
    RunConfig cfg = load_preset(name);
    if (o.output_dir.empty()) o.output_dir = cfg.output_directory;
    if (o.cache_dir.empty()) o.cache_dir = o.output_dir / "cache";
    Pipeline p(std::move(cfg), o);
    (o.log ? *o.log : std::cerr) << "[ksm] figures: " << name << "\n";
    RunReport r = p.run(preset_verb(name));
    all.files.insert(all.files.end(), r.files.begin(), r.files.end());
    all.exit_code = std::max(all.exit_code, r.exit_code);
  }
  return all;
}

}  // namespace ksm
