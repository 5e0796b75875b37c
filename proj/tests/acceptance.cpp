// One PASS/FAIL line per acceptance criterion. Runs the full figure set twice into
// <work-dir>/A and <work-dir>/B and checks the numerical properties on run A.

#include "ksm/config.hpp"
#include "ksm/melnikov.hpp"
#include "ksm/pipeline.hpp"
#include "ksm/planar.hpp"
#include "ksm/stochastic.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

namespace fs = std::filesystem;
using namespace ksm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::ostringstream line;
  line << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << title << ": " << o.detail << " ["
       << std::fixed << std::setprecision(1) << secs << " s]";
  std::cout << line.str() << std::endl;
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

// Numeric CSV columns, skipping the comment and header lines.
std::vector<std::vector<double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

RunOptions options_for(const fs::path& dir, std::ostream& log) {
  RunOptions o;
  o.output_dir = dir;
  o.log = &log;
  return o;
}

bool same_tree(const fs::path& a, const fs::path& b, std::string& why, int& compared) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file() && !fs::exists(a / fs::relative(e.path(), b))) {
      why = "only in B: " + fs::relative(e.path(), b).string();
      return false;
    }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (!fs::exists(b / f)) {
      why = "only in A: " + f.string();
      return false;
    }
    if (read_file(a / f) != read_file(b / f)) {
      why = "differs: " + f.string();
      return false;
    }
    ++compared;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path work = fs::temp_directory_path() / "ksm_acceptance";
  app.add_option("--work-dir", work, "scratch directory for the two figure runs");
  CLI11_PARSE(app, argc, argv);

  const fs::path run_a = work / "A", run_b = work / "B";
  fs::remove_all(work);
  fs::create_directories(work);
  std::ofstream log(work / "pipeline.log");

  // Two fresh runs of every preset; the numerical checks below read run A.
  std::vector<RunReport> runs;
  std::string run_error;
  for (const fs::path& dir : {run_a, run_b}) {
    const auto start = std::chrono::steady_clock::now();
    try {
      runs.push_back(run_figures(options_for(dir, log)));
    } catch (const std::exception& e) {
      run_error = e.what();
      break;
    }
    std::cout << "figure run " << dir.filename().string() << ": exit " << runs.back().exit_code << ", "
              << runs.back().files.size() << " files, "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s" << std::endl;
  }
  if (!run_error.empty()) std::cout << "figure run failed: " << run_error << std::endl;

  const Domain dom(22.0, 32);

  report(1, "dispersion relation", [&] {
    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(jacobian(zero_state(dom), dom)).eigenvalues();
    std::vector<double> got, want;
    for (Eigen::Index i = 0; i < ev.size(); ++i) got.push_back(ev[i].real());
    double max_imag = ev.imag().cwiseAbs().maxCoeff();
    for (int k = 1; k <= dom.modes(); ++k) {
      const double kq = k * dom.wavenumber();
      want.insert(want.end(), 2, kq * kq - kq * kq * kq * kq);
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    double err = max_imag;
    for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
    return Outcome{err <= 1e-10, "max |lambda - (k^2 q^2 - k^4 q^4)| = " + num(err) + " (<= 1e-10)"};
  });

  report(2, "ETDRK4 convergence order", [&] {
    ModalState a0 = zero_state(dom);
    a0[1] = {0.3, -0.6};
    a0[2] = {-0.2, -0.4};
    a0[3] = {0.1, 0.15};
    const auto run = [&](double dt) {
      IntegrationConfig cfg;
      cfg.dt = dt;
      cfg.horizon = 1.0;
      cfg.sample_stride = static_cast<int>(cfg.steps());
      const SampledPath p = integrate_ks(a0, dom, cfg);
      return Eigen::VectorXd(p.states.col(p.size() - 1));
    };
    const double dt = 0.01;
    const Eigen::VectorXd ref = run(dt / 8);
    const double order = std::log2((run(dt) - ref).norm() / (run(dt / 2) - ref).norm());
    return Outcome{order >= 3.5 && order <= 4.5, "order " + num(order) + " at dt = 0.01 over T = 1 (in [3.5, 4.5])"};
  });

  report(3, "adjoint pairing conservation", [&] {
    const PlanarSystem duff = duffing();
    const OrbitTrajectory po = analytic_orbit(duff, analytic_half_width(duff, 1e-6), 0.01);
    const double planar = planar_adjoint_solve(duff, po).pairing_drift;
    Pipeline p(load_preset("fig1"), options_for(run_a, log));
    AdjointTrajectory adj = p.adjoint();
    measure_pairing(adj, p.orbit());
    const double ks = adj.pairing_drift;
    return Outcome{planar <= 1e-6 && ks <= 1e-4,
                   "planar drift " + num(planar) + " (<= 1e-6), KS drift " + num(ks) + " (<= 1e-4)"};
  });

  Pipeline fig3(load_preset("fig3"), options_for(run_a, log));
  const auto fig3_options = [&] {
    MelnikovOptions m;
    m.phase_samples = fig3.config().melnikov.phase_samples;
    m.window = TimeWindow::symmetric(fig3.config().melnikov.window);
    return m;
  };
  const Eigen::VectorXd fig3_g = sine_profile(dom, fig3.config().forcing.mode).modal_g;

  report(4, "harmonic form of the Melnikov function", [&] {
    const MelnikovResult m = melnikov_periodic(fig3.adjoint(), fig3_g, fig3.config().forcing.omega, fig3_options());
    const double res = harmonic_residual(m);
    return Outcome{m.amplitude > 0.0 && res <= 1e-8 * m.amplitude,
                   "residual " + num(res) + " vs 1e-8 * amplitude " + num(m.amplitude) + " over " +
                       std::to_string(m.samples.size()) + " phases"};
  });

  report(5, "transversality and zero locations", [&] {
    const AdjointTrajectory& adj = fig3.adjoint();
    const MelnikovOptions mopt = fig3_options();
    // every forcing frequency of the sweep: two simple zeros per period
    const auto grid = frequency_grid(0.0, 2.0, 0.02);
    int checked = 0, bad = 0;
    for (const MelnikovResult& r : frequency_sweep(adj, fig3_g, grid, mopt)) {
      if (!(r.omega > 0.0) || r.amplitude <= 1e-12) continue;
      ++checked;
      if (r.zeros.size() != 2 || r.zeros[0].slope == 0.0 || r.zeros[1].slope == 0.0 ||
          r.zeros[0].slope * r.zeros[1].slope >= 0.0)
        ++bad;
    }
    // sign changes of the directly integrated M(t0), refined by bisection, against the analytic phases
    double worst = 0.0;
    int located = 0, expected = 0;
    for (double omega : {fig3.config().forcing.omega, 0.02, 1.0, 2.0}) {
      const MelnikovResult r = melnikov_periodic(adj, fig3_g, omega, mopt);
      expected += static_cast<int>(r.zeros.size());
      const ForcingField f = [&](double t) -> Eigen::VectorXd { return fig3_g * std::cos(omega * t); };
      const auto m = [&](double t0) { return melnikov_general(adj, f, t0, mopt.window); };
      const auto& s = r.samples;
      for (std::size_t i = 0; i < s.size(); ++i) {
        double lo = s[i].t0, hi = i + 1 < s.size() ? s[i + 1].t0 : 2 * std::numbers::pi / omega;
        double mlo = s[i].value, mhi = i + 1 < s.size() ? s[i + 1].value : s[0].value;
        if (mlo == 0.0 || mlo * mhi > 0.0) continue;
        for (int k = 0; k < 60; ++k) {
          const double mid = 0.5 * (lo + hi), mm = m(mid);
          if ((mm < 0.0) == (mlo < 0.0)) {
            lo = mid;
            mlo = mm;
          } else {
            hi = mid;
          }
        }
        const double t = 0.5 * (lo + hi);
        double best = 1e300;
        for (const auto& z : r.zeros) best = std::min(best, std::abs(z.t0 - t));
        worst = std::max(worst, best);
        ++located;
      }
    }
    return Outcome{checked > 0 && bad == 0 && located == expected && worst <= 1e-6,
                   std::to_string(checked - bad) + "/" + std::to_string(checked) +
                       " swept frequencies with two simple zeros; " + std::to_string(located) + "/" +
                       std::to_string(expected) + " sampled zeros, max |dt0| " + num(worst) + " (<= 1e-6)"};
  });

  report(6, "planar oracle: Melnikov zeros and splitting distance", [&] {
    const PlanarSystem duff = duffing();
    const double omega = 1.0, period = 2 * std::numbers::pi / omega;
    const OrbitTrajectory po = analytic_orbit(duff, analytic_half_width(duff, 1e-6), 0.01);
    const AdjointTrajectory adj = planar_adjoint_solve(duff, po);
    const MelnikovResult mel = melnikov_periodic(adj, Eigen::Vector2d(0.0, 1.0), omega);
    const PlanarForcing g = duffing_forcing(omega);
    const auto gap = [&](double eps, double t0) { return brute_force_split(duff, g, eps, omega, t0); };

    // sign changes of the gap at eps = 1e-3, offset so no zero sits on the grid edge
    const int n = 64;
    const double shift = -0.1;
    std::vector<double> ts(n), gs(n);
    for (int i = 0; i < n; ++i) {
      ts[i] = shift + period * i / n;
      gs[i] = gap(1e-3, ts[i]);
    }
    double worst_zero = 0.0;
    int crossings = 0;
    for (int i = 0; i < n; ++i) {
      double a = ts[i], b = i + 1 < n ? ts[i + 1] : ts[0] + period;
      double ga = gs[i], gb = i + 1 < n ? gs[i + 1] : gs[0];
      if (ga * gb > 0.0) continue;
      ++crossings;
      for (int k = 0; k < 3; ++k) {  // regula falsi
        const double c = a - ga * (b - a) / (gb - ga), gc = gap(1e-3, c);
        if ((gc < 0.0) == (ga < 0.0)) {
          a = c;
          ga = gc;
        } else {
          b = c;
          gb = gc;
        }
      }
      const double zero = a - ga * (b - a) / (gb - ga);
      double best = 1e300;
      for (const auto& z : mel.zeros) {
        const double d = std::remainder(zero - z.t0, period);
        best = std::min(best, std::abs(d));
      }
      worst_zero = std::max(worst_zero, best);
    }

    // gap / eps does not depend on eps away from the zeros
    double worst_ratio = 0.0;
    int ratios = 0;
    for (int i = 0; i < n; i += 4) {
      if (std::abs(mel.evaluate(ts[i])) < 0.25 * mel.amplitude) continue;
      const double ref = gs[i] / 1e-3;
      for (double eps : {1e-4, 3e-4}) worst_ratio = std::max(worst_ratio, std::abs(gap(eps, ts[i]) / eps / ref - 1.0));
      ++ratios;
    }
    const bool ok = crossings == static_cast<int>(mel.zeros.size()) && worst_zero <= 0.05 && ratios > 0 &&
                    worst_ratio <= 0.1;
    return Outcome{ok, std::to_string(crossings) + " gap sign changes vs " + std::to_string(mel.zeros.size()) +
                           " Melnikov zeros, max |dt0| " + num(worst_zero) + " (<= 0.05); gap/eps spread " +
                           num(worst_ratio) + " over " + std::to_string(ratios) + " phases (<= 0.1)"};
  });

  Pipeline fig5(load_preset("fig5"), options_for(run_a, log));

  report(7, "stochastic Melnikov law", [&] {
    std::vector<double> m;
    for (const auto& row : read_csv(run_a / "stochastic_samples.csv")) m.push_back(row.at(1));
    NoiseConfig nc;
    nc.D = fig5.config().noise.D;
    nc.dt = fig5.adjoint().path.spacing();
    const double var = predicted_variance(fig5.adjoint(), nc);
    const double n = static_cast<double>(m.size());
    double mean = 0.0;
    for (double x : m) mean += x / n;
    double s2 = 0.0;
    for (double x : m) s2 += (x - mean) * (x - mean) / (n - 1.0);
    const auto [lo, hi] = variance_interval(static_cast<int>(m.size()) - 1, 2.5758293035489004);
    const double ks = ks_statistic(m, var);
    const double p = kolmogorov_tail(std::sqrt(n) * ks);
    const bool size_ok = static_cast<int>(m.size()) == fig5.config().noise.ensemble;
    const bool ok = size_ok && s2 >= lo * var && s2 <= hi * var && std::abs(mean) <= 3.0 * std::sqrt(var / n) && p >= 0.01;
    return Outcome{ok, std::to_string(m.size()) + " samples, variance ratio " + num(s2 / var) + " in [" + num(lo) +
                           ", " + num(hi) + "], mean/SE " + num(mean / std::sqrt(var / n)) + ", KS p " + num(p)};
  });

  report(8, "square-root noise scaling", [&] {
    std::vector<double> d, rms;
    for (const auto& row : read_csv(run_a / "scaling.csv")) {
      d.push_back(row.at(0));
      rms.push_back(row.at(1));
    }
    const double slope = loglog_slope(d, rms);
    return Outcome{d.size() == 4 && std::abs(slope - 0.5) <= 0.05,
                   "slope " + num(slope) + " over " + std::to_string(d.size()) + " D values (0.50 +- 0.05)"};
  });

  report(9, "shooting progress and tail decay", [&] {
    Pipeline p(load_preset("fig1"), options_for(run_a, log));
    const OrbitTrajectory& o = p.orbit();
    const SpectralData& sd = p.spectrum();
    const double lead = sd.eigenvalues[sd.leading_stable_index()].real();
    const double gain = o.initial_return_distance / o.return_distance;
    const double rate = tail_decay_rate(o);
    const double rel = std::abs(rate / lead - 1.0);
    std::string more;
    for (double f : {0.05, 0.2, 0.3}) more += " " + num(tail_decay_rate(o, f)) + "@" + num(f);
    return Outcome{gain >= 100.0 && rel <= 0.2,
                   "return distance " + num(o.initial_return_distance) + " -> " + num(o.return_distance) + " (x" +
                       num(gain) + ", >= 100); tail rate " + num(rate) + " vs leading stable " + num(lead) +
                       " (" + num(100 * rel) + "%, <= 20%); other tail fractions:" + more};
  });

  report(10, "presets and deterministic output", [&] {
    if (!run_error.empty()) return Outcome{false, "figure run failed: " + run_error};
    const RunConfig f1 = load_preset("fig1"), f2 = load_preset("fig2"), f3 = load_preset("fig3"),
                    f4 = load_preset("fig4"), f5 = load_preset("fig5"), f6 = load_preset("fig6");
    bool table = true;
    for (const RunConfig* c : {&f1, &f2, &f3, &f4, &f5, &f6})
      table = table && c->domain.length == 22.0 && c->domain.modes == 32 && c->integration.dt == 1e-3 &&
              c->shooting.horizon == 200.0 && c->shooting.dt == 1e-3 && c->steady.tol == 1e-8;
    table = table && f2.manifolds.horizon == 200.0;
    table = table && f3.integration.horizon == 300.0 && f3.forcing.mode == 1 && f3.forcing.epsilon == 0.01 &&
            f3.forcing.omega == 0.5;
    table = table && f4.melnikov.omega_min == 0.0 && f4.melnikov.omega_max == 2.0 && f4.melnikov.omega_step == 0.02 &&
            f4.melnikov.window == 150.0 && f4.melnikov.adjoint_tol == 1e-8;
    table = table && f5.noise.D == 0.02 && f5.noise.ensemble == 500;
    table = table && f6.integration.horizon == 100.0 && f6.noise.D == 0.02;

    bool executed = runs.size() == 2;
    for (const RunReport& r : runs) executed = executed && (r.exit_code == kSuccess || r.exit_code == kNotConverged);
    for (const char* f : {"fig1_orbit.csv", "fig2_manifolds.csv", "fig3_splitting.csv", "fig4_sweep.csv",
                          "fig5_hist.csv", "fig6_wander.csv"})
      executed = executed && fs::exists(run_a / f);
    std::string why;
    int compared = 0;
    const bool same = executed && same_tree(run_a, run_b, why, compared);
    return Outcome{table && executed && same,
                   std::string("table values ") + (table ? "match" : "DIFFER") + ", all presets " +
                       (executed ? "ran" : "did NOT run") + " (orbit exit " +
                       (runs.empty() ? std::string("-") : std::to_string(runs[0].exit_code)) + "), " +
                       (same ? std::to_string(compared) + " files byte-identical across two runs" : "runs differ: " + why)};
  });

  std::cout << (failures == 0 ? "all criteria PASS" : std::to_string(failures) + " criteria FAIL") << std::endl;
  return failures == 0 ? 0 : 1;
}
