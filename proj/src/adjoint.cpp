#include "ksm/adjoint.hpp"

#include <algorithm>
#include <cmath>

namespace ksm {

void measure_pairing(AdjointTrajectory& adj, const OrbitTrajectory& orbit) {
  const SampledPath& psi = adj.path;
  const double p0 = psi.value(0.0).dot(orbit.path.derivative(0.0));
  const double scale = orbit.path.derivative(0.0).norm();
  double drift = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    drift = std::max(drift, std::abs(psi.states.col(i).dot(orbit.path.derivs.col(i)) - p0));
  adj.pairing = p0;
  adj.pairing_drift = scale > 0.0 ? drift / scale : drift;
}

AdjointTrajectory adjoint_solve(const OrbitTrajectory& orbit, const AdjointField& field,
                                const SpectralData& steady_spectrum, const AdjointConfig& cfg) {
  const SampledPath& x = orbit.path;
  if (x.size() < 3 || !x.is_uniform()) throw std::invalid_argument("adjoint needs a uniformly sampled orbit");
  if (x.front_time() > 0.0 || x.back_time() < 0.0)
    throw std::invalid_argument("adjoint needs an orbit recentred around t = 0");
  if (steady_spectrum.n_unstable == 0) throw UnstableSubspaceEmpty();

  const double spacing = x.spacing();
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("adjoint dt must be positive");
  const int sub = std::max({1, static_cast<int>(std::ceil(spacing / cfg.dt - 1e-9)),
                            static_cast<int>(std::ceil(spacing * cfg.spectral_bound / cfg.stability_margin))});
  const double h = spacing / sub;

  const Eigen::MatrixXd right_u = steady_spectrum.unstable_basis();
  Eigen::HouseholderQR<Eigen::MatrixXd> lqr(steady_spectrum.left_unstable_basis());
  const Eigen::Index m = right_u.cols();
  const Eigen::MatrixXd left_u = lqr.householderQ() * Eigen::MatrixXd::Identity(right_u.rows(), m);

  const auto rhs = [&field](double t, const Eigen::VectorXd& psi, Eigen::VectorXd& out) { field(t, psi, out); };
  std::vector<SampledPath> cols;
  cols.reserve(m);
  for (Eigen::Index j = 0; j < m; ++j)
    cols.push_back(rk4_integrate(rhs, Eigen::VectorXd(left_u.col(j)), x.back_time(), x.front_time(), h, sub));

  Eigen::VectorXd c = Eigen::VectorXd::Ones(1);
  if (m > 1) {
    // minimise |P_u psi(t_start)| / |psi(t_start)| over psi(t_end) in the left unstable span
    Eigen::MatrixXd g(right_u.rows(), m);
    for (Eigen::Index j = 0; j < m; ++j) g.col(j) = cols[j].states.col(0);
    Eigen::HouseholderQR<Eigen::MatrixXd> gqr(g);
    const Eigen::MatrixXd q = gqr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), m);
    const Eigen::MatrixXd r = gqr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(right_u.transpose() * q, Eigen::ComputeFullV);
    const Eigen::VectorXd y = svd.matrixV().col(m - 1);
    c = r.triangularView<Eigen::Upper>().solve(y);
  }

  AdjointTrajectory adj;
  adj.substeps = sub;
  adj.path = cols[0];
  adj.path.states *= c[0];
  adj.path.derivs *= c[0];
  for (Eigen::Index j = 1; j < m; ++j) {
    adj.path.states += c[j] * cols[j].states;
    adj.path.derivs += c[j] * cols[j].derivs;
  }
  adj.path.times = x.times;  // identical grid; avoids rounding in the reversed clock

  const Eigen::VectorXd psi0 = adj.path.value(0.0);
  const double peak = adj.path.states.colwise().norm().maxCoeff();
  if (!(psi0.norm() > cfg.degeneracy_tol * peak))
    throw DegenerateAdjoint("adjoint vanishes at the orbit centre (|psi(0)| / max|psi| = " +
                            std::to_string(psi0.norm() / peak) + ")");
  double scale = 1.0 / psi0.norm();
  if (psi0.dot(x.value(0.0) - orbit.steady) < 0.0) scale = -scale;
  adj.path.states *= scale;
  adj.path.derivs *= scale;
  adj.path.check_finite("adjoint_solve");

  const Eigen::VectorXd start = adj.path.states.col(0);
  adj.start_defect = (right_u.transpose() * start).norm() / start.norm();
  const double new_peak = adj.path.states.colwise().norm().maxCoeff();
  adj.endpoint_ratio = std::max(start.norm(), adj.path.states.col(adj.path.size() - 1).norm()) / new_peak;
  measure_pairing(adj, orbit);
  return adj;
}

Eigen::MatrixXd jacobian_on_orbit(const OrbitTrajectory& orbit, const Domain& dom, double t,
                                  Extrapolation mode) {
  return jacobian(orbit_state(orbit, t, mode), dom);
}

AdjointField ks_adjoint_field(const OrbitTrajectory& orbit, const Domain& dom) {
  const double q = dom.wavenumber();
  return [&orbit, q](double t, const Eigen::VectorXd& psi, Eigen::VectorXd& out) {
    const ModalState u = from_real(orbit.path.value(t));
    out = to_real(ks_adjoint_rhs(u, from_real(psi), q));
  };
}

AdjointTrajectory ks_adjoint_solve(const OrbitTrajectory& orbit, const Domain& dom, double degeneracy_tol) {
  const ModalState steady = from_real(orbit.steady);
  const SpectralData sd = eigen_analysis(jacobian(steady, dom));
  AdjointConfig cfg;
  // the diagonal dominates the high modes; 10% headroom for the orbit's nonlinear part
  cfg.spectral_bound = 1.1 * sd.eigenvalues.cwiseAbs().maxCoeff();
  cfg.degeneracy_tol = degeneracy_tol;
  return adjoint_solve(orbit, ks_adjoint_field(orbit, dom), sd, cfg);
}

}  // namespace ksm
