#include "ksm/equilibria.hpp"

#include "ksm/integrators.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace ksm {

Eigen::MatrixXd jacobian(const ModalState& state, const Domain& dom) {
  using C = std::complex<double>;
  const int n = dom.modes();
  const double q = dom.wavenumber();
  if (state.size() != n + 1) throw std::invalid_argument("jacobian: state size does not match N");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 1; k <= n; ++k) {
    const double lam = linear_growth_rate(k, q);
    jac(re_slot(k), re_slot(k)) += lam;
    jac(im_slot(k), im_slot(k)) += lam;
    const C factor(0.0, -k * q);
    for (int j = 1; j <= n; ++j) {
      // d(adot_k) = c * da_j + d * conj(da_j)
      const C c = std::abs(k - j) <= n ? factor * detail::mode(state, k - j) : C(0);
      const C d = k + j <= n ? factor * state[k + j] : C(0);
      jac(re_slot(k), re_slot(j)) += c.real() + d.real();
      jac(re_slot(k), im_slot(j)) += -c.imag() + d.imag();
      jac(im_slot(k), re_slot(j)) += c.imag() + d.imag();
      jac(im_slot(k), im_slot(j)) += c.real() - d.real();
    }
  }
  return jac;
}

namespace {

double residual_norm(const ModalState& a, const Domain& dom) {
  return to_real(ks_rhs(a, dom)).norm();
}

}  // namespace

SteadyState newton_steady(const ModalState& guess, const Domain& dom, const NewtonOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("Newton tolerance must be positive");
  check_state(guess, dom);
  const Eigen::MatrixXd basis = subspace_basis(opts.subspace, dom.modes());
  Eigen::VectorXd x = to_real(guess);
  if (subspace_defect(x, opts.subspace) > 1e-12)
    throw std::invalid_argument("Newton guess does not lie in the requested subspace");
  x = basis * (basis.transpose() * x);

  ModalState a = from_real(x);
  double res = residual_norm(a, dom);
  std::vector<double> history{res};
  int polish_left = opts.polish_iterations;
  for (int iter = 0;; ++iter) {
    const bool converged = res <= opts.tol;
    if (converged && (polish_left == 0 || res == 0.0)) return {a, res, iter, history};
    if (!converged && iter >= opts.max_iter) break;

    const Eigen::MatrixXd jac = basis.transpose() * jacobian(a, dom) * basis;
    const Eigen::VectorXd r = basis.transpose() * to_real(ks_rhs(a, dom));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
    qr.setThreshold(1e-12);
    Eigen::VectorXd step;
    if (qr.rank() == jac.cols()) {
      step = qr.solve(-r);
    } else if (qr.rank() == jac.cols() - 1) {
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jac);
      cod.setThreshold(1e-12);
      step = cod.solve(-r);
    } else {
      if (converged) return {a, res, iter, history};
      throw SingularJacobian("Jacobian rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(jac.cols()) + " at Newton iterate");
    }

    if (converged) {
      --polish_left;
      const Eigen::VectorXd trial_x = x + basis * step;
      const ModalState trial = from_real(trial_x);
      const double trial_res = trial.allFinite() ? residual_norm(trial, dom) : res;
      if (!(trial_res < res)) return {a, res, iter, history};
      x = trial_x;
      a = trial;
      res = trial_res;
      history.push_back(res);
      continue;
    }

    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
      const Eigen::VectorXd trial_x = x + scale * (basis * step);
      const ModalState trial = from_real(trial_x);
      if (!trial.allFinite()) continue;
      const double trial_res = residual_norm(trial, dom);
      if (trial_res < res) {
        x = trial_x;
        a = trial;
        res = trial_res;
        history.push_back(res);
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NoConvergence(iter + 1, res);
  }
  throw NoConvergence(opts.max_iter, res);
}

SteadyState seed_steady(const Domain& dom, double amplitude, double settle_time, double dt,
                        const NewtonOptions& opts) {
  ModalState a = zero_state(dom);
  a[1] = {0.0, -0.5 * amplitude};
  if (settle_time > 0.0) {
    IntegrationConfig cfg;
    cfg.dt = dt;
    cfg.horizon = settle_time;
    cfg.sample_stride = static_cast<int>(std::max(1L, cfg.steps()));
    const SampledPath path = integrate_ks(a, dom, cfg);
    a = from_real(Eigen::VectorXd(path.states.col(path.size() - 1)));
  }
  return newton_steady(a, dom, opts);
}

SpectralData eigen_analysis(const Eigen::MatrixXd& jac) {
  if (jac.rows() != jac.cols()) throw std::invalid_argument("eigen_analysis: matrix not square");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, true);
  const Eigen::VectorXcd& values = solver.eigenvalues();
  const Eigen::MatrixXcd& vectors = solver.eigenvectors();
  const Eigen::Index n = values.size();

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    if (values[i].real() != values[j].real()) return values[i].real() > values[j].real();
    return values[i].imag() > values[j].imag();
  });

  SpectralData out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues[i] = values[order[i]];
    out.eigenvectors.col(i) = vectors.col(order[i]);
    if (out.eigenvalues[i].real() > kUnstableThreshold) ++out.n_unstable;
  }
  const Eigen::MatrixXcd inv = out.eigenvectors.inverse();
  out.left_eigenvectors = inv.adjoint();
  return out;
}

namespace {

Eigen::MatrixXd real_span(const Eigen::VectorXcd& values, const Eigen::MatrixXcd& vectors,
                          int count) {
  std::vector<Eigen::VectorXd> cols;
  for (int i = 0; i < count; ++i) {
    if (std::abs(values[i].imag()) > 0.0) {
      if (values[i].imag() < 0.0) continue;  // partner already used
      cols.push_back(vectors.col(i).real());
      cols.push_back(vectors.col(i).imag());
    } else {
      cols.push_back(vectors.col(i).real());
    }
  }
  Eigen::MatrixXd out(vectors.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = cols[c];
  return out;
}

}  // namespace

Eigen::MatrixXd SpectralData::unstable_basis() const {
  const Eigen::MatrixXd span = real_span(eigenvalues, eigenvectors, n_unstable);
  if (span.cols() == 0) return span;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
  return qr.householderQ() * Eigen::MatrixXd::Identity(span.rows(), span.cols());
}

Eigen::MatrixXd SpectralData::left_unstable_basis() const {
  return real_span(eigenvalues, left_eigenvectors, n_unstable);
}

int SpectralData::leading_stable_index() const {
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues[i].real() < -1e-6) return static_cast<int>(i);
  return -1;
}

SpectralData steady_spectrum(const ModalState& state, const Domain& dom, Subspace subspace) {
  const Eigen::MatrixXd basis = subspace_basis(subspace, dom.modes());
  SpectralData sub = eigen_analysis(basis.transpose() * jacobian(state, dom) * basis);
  const Eigen::MatrixXcd lift = basis.cast<std::complex<double>>();
  sub.eigenvectors = lift * sub.eigenvectors;
  sub.left_eigenvectors = lift * sub.left_eigenvectors;
  return sub;
}

}  // namespace ksm
