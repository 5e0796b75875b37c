#include "doctest.h"
#include "test_support.hpp"

#include "ksm/equilibria.hpp"
#include "ksm/integrators.hpp"

#include <algorithm>
#include <cmath>

using namespace ksm;
using C = std::complex<double>;

namespace {

const Domain kDom(22.0, 32);

const SteadyState& two_cell() {
  static const SteadyState s = seed_steady(kDom, 0.1, 50.0, 1e-3, NewtonOptions{});
  return s;
}

}  // namespace

TEST_CASE("jacobian matches central differences") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const ModalState a = testing::random_state(kDom, rng, 1.0, 0.15);
    Eigen::VectorXd w = testing::random_vector(64, rng);
    w.normalize();
    const double h = 1e-6;
    const Eigen::VectorXd x = to_real(a);
    const Eigen::VectorXd fd = (to_real(ks_rhs(from_real(Eigen::VectorXd(x + h * w)), kDom)) -
                                to_real(ks_rhs(from_real(Eigen::VectorXd(x - h * w)), kDom))) /
                               (2 * h);
    CHECK((jacobian(a, kDom) * w - fd).norm() <= 1e-6);
  }
}

TEST_CASE("jacobian transpose is the adjoint field") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const ModalState u = testing::random_state(kDom, rng);
    const ModalState psi = testing::random_state(kDom, rng);
    const Eigen::VectorXd dense = -jacobian(u, kDom).transpose() * to_real(psi);
    const Eigen::VectorXd free = to_real(ks_adjoint_rhs(u, psi, kDom.wavenumber()));
    CHECK((dense - free).norm() <= 1e-12 * dense.norm());
  }
}

TEST_CASE("jacobian keeps the odd subspace") {
  std::mt19937_64 rng(14);
  const ModalState a = testing::random_state(kDom, rng, 1.0, 0.2, /*odd=*/true);
  const Eigen::MatrixXd jac = jacobian(a, kDom);
  for (int k = 1; k <= 32; ++k)
    for (int j = 1; j <= 32; ++j) CHECK(jac(re_slot(k), im_slot(j)) == 0.0);
}

TEST_CASE("jacobian at the origin is the dispersion relation") {
  const Eigen::MatrixXd jac = jacobian(zero_state(kDom), kDom);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(64, 64);
  for (int k = 1; k <= 32; ++k) {
    expect(re_slot(k), re_slot(k)) = linear_growth_rate(k, kDom);
    expect(im_slot(k), im_slot(k)) = linear_growth_rate(k, kDom);
  }
  CHECK((jac - expect).norm() == 0.0);

  const SpectralData full = steady_spectrum(zero_state(kDom), kDom, Subspace::Full);
  CHECK(full.n_unstable == 6);
  for (int k = 1; k <= 32; ++k) {
    // two copies of each rate; search for the closest eigenvalue
    double best = 1e300;
    for (Eigen::Index i = 0; i < full.eigenvalues.size(); ++i)
      best = std::min(best, std::abs(full.eigenvalues[i] - linear_growth_rate(k, kDom)));
    CHECK(best <= 1e-10);
  }
  const SpectralData odd = steady_spectrum(zero_state(kDom), kDom, Subspace::Odd);
  CHECK(odd.n_unstable == 3);
  CHECK(odd.eigenvectors.rows() == 64);
}

TEST_CASE("eigen analysis of simple matrices") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
  d.diagonal() << -2.0, 0.5, 3.0, -0.1;
  const SpectralData sd = eigen_analysis(d);
  CHECK(sd.eigenvalues[0] == C(3.0));
  CHECK(sd.eigenvalues[1] == C(0.5));
  CHECK(sd.eigenvalues[2] == C(-0.1));
  CHECK(sd.eigenvalues[3] == C(-2.0));
  CHECK(sd.n_unstable == 2);
  CHECK(sd.leading_stable_index() == 2);

  std::mt19937_64 rng(15);
  Eigen::MatrixXd m(6, 6);
  for (auto& v : m.reshaped()) v = std::normal_distribution<double>()(rng);
  const Eigen::MatrixXd sym = m + m.transpose();
  const SpectralData ss = eigen_analysis(sym);
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(std::abs(ss.eigenvalues[i].imag()) <= 1e-12);
    const Eigen::VectorXcd v = ss.eigenvectors.col(i);
    CHECK((sym * v - ss.eigenvalues[i] * v).norm() <= 1e-8 * v.norm());
    if (i > 0) CHECK(ss.eigenvalues[i].real() <= ss.eigenvalues[i - 1].real());
  }
  CHECK_THROWS_AS(eigen_analysis(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("left and right eigenvectors are biorthonormal") {
  std::mt19937_64 rng(16);
  const ModalState a = testing::random_state(kDom, rng, 0.8);
  const SpectralData sd = eigen_analysis(jacobian(a, kDom));
  const Eigen::MatrixXcd gram = sd.left_eigenvectors.adjoint() * sd.eigenvectors;
  CHECK((gram - Eigen::MatrixXcd::Identity(64, 64)).norm() <= 1e-8);
  const Eigen::MatrixXd jac = jacobian(a, kDom);
  for (Eigen::Index i = 0; i < 64; ++i) {
    const Eigen::VectorXcd w = sd.left_eigenvectors.col(i);
    CHECK((w.adjoint() * jac - sd.eigenvalues[i] * w.adjoint()).norm() <= 1e-8 * w.norm());
    // complex eigenvalues of a real matrix come in conjugate pairs
    if (std::abs(sd.eigenvalues[i].imag()) > 1e-9) {
      double best = 1e300;
      for (Eigen::Index j = 0; j < 64; ++j)
        best = std::min(best, std::abs(sd.eigenvalues[j] - std::conj(sd.eigenvalues[i])));
      CHECK(best <= 1e-8);
    }
  }
}

TEST_CASE("Newton from exact and invalid guesses") {
  const SteadyState zero = newton_steady(zero_state(kDom), kDom, NewtonOptions{});
  CHECK(zero.newton_iterations <= 1);
  CHECK(zero.state.norm() == 0.0);

  ModalState bad = zero_state(kDom);
  bad[0] = 0.3;
  CHECK_THROWS_AS(newton_steady(bad, kDom, NewtonOptions{}), std::invalid_argument);

  NewtonOptions no_tol;
  no_tol.tol = 0.0;
  CHECK_THROWS_AS(newton_steady(zero_state(kDom), kDom, no_tol), std::invalid_argument);

  ModalState mixed = zero_state(kDom);
  mixed[1] = C(0.2, -0.2);
  CHECK_THROWS_AS(newton_steady(mixed, kDom, NewtonOptions{}), std::invalid_argument);

  NewtonOptions tight;
  tight.max_iter = 1;
  ModalState far = zero_state(kDom);
  far[2] = C(0, 2.0);
  far[5] = C(0, -1.0);
  CHECK_THROWS_AS(newton_steady(far, kDom, tight), NoConvergence);
}

TEST_CASE("seeded steady state is the two-cell equilibrium") {
  const SteadyState& s = two_cell();
  CHECK(s.residual_norm <= 1e-8);
  CHECK(subspace_defect(to_real(s.state), Subspace::Odd) == 0.0);
  const ModePair p = project_modes(s.state);
  // regression baseline from the first converged run
  CHECK(std::abs(p.mode1) <= 1e-10);
  CHECK(p.mode2 == doctest::Approx(-1.1198).epsilon(1e-4));
  CHECK(-2 * s.state[4].imag() == doctest::Approx(-0.6967).epsilon(1e-3));

  // stable inside the odd subspace, an unstable spiral in the full space
  CHECK(steady_spectrum(s.state, kDom, Subspace::Odd).n_unstable == 0);
  const SpectralData full = steady_spectrum(s.state, kDom, Subspace::Full);
  CHECK(full.n_unstable == 2);
  CHECK(full.eigenvalues[0].real() == doctest::Approx(0.1390).epsilon(1e-3));
  CHECK(std::abs(full.eigenvalues[0].imag()) == doctest::Approx(0.2384).epsilon(1e-3));
  const int ls = full.leading_stable_index();
  REQUIRE(ls >= 0);
  CHECK(full.eigenvalues[ls].real() == doctest::Approx(-0.0840).epsilon(1e-3));
  const Eigen::MatrixXd basis = full.unstable_basis();
  CHECK(basis.cols() == 2);
  CHECK((basis.transpose() * basis - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("Newton converges quadratically") {
  const std::vector<double>& h = two_cell().residual_history;
  // last Newton step that crossed the tolerance (polishing steps follow it)
  const auto crossed = std::find_if(h.begin(), h.end(), [](double r) { return r <= 1e-8; });
  REQUIRE(crossed != h.end());
  const auto idx = std::distance(h.begin(), crossed);
  REQUIRE(idx >= 2);
  CHECK(h[idx - 2] <= 1e-2);
  CHECK(h[idx] <= 1e-4 * h[idx - 2]);
}

TEST_CASE("translation mode of a cellular steady state") {
  const ModalState& us = two_cell().state;
  const SpectralData full = steady_spectrum(us, kDom, Subspace::Full);
  ModalState dx = zero_state(kDom);
  for (int k = 1; k <= 32; ++k) dx[k] = C(0, k * kDom.wavenumber()) * us[k];
  const Eigen::VectorXd tangent = to_real(dx).normalized();
  int found = 0;
  for (Eigen::Index i = 0; i < full.eigenvalues.size(); ++i) {
    if (std::abs(full.eigenvalues[i]) > 1e-6) continue;
    ++found;
    Eigen::VectorXd v = full.eigenvectors.col(i).real();
    if (v.norm() < 1e-8) v = full.eigenvectors.col(i).imag();
    CHECK(std::abs(v.normalized().dot(tangent)) >= 1 - 1e-8);
  }
  CHECK(found == 1);
  // Newton in the full space copes with the singular direction
  NewtonOptions opts;
  opts.subspace = Subspace::Full;
  ModalState guess = us;
  guess[3] += C(1e-3, 0.0);
  const SteadyState s = newton_steady(guess, kDom, opts);
  CHECK(s.residual_norm <= 1e-8);
}

TEST_CASE("steady state does not drift under integration") {
  const ModalState& us = two_cell().state;
  IntegrationConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 10.0;
  cfg.sample_stride = 500;
  const SampledPath p = integrate_ks(us, kDom, cfg);
  const ModePair p0 = project_modes(us);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const ModePair pi = project_modes(from_real(Eigen::VectorXd(p.states.col(i))));
    CHECK(std::abs(pi.mode1 - p0.mode1) < 1e-8);
    CHECK(std::abs(pi.mode2 - p0.mode2) < 1e-8);
  }
}
