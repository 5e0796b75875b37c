#include "doctest.h"

#include "ksm/melnikov.hpp"
#include "ksm/planar.hpp"

#include <cmath>
#include <numbers>

using namespace ksm;

namespace {

const PlanarSystem& sys() {
  static const PlanarSystem s = duffing();
  return s;
}

const OrbitTrajectory& orbit() {
  static const OrbitTrajectory o = analytic_orbit(sys(), analytic_half_width(sys(), 1e-6), 0.01);
  return o;
}

const AdjointTrajectory& adj() {
  static const AdjointTrajectory a = planar_adjoint_solve(sys(), orbit());
  return a;
}

const Eigen::Vector2d kG(0.0, 1.0);

ForcingField cosine(const Eigen::VectorXd& g, double omega) {
  return [g, omega](double t) -> Eigen::VectorXd { return g * std::cos(omega * t); };
}

// psi(t) = (exp(-t^2), 0) on [-10, 10]
AdjointTrajectory gaussian_adjoint() {
  AdjointTrajectory a;
  const Eigen::Index n = 2001;
  a.path.times = Eigen::VectorXd::LinSpaced(n, -10.0, 10.0);
  a.path.states = Eigen::MatrixXd::Zero(2, n);
  a.path.derivs = Eigen::MatrixXd::Zero(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = a.path.times[i];
    a.path.states(0, i) = std::exp(-t * t);
    a.path.derivs(0, i) = -2.0 * t * std::exp(-t * t);
  }
  return a;
}

}  // namespace

TEST_CASE("simpson is exact for cubics with even and odd interval counts") {
  for (int n : {2, 3, 4, 5, 10, 11}) {
    const double h = 2.0 / n;
    Eigen::VectorXd v(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double x = -1.0 + h * i;
      v[i] = 3 * x * x * x - x * x + 2 * x + 1;
    }
    CHECK(simpson(v, h) == doctest::Approx(2.0 - 2.0 / 3.0).epsilon(1e-13));
  }
}

TEST_CASE("zero forcing gives zero and the functional is linear in the forcing") {
  const ForcingField zero = [](double) -> Eigen::VectorXd { return Eigen::Vector2d::Zero(); };
  CHECK(melnikov_general(adj(), zero, 0.3) == 0.0);

  const ForcingField f1 = cosine(kG, 1.0);
  const ForcingField f2 = [](double t) -> Eigen::VectorXd { return Eigen::Vector2d(std::sin(0.5 * t), std::cos(2 * t)); };
  const ForcingField mix = [&](double t) -> Eigen::VectorXd { return 2.5 * f1(t) - 0.75 * f2(t); };
  const double m1 = melnikov_general(adj(), f1, 0.7), m2 = melnikov_general(adj(), f2, 0.7);
  CHECK(melnikov_general(adj(), mix, 0.7) == doctest::Approx(2.5 * m1 - 0.75 * m2).epsilon(1e-12));
}

TEST_CASE("harmonic decomposition matches direct quadrature at every phase") {
  for (double omega : {0.5, 1.0, 1.7}) {
    const MelnikovResult r = melnikov_periodic(adj(), kG, omega);
    REQUIRE(r.amplitude > 0.0);
    for (int i = 0; i < 16; ++i) {
      const double t0 = 2.0 * std::numbers::pi / omega * i / 16.0;
      CHECK(std::abs(melnikov_general(adj(), cosine(kG, omega), t0) - r.evaluate(t0)) <= 1e-8 * r.amplitude);
    }
    CHECK(harmonic_residual(r) <= 1e-8 * r.amplitude);
    CHECK(r.samples.size() == 128);
  }
}

TEST_CASE("periodic forcing and time shifts act on t0") {
  const double omega = 1.3, period = 2.0 * std::numbers::pi / omega;
  const ForcingField f = cosine(kG, omega);
  CHECK(melnikov_general(adj(), f, 0.4 + period) == doctest::Approx(melnikov_general(adj(), f, 0.4)).epsilon(1e-9));

  // moving the orbit clock by s moves the Melnikov function by s
  AdjointTrajectory shifted = adj();
  shifted.path.shift_time(0.25);
  CHECK(melnikov_general(shifted, f, 0.4) == doctest::Approx(melnikov_general(adj(), f, 0.65)).epsilon(1e-12));
}

TEST_CASE("constant forcing has no sine part") {
  const MelnikovResult r = melnikov_periodic(adj(), kG, 0.0);
  CHECK(r.B == 0.0);
  CHECK(r.zeros.empty());
  CHECK_FALSE(transversality_check(r));
  CHECK(r.A == doctest::Approx(melnikov_general(adj(), cosine(kG, 0.0), 0.0)).epsilon(1e-12));
}

TEST_CASE("forcing orthogonal to the adjoint has no zeros") {
  const AdjointTrajectory a = gaussian_adjoint();
  const MelnikovResult r = melnikov_periodic(a, kG, 1.0);
  CHECK(r.amplitude == 0.0);
  CHECK(r.zeros.empty());
  CHECK_FALSE(transversality_check(r));
  for (const auto& s : r.samples) CHECK(s.value == 0.0);

  // along the adjoint the coefficients are known in closed form
  const MelnikovResult g = melnikov_periodic(a, Eigen::Vector2d(1.0, 0.0), 2.0);
  CHECK(g.A == doctest::Approx(std::sqrt(std::numbers::pi) * std::exp(-1.0)).epsilon(1e-10));
  CHECK(std::abs(g.B) <= 1e-14);
}

TEST_CASE("harmonic zeros and slopes") {
  const auto z = harmonic_zeros(1.0, 0.0, 1.0);
  REQUIRE(z.size() == 2);
  CHECK(z[0].t0 == doctest::Approx(std::numbers::pi / 2));
  CHECK(z[1].t0 == doctest::Approx(3 * std::numbers::pi / 2));
  CHECK(z[0].slope == doctest::Approx(-1.0));
  CHECK(z[1].slope == doctest::Approx(1.0));

  const auto w = harmonic_zeros(-0.3, 0.8, 2.5);
  REQUIRE(w.size() == 2);
  for (const auto& zero : w) {
    CHECK(std::abs(-0.3 * std::cos(2.5 * zero.t0) + 0.8 * std::sin(2.5 * zero.t0)) <= 1e-14);
    CHECK(zero.t0 >= 0.0);
    CHECK(zero.t0 < 2 * std::numbers::pi / 2.5);
  }
  CHECK(w[0].slope * w[1].slope < 0.0);
  CHECK(harmonic_zeros(0.0, 0.0, 1.0).empty());
}

TEST_CASE("transversality of the Duffing forcing") {
  const MelnikovResult r = melnikov_periodic(adj(), kG, 1.0);
  CHECK(transversality_check(r));
  REQUIRE(r.zeros.size() == 2);
  // <psi, G> is odd in t, so M is a pure sine: zeros at 0 and pi
  const double first = std::min(r.zeros[0].t0, 2 * std::numbers::pi - r.zeros[1].t0);
  CHECK(std::abs(first) <= 1e-5);
  const double mid = std::abs(r.zeros[0].t0 - std::numbers::pi) < 1.0 ? r.zeros[0].t0 : r.zeros[1].t0;
  CHECK(mid == doctest::Approx(std::numbers::pi).epsilon(1e-6));
  CHECK(std::abs(r.A) <= 1e-5 * r.amplitude);
}

TEST_CASE("forcing along the orbit tangent is invisible") {
  const OrbitTrajectory& o = orbit();
  const ForcingField tangent = [&](double t) -> Eigen::VectorXd { return o.path.derivative(std::clamp(t, o.path.front_time(), o.path.back_time())); };
  CHECK(std::abs(melnikov_general(adj(), tangent, 0.0)) <= 1e-8);
}

TEST_CASE("quadrature window") {
  const AdjointTrajectory a = gaussian_adjoint();
  const ForcingField one = [](double) -> Eigen::VectorXd { return Eigen::Vector2d(1.0, 0.0); };
  CHECK(melnikov_general(a, one, 0.0, TimeWindow::symmetric(3.0)) == doctest::Approx(std::sqrt(std::numbers::pi) * std::erf(3.0)).epsilon(1e-8));
  CHECK(melnikov_general(a, one, 0.0, {20.0, 30.0}) == 0.0);
}

TEST_CASE("frequency grid and sweep") {
  const auto grid = frequency_grid(0.0, 2.0, 0.02);
  CHECK(grid.size() == 101);
  CHECK(grid.back() == doctest::Approx(2.0));
  CHECK_THROWS_AS(frequency_grid(1.0, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(frequency_grid(0.0, 1.0, 0.0), std::invalid_argument);

  const auto sweep = frequency_sweep(adj(), kG, {0.5, 1.0});
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].samples.empty());
  CHECK(sweep[1].A == doctest::Approx(melnikov_periodic(adj(), kG, 1.0).A).epsilon(1e-14));
  CHECK_THROWS_AS(frequency_sweep(adj(), kG, {}), std::invalid_argument);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(melnikov_periodic(adj(), kG, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(melnikov_periodic(adj(), Eigen::Vector3d::Zero(), 1.0), std::invalid_argument);
  const Domain dom(22.0, 32);
  const ForcingProfile p = sine_profile(dom, 2);
  CHECK(p.modal_g[im_slot(2)] == -0.5);
  CHECK(p.modal_g.cwiseAbs().sum() == 0.5);
  CHECK_THROWS_AS(sine_profile(dom, 33), std::invalid_argument);
}
