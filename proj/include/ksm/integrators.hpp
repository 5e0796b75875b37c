#pragma once

#include "ksm/errors.hpp"
#include "ksm/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>

namespace ksm {

struct IntegrationConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  int sample_stride = 1;
  /// Points on the unit circle used to evaluate the ETD weights.
  int contour_points = 32;

  void validate() const;
  long steps() const { return std::lround(horizon / dt); }
};

/// Time samples of a trajectory with the vector field evaluated at each sample,
/// stored column-wise. Times are strictly increasing.
struct SampledPath {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;
  Eigen::MatrixXd derivs;

  Eigen::Index size() const { return times.size(); }
  Eigen::Index dim() const { return states.rows(); }
  double front_time() const { return times[0]; }
  double back_time() const { return times[times.size() - 1]; }
  /// Mean sample spacing; exact for uniformly sampled paths.
  double spacing() const;
  bool is_uniform(double rel_tol = 1e-9) const;

  /// Cubic Hermite interpolation from states and derivs. Throws OutOfRange.
  Eigen::VectorXd value(double t) const;
  Eigen::VectorXd derivative(double t) const;

  /// Samples [first, last] inclusive.
  SampledPath slice(Eigen::Index first, Eigen::Index last) const;
  void shift_time(double offset) { times.array() += offset; }
  void check_finite(const std::string& where) const;

 private:
  Eigen::Index interval(double t) const;
};

/// Exponential time-differencing weights for a diagonal linear part,
/// Cox-Matthews ETDRK4 as written by Kassam and Trefethen.
struct EtdCoefficients {
  Eigen::VectorXd e;   // exp(z)
  Eigen::VectorXd e2;  // exp(z / 2)
  Eigen::VectorXd q;   // dt (exp(z/2) - 1) / z
  Eigen::VectorXd f1;  // dt (-4 - z + e^z (4 - 3z + z^2)) / z^3
  Eigen::VectorXd f2;  // dt (2 + z + e^z (z - 2)) / z^3
  Eigen::VectorXd f3;  // dt (-4 - 3z - z^2 + e^z (4 - z)) / z^3
};

/// Weights for z = lambda dt, each averaged over `contour_points` points of the
/// unit circle centred at z so that small |z| does not cancel.
EtdCoefficients etd_coefficients(const Eigen::VectorXd& lambda, double dt, int contour_points);

class Etdrk4 {
 public:
  Etdrk4(const Eigen::VectorXd& linear, double dt, int contour_points = 32);

  double dt() const { return dt_; }
  const Eigen::VectorXd& linear() const { return linear_; }
  const EtdCoefficients& coefficients() const { return w_; }

  /// One step from t. `nonlinear(t, a)` returns the non-diagonal part of the field;
  /// `n_start` is its value at (t, a) when the caller already has it.
  template <class Nonlinear>
  void step(double t, ModalState& a, Nonlinear&& nonlinear, const ModalState& n_start) const {
    const double h = dt_;
    const ModalState a_half = mul(w_.e2, a) + mul(w_.q, n_start);
    const ModalState n_a = nonlinear(t + 0.5 * h, a_half);
    const ModalState b_half = mul(w_.e2, a) + mul(w_.q, n_a);
    const ModalState n_b = nonlinear(t + 0.5 * h, b_half);
    const ModalState c_full = mul(w_.e2, a_half) + mul(w_.q, 2.0 * n_b - n_start);
    const ModalState n_c = nonlinear(t + h, c_full);
    a = mul(w_.e, a) + mul(w_.f1, n_start) + 2.0 * mul(w_.f2, n_a + n_b) + mul(w_.f3, n_c);
  }

  template <class Nonlinear>
  void step(double t, ModalState& a, Nonlinear&& nonlinear) const {
    step(t, a, nonlinear, nonlinear(t, a));
  }

 private:
  static ModalState mul(const Eigen::VectorXd& w, const ModalState& a) {
    return (w.cast<std::complex<double>>().array() * a.array()).matrix();
  }

  Eigen::VectorXd linear_;
  double dt_;
  EtdCoefficients w_;
};

/// Integrates a_t = diag(linear) a + nonlinear(t, a) from t0 over cfg.horizon.
/// Samples (in real coordinates) every cfg.sample_stride steps, always including
/// both endpoints. Throws NonFinite on blow-up.
template <class Nonlinear>
SampledPath etdrk4_integrate(const ModalState& initial, const Eigen::VectorXd& linear,
                             Nonlinear&& nonlinear, const IntegrationConfig& cfg, double t0 = 0.0) {
  cfg.validate();
  const Etdrk4 stepper(linear, cfg.dt, cfg.contour_points);
  const long steps = cfg.steps();
  const long samples = steps / cfg.sample_stride + 1 + (steps % cfg.sample_stride != 0 ? 1 : 0);
  const Eigen::Index dim = 2 * (initial.size() - 1);
  const Eigen::VectorXcd lin_c = linear.cast<std::complex<double>>();

  SampledPath path;
  path.times.resize(samples);
  path.states.resize(dim, samples);
  path.derivs.resize(dim, samples);

  ModalState a = initial;
  Eigen::Index col = 0;
  auto record = [&](double t, const ModalState& n_now) {
    path.times[col] = t;
    path.states.col(col) = to_real(a);
    const ModalState field = (lin_c.array() * a.array()).matrix() + n_now;
    path.derivs.col(col) = to_real(field);
    ++col;
  };

  for (long i = 0; i < steps; ++i) {
    const double t = t0 + static_cast<double>(i) * cfg.dt;
    const ModalState n_start = nonlinear(t, a);
    if (i % cfg.sample_stride == 0) record(t, n_start);
    stepper.step(t, a, nonlinear, n_start);
    if (!a.allFinite()) throw NonFinite("etdrk4_integrate", t + cfg.dt);
  }
  const double t_end = t0 + static_cast<double>(steps) * cfg.dt;
  record(t_end, nonlinear(t_end, a));
  return path;
}

/// KS flow with the stored quadratic term, optionally with an additive
/// time-dependent modal forcing.
SampledPath integrate_ks(const ModalState& initial, const Domain& dom, const IntegrationConfig& cfg,
                         double t0 = 0.0);

using ModalForcing = std::function<ModalState(double t)>;
SampledPath integrate_ks_forced(const ModalState& initial, const Domain& dom,
                                const IntegrationConfig& cfg, const ModalForcing& forcing,
                                double t0 = 0.0);

/// Classical fourth-order Runge-Kutta for x' = f(t, x) from t_start to t_end
/// (t_end < t_start integrates backward). The returned path has increasing times.
template <class Field>
SampledPath rk4_integrate(Field&& f, const Eigen::VectorXd& x0, double t_start, double t_end,
                          double dt, int sample_stride = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4: dt must be positive");
  if (sample_stride < 1) throw std::invalid_argument("rk4: sample_stride must be >= 1");
  const long steps = std::max(1L, std::lround(std::abs(t_end - t_start) / dt));
  const double h = (t_end - t_start) / static_cast<double>(steps);
  const long samples = steps / sample_stride + 1 + (steps % sample_stride != 0 ? 1 : 0);
  const Eigen::Index dim = x0.size();

  SampledPath path;
  path.times.resize(samples);
  path.states.resize(dim, samples);
  path.derivs.resize(dim, samples);

  Eigen::VectorXd x = x0, k1(dim), k2(dim), k3(dim), k4(dim);
  Eigen::Index col = 0;
  auto record = [&](double t, const Eigen::VectorXd& fx) {
    path.times[col] = t;
    path.states.col(col) = x;
    path.derivs.col(col) = fx;
    ++col;
  };
  for (long i = 0; i < steps; ++i) {
    const double t = t_start + static_cast<double>(i) * h;
    f(t, x, k1);
    if (i % sample_stride == 0) record(t, k1);
    f(t + 0.5 * h, x + 0.5 * h * k1, k2);
    f(t + 0.5 * h, x + 0.5 * h * k2, k3);
    f(t + h, x + h * k3, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw NonFinite("rk4_integrate", t + h);
  }
  f(t_end, x, k1);
  record(t_end, k1);

  if (h < 0.0) {
    path.times.reverseInPlace();
    path.states = path.states.rowwise().reverse().eval();
    path.derivs = path.derivs.rowwise().reverse().eval();
  }
  return path;
}

enum class Direction { Forward, Backward };

/// x' = A(t) x with A applied matrix-free: `apply(t, x, out)` sets out = A(t) x.
using LinearGenerator =
    std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& out)>;

/// Integrates from `t_from` towards `t_to`; `direction` must agree with their order.
SampledPath rk4_integrate_linear(const LinearGenerator& apply, const Eigen::VectorXd& x0,
                                 double t_from, double t_to, Direction direction, double dt,
                                 int sample_stride = 1);

SampledPath rk4_integrate_linear(const std::function<Eigen::MatrixXd(double)>& generator,
                                 const Eigen::VectorXd& x0, double t_from, double t_to,
                                 Direction direction, double dt, int sample_stride = 1);

}  // namespace ksm
