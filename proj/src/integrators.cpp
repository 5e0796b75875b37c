#include "ksm/integrators.hpp"

#include <algorithm>
#include <complex>
#include <numbers>

namespace ksm {

void IntegrationConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("integration dt must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("integration horizon must be positive");
  if (sample_stride < 1) throw std::invalid_argument("sample_stride must be >= 1");
  if (contour_points < 16) throw std::invalid_argument("contour_points must be >= 16");
}

double SampledPath::spacing() const {
  if (size() < 2) return 0.0;
  return (back_time() - front_time()) / static_cast<double>(size() - 1);
}

bool SampledPath::is_uniform(double rel_tol) const {
  if (size() < 3) return true;
  const double h = spacing();
  for (Eigen::Index i = 1; i < size(); ++i)
    if (std::abs((times[i] - times[i - 1]) - h) > rel_tol * h) return false;
  return true;
}

Eigen::Index SampledPath::interval(double t) const {
  if (size() < 2) throw OutOfRange("path has fewer than two samples");
  const double span = back_time() - front_time();
  const double slack = 1e-12 * std::max(1.0, std::abs(span));
  if (t < front_time() - slack || t > back_time() + slack)
    throw OutOfRange("t=" + std::to_string(t) + " outside [" + std::to_string(front_time()) +
                     ", " + std::to_string(back_time()) + "]");
  const double* begin = times.data();
  const double* end = begin + size();
  Eigen::Index i = std::upper_bound(begin, end, t) - begin - 1;
  return std::clamp<Eigen::Index>(i, 0, size() - 2);
}

Eigen::VectorXd SampledPath::value(double t) const {
  const Eigen::Index i = interval(t);
  const double h = times[i + 1] - times[i];
  const double s = (t - times[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * states.col(i) + (h10 * h) * derivs.col(i) + h01 * states.col(i + 1) +
         (h11 * h) * derivs.col(i + 1);
}

Eigen::VectorXd SampledPath::derivative(double t) const {
  const Eigen::Index i = interval(t);
  const double h = times[i + 1] - times[i];
  const double s = (t - times[i]) / h;
  const double s2 = s * s;
  const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
  const double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
  return d00 * states.col(i) + d10 * derivs.col(i) + d01 * states.col(i + 1) +
         d11 * derivs.col(i + 1);
}

SampledPath SampledPath::slice(Eigen::Index first, Eigen::Index last) const {
  if (first < 0 || last >= size() || first > last) throw OutOfRange("invalid path slice");
  const Eigen::Index n = last - first + 1;
  SampledPath out;
  out.times = times.segment(first, n);
  out.states = states.middleCols(first, n);
  out.derivs = derivs.middleCols(first, n);
  return out;
}

void SampledPath::check_finite(const std::string& where) const {
  for (Eigen::Index i = 0; i < size(); ++i)
    if (!states.col(i).allFinite() || !derivs.col(i).allFinite())
      throw NonFinite(where, times[i]);
}

EtdCoefficients etd_coefficients(const Eigen::VectorXd& lambda, double dt, int contour_points) {
  using C = std::complex<double>;
  const Eigen::Index n = lambda.size();
  EtdCoefficients w;
  w.e.resize(n);
  w.e2.resize(n);
  w.q.resize(n);
  w.f1.resize(n);
  w.f2.resize(n);
  w.f3.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double z0 = lambda[k] * dt;
    w.e[k] = std::exp(z0);
    w.e2[k] = std::exp(0.5 * z0);
    C q(0), f1(0), f2(0), f3(0);
    for (int j = 1; j <= contour_points; ++j) {
      const C r = std::polar(1.0, std::numbers::pi * (j - 0.5) / contour_points);
      const C z = z0 + r;
      const C ez = std::exp(z);
      const C z3 = z * z * z;
      q += (std::exp(0.5 * z) - 1.0) / z;
      f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      f2 += (2.0 + z + ez * (z - 2.0)) / z3;
      f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    // The half circle in the upper half plane plus conjugate symmetry gives the full mean.
    w.q[k] = dt * (q.real() / contour_points);
    w.f1[k] = dt * (f1.real() / contour_points);
    w.f2[k] = dt * (f2.real() / contour_points);
    w.f3[k] = dt * (f3.real() / contour_points);
  }
  return w;
}

Etdrk4::Etdrk4(const Eigen::VectorXd& linear, double dt, int contour_points)
    : linear_(linear), dt_(dt), w_(etd_coefficients(linear, dt, contour_points)) {
  if (!(dt > 0.0)) throw std::invalid_argument("ETDRK4 dt must be positive");
  if (contour_points < 16) throw std::invalid_argument("contour_points must be >= 16");
}

SampledPath integrate_ks(const ModalState& initial, const Domain& dom, const IntegrationConfig& cfg,
                         double t0) {
  const double q = dom.wavenumber();
  return etdrk4_integrate(
      initial, linear_spectrum(dom), [q](double, const ModalState& a) { return ks_nonlinear(a, q); },
      cfg, t0);
}

SampledPath integrate_ks_forced(const ModalState& initial, const Domain& dom,
                                const IntegrationConfig& cfg, const ModalForcing& forcing,
                                double t0) {
  const double q = dom.wavenumber();
  return etdrk4_integrate(
      initial, linear_spectrum(dom),
      [q, &forcing](double t, const ModalState& a) {
        ModalState n = ks_nonlinear(a, q);
        n += forcing(t);
        n[0] = 0.0;
        return n;
      },
      cfg, t0);
}

SampledPath rk4_integrate_linear(const LinearGenerator& apply, const Eigen::VectorXd& x0,
                                 double t_from, double t_to, Direction direction, double dt,
                                 int sample_stride) {
  const bool backward = t_to < t_from;
  if (backward != (direction == Direction::Backward))
    throw std::invalid_argument("rk4_integrate_linear: direction disagrees with time interval");
  return rk4_integrate(
      [&apply](double t, const Eigen::VectorXd& x, Eigen::VectorXd& out) { apply(t, x, out); }, x0,
      t_from, t_to, dt, sample_stride);
}

SampledPath rk4_integrate_linear(const std::function<Eigen::MatrixXd(double)>& generator,
                                 const Eigen::VectorXd& x0, double t_from, double t_to,
                                 Direction direction, double dt, int sample_stride) {
  return rk4_integrate_linear(
      [&generator](double t, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        out.noalias() = generator(t) * x;
      },
      x0, t_from, t_to, direction, dt, sample_stride);
}

}  // namespace ksm
