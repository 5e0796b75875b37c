#pragma once

#include "ksm/adjoint.hpp"
#include "ksm/spectral.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ksm {

/// Time-dependent forcing in real coordinates, evaluated at absolute time.
using ForcingField = std::function<Eigen::VectorXd(double t)>;

/// Quadrature restricted to orbit times in [lo, hi].
struct TimeWindow {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static TimeWindow symmetric(double half_width) { return {-half_width, half_width}; }
};

/// Composite Simpson on uniform samples; odd interval counts finish with a 3/8 panel.
double simpson(const Eigen::Ref<const Eigen::VectorXd>& values, double h);

/// M(t0) = int <psi(t), F(t + t0)> dt over the adjoint samples inside the window.
double melnikov_general(const AdjointTrajectory& adj, const ForcingField& forcing, double t0,
                        const TimeWindow& window = {});

struct ForcingProfile {
  /// Real coordinates of the Fourier coefficients of G(x).
  Eigen::VectorXd modal_g;
  std::string description;
};

/// G(x) = sin(m q x), i.e. a_m = -i/2.
ForcingProfile sine_profile(const Domain& dom, int mode = 1);

struct MelnikovPoint {
  double t0 = 0.0;
  double value = 0.0;
};

struct MelnikovZero {
  double t0 = 0.0;
  double slope = 0.0;
};

struct MelnikovResult {
  double omega = 0.0;
  double A = 0.0;
  double B = 0.0;
  double amplitude = 0.0;
  /// M(t0) over one period, each by its own quadrature.
  std::vector<MelnikovPoint> samples;
  /// Zeros of A cos + B sin in [0, 2 pi / omega), ascending.
  std::vector<MelnikovZero> zeros;

  double evaluate(double t0) const;
};

struct MelnikovOptions {
  int phase_samples = 128;
  TimeWindow window;
  /// Amplitudes at or below this count as identically zero.
  double zero_tol = 1e-12;
};

/// A = int cos(w t) h(t) dt, B = -int sin(w t) h(t) dt with h = <psi, G>; for
/// F(t) = G cos(w t) this makes M(t0) = A cos(w t0) + B sin(w t0).
MelnikovResult melnikov_periodic(const AdjointTrajectory& adj, const Eigen::VectorXd& g, double omega,
                                 const MelnikovOptions& opts = {});

/// Zeros and slopes of A cos(w t0) + B sin(w t0) over one period.
std::vector<MelnikovZero> harmonic_zeros(double A, double B, double omega, double zero_tol = 1e-12);

/// max |M(t0) - (A cos + B sin)| over the directly integrated samples.
double harmonic_residual(const MelnikovResult& r);

/// One result per frequency; phase samples are only kept when `keep_samples`.
std::vector<MelnikovResult> frequency_sweep(const AdjointTrajectory& adj, const Eigen::VectorXd& g,
                                            const std::vector<double>& omegas,
                                            const MelnikovOptions& opts = {}, bool keep_samples = false);

/// omega_min, omega_min + step, ..., up to omega_max (inclusive within rounding).
std::vector<double> frequency_grid(double omega_min, double omega_max, double step);

/// Simple transverse zeros exist: amplitude above tolerance and a genuine oscillation (omega > 0).
bool transversality_check(const MelnikovResult& r, double tol = 1e-12);

}  // namespace ksm
