#pragma once

#include "ksm/equilibria.hpp"
#include "ksm/homoclinic.hpp"

#include <Eigen/Dense>

#include <functional>

namespace ksm {

/// out = -J(t)^T psi along the orbit.
using AdjointField = std::function<void(double t, const Eigen::VectorXd& psi, Eigen::VectorXd& out)>;

struct AdjointConfig {
  /// Largest RK4 step; the backward sweep amplifies truncation error along the
  /// growing solutions, so this matters more than stability for mild systems.
  double dt = 1e-3;
  /// Bound on |eigenvalues| of J along the orbit; sets the RK4 substep so that
  /// h * spectral_bound stays inside the stability interval.
  double spectral_bound = 0.0;
  /// Largest admissible h * spectral_bound (RK4's real stability limit is about 2.785).
  double stability_margin = 2.5;
  /// psi(0) below degeneracy_tol * max |psi| means the bounded direction was lost.
  double degeneracy_tol = 1e-8;
};

struct AdjointTrajectory {
  /// psi(t) sampled at the orbit sample times, |psi(0)| = 1.
  SampledPath path;
  /// <psi(0), x_h'(0)>; zero for an exact homoclinic orbit.
  double pairing = 0.0;
  /// max_t |<psi(t), x_h'(t)> - <psi(0), x_h'(0)>| / |x_h'(0)|.
  double pairing_drift = 0.0;
  /// |P_u psi(t_start)| / |psi(t_start)|: unbounded component left at the start of the orbit.
  double start_defect = 0.0;
  /// max(|psi(t_start)|, |psi(t_end)|) / max_t |psi(t)|.
  double endpoint_ratio = 0.0;
  int substeps = 1;
};

/// Bounded solution of psi' = -J(t)^T psi along a uniformly sampled orbit.
/// Starts at the end of the orbit in the left unstable subspace of J(x_s),
/// integrates backward with RK4 and, for a multi-dimensional unstable subspace,
/// picks the combination with the least unstable component at the start of the
/// orbit. Scaled to |psi(0)| = 1 with <psi(0), x_h(0) - x_s> >= 0.
/// Throws NonFinite, DegenerateAdjoint, UnstableSubspaceEmpty.
AdjointTrajectory adjoint_solve(const OrbitTrajectory& orbit, const AdjointField& field,
                                const SpectralData& steady_spectrum, const AdjointConfig& cfg);

/// Pairing diagnostics of psi against the orbit tangent (fills pairing, pairing_drift).
void measure_pairing(AdjointTrajectory& adj, const OrbitTrajectory& orbit);

// Kuramoto-Sivashinsky specialisation

/// jacobian(orbit_state(orbit, t)); ClampToSteady returns J(x_s) beyond the ends.
Eigen::MatrixXd jacobian_on_orbit(const OrbitTrajectory& orbit, const Domain& dom, double t,
                                  Extrapolation mode = Extrapolation::Throw);

AdjointField ks_adjoint_field(const OrbitTrajectory& orbit, const Domain& dom);

/// Spectrum of J(x_s) in the full real coordinates with a matching spectral bound.
AdjointTrajectory ks_adjoint_solve(const OrbitTrajectory& orbit, const Domain& dom,
                                   double degeneracy_tol = 1e-8);

}  // namespace ksm
