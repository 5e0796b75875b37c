#pragma once

#include "ksm/errors.hpp"
#include "ksm/spectral.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ksm {

/// Dense Jacobian of ks_rhs in real coordinates (2N x 2N): the Galerkin form of
/// v -> -v_xx - v_xxxx - (u v)_x.
Eigen::MatrixXd jacobian(const ModalState& state, const Domain& dom);

struct SteadyState {
  ModalState state;
  double residual_norm = 0.0;
  int newton_iterations = 0;
  /// Residual norm before each iteration and after the last one.
  std::vector<double> residual_history;
};

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 50;
  int max_halvings = 30;
  /// Extra full steps taken after reaching tol while the residual keeps falling, so
  /// that near-zero eigenvalues (translation mode) land well below the unstable threshold.
  int polish_iterations = 2;
  Subspace subspace = Subspace::Odd;
};

/// Damped Newton on ks_rhs = 0 inside `subspace`, halving the step until the
/// residual norm decreases. A rank-deficient Jacobian (translation mode in the
/// full space) is handled with a minimum-norm step.
/// Throws NoConvergence, SingularJacobian, std::invalid_argument (a_0 != 0).
SteadyState newton_steady(const ModalState& guess, const Domain& dom, const NewtonOptions& opts);

/// Integrates amplitude * sin(q x) for `settle_time`, then runs Newton from the endpoint.
SteadyState seed_steady(const Domain& dom, double amplitude, double settle_time, double dt,
                        const NewtonOptions& opts);

struct SpectralData {
  /// Sorted by descending real part.
  Eigen::VectorXcd eigenvalues;
  /// Right eigenvectors, columns in real coordinates of the analysed space.
  Eigen::MatrixXcd eigenvectors;
  /// Left eigenvectors as columns: left.col(i).adjoint() * J = lambda_i * left.col(i).adjoint(),
  /// scaled so that left.col(i).adjoint() * eigenvectors.col(i) = 1.
  Eigen::MatrixXcd left_eigenvectors;
  int n_unstable = 0;

  /// Real orthonormal basis of the span of eigenvectors with Re lambda > threshold.
  Eigen::MatrixXd unstable_basis() const;
  /// Real basis (not orthonormalised) of the left unstable subspace.
  Eigen::MatrixXd left_unstable_basis() const;
  /// Index of the stable eigenvalue with the largest real part, -1 if none.
  int leading_stable_index() const;
};

inline constexpr double kUnstableThreshold = 1e-10;

/// Full dense eigendecomposition of a real square matrix.
SpectralData eigen_analysis(const Eigen::MatrixXd& jac);

/// Spectrum of the Jacobian restricted to `subspace`, eigenvectors lifted back to
/// the full 2N real coordinates.
SpectralData steady_spectrum(const ModalState& state, const Domain& dom, Subspace subspace);

}  // namespace ksm
