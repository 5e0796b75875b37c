#pragma once

#include "ksm/equilibria.hpp"
#include "ksm/errors.hpp"
#include "ksm/integrators.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace ksm {

/// Integrates an autonomous flow in real coordinates from x0 over `horizon`,
/// sampled uniformly with derivative samples.
using FlowIntegrator = std::function<SampledPath(const Eigen::VectorXd& x0, double horizon)>;

struct ShootingConfig {
  double horizon = 200.0;
  double dt = 1e-3;
  int sample_stride = 10;
  double delta_min = 1e-4;
  double delta_max = 1e-2;
  /// Amplitude range of the transverse seed component; eta_max = 0 disables it.
  double eta_min = 1e-6;
  double eta_max = 1e-2;
  double return_tol = 1e-3;
  int max_evaluations = 90;
  /// Coarse multistart grid over the direction angle and log eta before the simplex search.
  int scan_angles = 8;
  int scan_etas = 3;
  /// Quadrature clipping: keep the part of the orbit where the excursion exceeds
  /// clip_fraction times its peak.
  double clip_fraction = 1e-6;

  void validate() const;
};

/// Where the shot starts: x_s + delta * U d(angles) + eta * v.
struct SeedGeometry {
  Eigen::VectorXd steady;
  /// Orthonormal columns spanning the unstable subspace.
  Eigen::MatrixXd unstable;
  /// Optional unit vector outside the unstable subspace (empty when unused).
  Eigen::VectorXd transverse;

  int unstable_dim() const { return static_cast<int>(unstable.cols()); }
  bool has_transverse() const { return transverse.size() > 0; }
};

/// Search coordinates: log10 delta, unstable_dim - 1 sphere angles, optional log10 eta.
/// With a one-dimensional unstable subspace `sign` picks the branch.
struct ShotParameters {
  double log_delta = -3.0;
  std::vector<double> angles;
  std::optional<double> log_eta;
  int sign = 1;
};

struct ShotResult {
  SampledPath path;
  /// min over t in [T/2, T], after the peak, of |x - x_s| / peak; 1 when the
  /// trajectory has not turned back by T.
  double return_distance = 1.0;
  double peak = 0.0;
  Eigen::Index peak_index = 0;
  Eigen::Index return_index = 0;
};

Eigen::VectorXd shot_initial_state(const SeedGeometry& geo, const ShotParameters& p);

/// Integrates from the seeded point and evaluates the return distance. Throws NonFinite.
ShotResult shoot(const FlowIntegrator& flow, const SeedGeometry& geo, const ShotParameters& p,
                 const ShootingConfig& cfg);

/// Approximate homoclinic orbit, time shifted so that t = 0 is the maximum excursion.
struct OrbitTrajectory {
  SampledPath path;
  Eigen::VectorXd steady;
  double return_distance = 1.0;
  double initial_return_distance = 1.0;
  /// Time of maximum excursion on the shooting clock (before the shift).
  double t_center = 0.0;
  bool time_offset_applied = false;
  /// return_distance <= return_tol.
  bool converged = false;
  int evaluations = 0;
  ShotParameters params;

  double excursion(Eigen::Index i) const { return (path.states.col(i) - steady).norm(); }
};

/// Nelder-Mead over the shot parameters (golden section on log delta when the
/// unstable subspace is one-dimensional), starting from the centre of the search
/// box. Never throws on a poor optimum: inspect `converged`.
/// Throws UnstableSubspaceEmpty.
OrbitTrajectory find_homoclinic(const FlowIntegrator& flow, const SeedGeometry& geo,
                                const ShootingConfig& cfg);

/// Builds the orbit from one shot: keep [start, return], clip, recentre at the peak.
OrbitTrajectory orbit_from_shot(const ShotResult& shot, const SeedGeometry& geo,
                                const ShootingConfig& cfg);

/// Shift times so that the refined maximum of |x - x_s| sits at t = 0.
void recentre(OrbitTrajectory& orbit);

enum class Extrapolation { Throw, ClampToSteady };

/// Cubic Hermite value of the orbit; outside the sampled range either throws
/// OutOfRange or returns the steady state.
Eigen::VectorXd orbit_interpolate(const OrbitTrajectory& orbit, double t,
                                  Extrapolation mode = Extrapolation::Throw);

/// Least-squares slope of log |x - x_s| over the final `fraction` of the orbit.
double tail_decay_rate(const OrbitTrajectory& orbit, double fraction = 0.1);

// Kuramoto-Sivashinsky specialisation

FlowIntegrator ks_flow(const Domain& dom, double dt, int sample_stride);

/// Seed geometry at a steady state: unstable subspace of the Jacobian restricted to
/// `subspace`, transverse component along the leading stable eigenvector.
SeedGeometry ks_seed_geometry(const ModalState& steady, const Domain& dom, Subspace subspace,
                              bool with_transverse);

ModalState orbit_state(const OrbitTrajectory& orbit, double t,
                       Extrapolation mode = Extrapolation::Throw);

// Derivative-free minimisers

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Nelder-Mead with the standard coefficients; `step` sets the initial simplex edges.
/// Coordinates are clamped into [lower, upper] before each evaluation.
MinimizeResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           int max_evaluations, double ftol = 1e-10);

MinimizeResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                              int max_evaluations, double xtol = 1e-6);

}  // namespace ksm
