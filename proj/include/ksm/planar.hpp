#pragma once

#include "ksm/adjoint.hpp"
#include "ksm/homoclinic.hpp"
#include "ksm/melnikov.hpp"

#include <Eigen/Dense>

#include <functional>

namespace ksm {

/// Planar system x' = f(x) + eps g(x, t) with a hyperbolic saddle and a homoclinic loop.
struct PlanarSystem {
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> f;
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> jacobian;
  Eigen::Vector2d saddle = Eigen::Vector2d::Zero();
  /// Closed-form homoclinic state, if known (empty otherwise).
  std::function<Eigen::Vector2d(double)> homoclinic;
};

using PlanarForcing = std::function<Eigen::Vector2d(const Eigen::Vector2d& x, double t)>;

/// x'' = x - x^3 as (x, x'); homoclinic loop sqrt(2) sech t.
PlanarSystem duffing();

/// (x_h(t), x_h'(t)) = (sqrt2 sech t, -sqrt2 sech t tanh t).
Eigen::Vector2d duffing_homoclinic(double t);

/// g = (0, cos(omega t)).
PlanarForcing duffing_forcing(double omega);

/// Orbit sampled from the closed form on [-half_width, half_width].
OrbitTrajectory analytic_orbit(const PlanarSystem& sys, double half_width, double spacing);

/// Symmetric range where |x_h - x_s| exceeds clip_fraction of its peak.
double analytic_half_width(const PlanarSystem& sys, double clip_fraction);

/// RK4 flow of the unforced system.
FlowIntegrator planar_flow(const PlanarSystem& sys, double dt, int sample_stride);

SpectralData planar_saddle_spectrum(const PlanarSystem& sys);
SeedGeometry planar_seed_geometry(const PlanarSystem& sys);

AdjointField planar_adjoint_field(const PlanarSystem& sys, const OrbitTrajectory& orbit);
AdjointTrajectory planar_adjoint_solve(const PlanarSystem& sys, const OrbitTrajectory& orbit);

/// int <psi(t), g(x_h(t), t + t0)> dt along the adjoint.
double melnikov_planar(const OrbitTrajectory& orbit, const AdjointTrajectory& adj,
                       const PlanarForcing& g, double t0, const TimeWindow& window = {});

struct SplitConfig {
  double seed_distance = 1e-6;
  double dt = 1e-3;
  int newton_iterations = 8;
};

/// Signed distance, along the unit normal of the unperturbed loop at its apex, from
/// the stable to the unstable manifold of the perturbed saddle orbit, measured on the
/// section through the apex, for the slice whose apex passage happens at time t0.
/// The forcing must be periodic with frequency omega. Throws SectionMiss.
double brute_force_split(const PlanarSystem& sys, const PlanarForcing& g, double epsilon, double omega,
                         double t0, const SplitConfig& cfg = {});

}  // namespace ksm
