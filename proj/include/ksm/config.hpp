#pragma once

#include "ksm/homoclinic.hpp"
#include "ksm/integrators.hpp"
#include "ksm/spectral.hpp"
#include "ksm/stochastic.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ksm {

struct DomainConfig {
  double length = 0.0;
  int modes = 0;

  Domain domain() const { return Domain(length, modes); }
};

struct SteadyConfig {
  /// Initial sin(qx) amplitude and relaxation time before Newton.
  double amplitude = 0.1;
  double settle_time = 50.0;
  double tol = 1e-8;
  int max_iter = 50;
  Subspace subspace = Subspace::Odd;
};

struct ForcingConfig {
  /// G(x) = sin(mode q x).
  int mode = 1;
  double epsilon = 0.01;
  double omega = 0.5;
};

struct MelnikovConfig {
  double omega_min = 0.0;
  double omega_max = 2.0;
  double omega_step = 0.02;
  /// Quadrature over orbit times in [-window, window].
  double window = 150.0;
  double adjoint_tol = 1e-8;
  int phase_samples = 128;
};

struct NoiseSection {
  double D = 0.02;
  int ensemble = 500;
  std::uint64_t seed = 20240601;
  int histogram_bins = 30;
  std::vector<double> scaling_D{0.005, 0.01, 0.02, 0.04};
};

/// Eigenvector-seeded trajectory fans around the steady state.
struct ManifoldConfig {
  double delta_unstable = 1e-4;
  double delta_stable = 1e-2;
  double horizon = 100.0;
};

struct RunConfig {
  std::string name;
  DomainConfig domain;
  /// Plain integration runs (forced flow, noisy flow); samples every 10 steps.
  IntegrationConfig integration{1e-3, 100.0, 10, 32};
  SteadyConfig steady;
  ShootingConfig shooting;
  Subspace orbit_subspace = Subspace::Full;
  ForcingConfig forcing;
  MelnikovConfig melnikov;
  NoiseSection noise;
  ManifoldConfig manifolds;
  std::string output_directory = "out";

  void validate() const;
};

/// key = value lines in [section]s; '#' or ';' start comments. Unknown sections
/// or keys are rejected. Throws ParseError, ValidationError.
RunConfig parse_config(std::string_view text, std::string name = "");

/// Every field in a fixed order with round-trip precision; equal configs give equal text.
std::string canonical_config(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

const std::vector<std::string>& preset_names();
/// Config text of a figure preset (fig1 ... fig6). Throws std::invalid_argument.
std::string preset_text(std::string_view name);
RunConfig load_preset(std::string_view name);

std::string subspace_name(Subspace s);

}  // namespace ksm
