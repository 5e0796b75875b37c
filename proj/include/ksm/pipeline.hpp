#pragma once

#include "ksm/adjoint.hpp"
#include "ksm/config.hpp"
#include "ksm/equilibria.hpp"
#include "ksm/homoclinic.hpp"
#include "ksm/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ksm {

std::string code_version();

enum class Verb { Steady, Orbit, Adjoint, Melnikov, Sweep, Stochastic, Wander, Manifolds, Oracle, Figures };

std::optional<Verb> parse_verb(std::string_view name);
std::string verb_name(Verb v);
const std::vector<std::string>& verb_names();

enum ExitCode : int { kSuccess = 0, kConfigError = 2, kNumericalFailure = 3, kNotConverged = 4 };

struct RunOptions {
  std::filesystem::path output_dir;  // empty: the config's directory
  std::filesystem::path cache_dir;   // empty: <output>/cache
  /// 0 = hardware concurrency.
  int threads = 0;
  std::optional<std::uint64_t> seed_override;
  std::ostream* log = nullptr;  // nullptr: std::cerr
};

struct RunReport {
  int exit_code = kSuccess;
  std::vector<std::filesystem::path> files;
};

/// Lazily computed stages for one configuration. Orbits and adjoints are cached on
/// disk under a key derived from every input that determines them.
class Pipeline {
 public:
  Pipeline(RunConfig cfg, RunOptions opts);

  const RunConfig& config() const { return cfg_; }
  std::uint64_t seed() const;
  std::filesystem::path output_dir() const;

  const SteadyState& steady();
  /// Full-space spectrum of the Jacobian at the steady state.
  const SpectralData& spectrum();
  const OrbitTrajectory& orbit();
  const AdjointTrajectory& adjoint();

  std::string orbit_key();
  std::string adjoint_key();
  bool orbit_from_cache() const { return orbit_cached_; }
  /// find_homoclinic calls made by this instance.
  int shooting_runs() const { return shooting_runs_; }

  RunReport run(Verb verb);

 private:
  std::ostream& log();
  CsvMeta meta(const std::string& name, const std::string& note = "") const;
  std::filesystem::path write(const std::string& file, const std::vector<std::string>& columns,
                              const std::vector<std::vector<double>>& rows, const std::string& note = "");

  RunReport stage_steady();
  RunReport stage_orbit();
  RunReport stage_adjoint();
  RunReport stage_melnikov();
  RunReport stage_sweep();
  RunReport stage_stochastic();
  RunReport stage_wander();
  RunReport stage_manifolds();
  RunReport stage_oracle();

  RunConfig cfg_;
  RunOptions opts_;
  std::optional<SteadyState> steady_;
  std::optional<SpectralData> spectrum_;
  std::optional<OrbitTrajectory> orbit_;
  std::optional<AdjointTrajectory> adjoint_;
  bool orbit_cached_ = false;
  int shooting_runs_ = 0;
};

/// Runs every figure preset (fig1 ... fig6) into one output directory.
RunReport run_figures(const RunOptions& opts);

/// Which verb produces each preset's figure data.
Verb preset_verb(std::string_view preset);

}  // namespace ksm
