#include "ksm/config.hpp"
#include "ksm/errors.hpp"
#include "ksm/io.hpp"
#include "ksm/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("KSM_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw ksm::ValidationError("KSM_SEED", "expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

const std::map<std::string, std::string> kVerbHelp{
    {"steady", "steady state and its spectrum"},
    {"orbit", "shoot for the homoclinic orbit"},
    {"adjoint", "bounded adjoint solution along the orbit"},
    {"melnikov", "Melnikov function over one forcing period, plus a forced run"},
    {"sweep", "Melnikov amplitude across forcing frequencies"},
    {"stochastic", "noise ensemble, histogram and rms scaling"},
    {"wander", "noisy trajectory and its distance to the orbit"},
    {"manifolds", "trajectory fans along the steady-state eigendirections"},
    {"oracle", "Duffing check: Melnikov function against brute-force splitting"},
    {"figures", "every figure preset into one output directory"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Melnikov analysis of a Kuramoto-Sivashinsky homoclinic orbit"};
  app.require_subcommand(1);

  std::string config_file, preset, out_dir, cache_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  bool print_config = false;

  for (const std::string& verb : ksm::verb_names()) {
    CLI::App* sub = app.add_subcommand(verb, kVerbHelp.at(verb));
    if (verb != "figures") {
      auto* cfg = sub->add_option("-c,--config", config_file, "INI run configuration");
      sub->add_option("-p,--preset", preset, "built-in figure preset (fig1 ... fig6)")->excludes(cfg);
    }
    sub->add_option("-o,--out", out_dir, "output directory (overrides [output] directory)");
    sub->add_option("--cache", cache_dir, "cache directory (default <out>/cache)");
    sub->add_option("--threads", threads, "cap on worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", seed, "RNG seed (overrides config and KSM_SEED)");
    sub->add_flag("--print-config", print_config, "print the resolved configuration and exit");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string verb_str = app.get_subcommands().front()->get_name();
  const ksm::Verb verb = *ksm::parse_verb(verb_str);
  try {
    ksm::RunOptions opts;
    opts.output_dir = out_dir;
    opts.cache_dir = cache_dir;
    opts.threads = threads;
    opts.seed_override = seed ? seed : env_seed();

    ksm::RunReport report;
    if (verb == ksm::Verb::Figures) {
      report = ksm::run_figures(opts);
    } else {
      ksm::RunConfig cfg;
      if (!config_file.empty()) {
        cfg = ksm::parse_config(ksm::read_file(config_file), config_file);
      } else {
        cfg = ksm::load_preset(preset.empty() ? "fig1" : preset);
      }
      if (print_config) {
        std::cout << ksm::canonical_config(cfg);
        return ksm::kSuccess;
      }
      ksm::Pipeline pipeline(std::move(cfg), opts);
      report = pipeline.run(verb);
    }
    if (report.exit_code == ksm::kNotConverged)
      std::cerr << "[ksm] " << verb_str << ": outputs written, but the orbit did not reach the return tolerance\n";
    return report.exit_code;
  } catch (const ksm::ParseError& e) {
    std::cerr << "[ksm] config error: " << e.what() << "\n";
    return ksm::kConfigError;
  } catch (const ksm::ValidationError& e) {
    std::cerr << "[ksm] config error: " << e.what() << "\n";
    return ksm::kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "[ksm] config error: " << e.what() << "\n";
    return ksm::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "[ksm] " << verb_str << " failed: " << e.what() << "\n";
    return ksm::kNumericalFailure;
  }
}
