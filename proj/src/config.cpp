#include "ksm/config.hpp"

#include "ksm/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ksm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& field, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw ValidationError(field, "expected a finite number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& field, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError(field, "expected an integer, got '" + v + "'");
  return out;
}

int to_int(const std::string& field, const std::string& v) {
  const long long x = to_integer(field, v);
  if (x < -2147483647LL || x > 2147483647LL) throw ValidationError(field, "out of integer range");
  return static_cast<int>(x);
}

Subspace to_subspace(const std::string& field, const std::string& v) {
  if (v == "full") return Subspace::Full;
  if (v == "odd") return Subspace::Odd;
  throw ValidationError(field, "expected 'full' or 'odd', got '" + v + "'");
}

// "sin(qx)" or "sin(<m>qx)"
int to_profile(const std::string& field, const std::string& v) {
  if (v == "sin(qx)") return 1;
  if (v.size() > 7 && v.starts_with("sin(") && v.ends_with("qx)")) {
    const std::string m = v.substr(4, v.size() - 7);
    return to_int(field, m);
  }
  throw ValidationError(field, "expected sin(qx) or sin(<m>qx), got '" + v + "'");
}

std::vector<double> to_list(const std::string& field, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(field, trim(item)));
  if (out.empty()) throw ValidationError(field, "expected a comma-separated list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& field, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = {
      {"domain",
       {{"L", [](RunConfig& c, const std::string& f, const std::string& v) { c.domain.length = to_double(f, v); }},
        {"N", [](RunConfig& c, const std::string& f, const std::string& v) { c.domain.modes = to_int(f, v); }}}},
      {"integration",
       {{"dt", [](RunConfig& c, const std::string& f, const std::string& v) { c.integration.dt = to_double(f, v); }},
        {"T", [](RunConfig& c, const std::string& f, const std::string& v) { c.integration.horizon = to_double(f, v); }},
        {"sample_stride",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.integration.sample_stride = to_int(f, v); }},
        {"contour_points",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.integration.contour_points = to_int(f, v); }}}},
      {"steady",
       {{"amplitude", [](RunConfig& c, const std::string& f, const std::string& v) { c.steady.amplitude = to_double(f, v); }},
        {"settle_time",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.steady.settle_time = to_double(f, v); }},
        {"tol", [](RunConfig& c, const std::string& f, const std::string& v) { c.steady.tol = to_double(f, v); }},
        {"max_iter", [](RunConfig& c, const std::string& f, const std::string& v) { c.steady.max_iter = to_int(f, v); }},
        {"subspace",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.steady.subspace = to_subspace(f, v); }}}},
      {"shooting",
       {{"T", [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.horizon = to_double(f, v); }},
        {"dt", [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.dt = to_double(f, v); }},
        {"sample_stride",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.sample_stride = to_int(f, v); }},
        {"delta_min", [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.delta_min = to_double(f, v); }},
        {"delta_max", [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.delta_max = to_double(f, v); }},
        {"eta_min", [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.eta_min = to_double(f, v); }},
        {"eta_max", [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.eta_max = to_double(f, v); }},
        {"return_tol",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.return_tol = to_double(f, v); }},
        {"max_evaluations",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.max_evaluations = to_int(f, v); }},
        {"scan_angles",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.scan_angles = to_int(f, v); }},
        {"scan_etas", [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.scan_etas = to_int(f, v); }},
        {"clip_fraction",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.shooting.clip_fraction = to_double(f, v); }},
        {"subspace",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.orbit_subspace = to_subspace(f, v); }}}},
      {"forcing",
       {{"profile", [](RunConfig& c, const std::string& f, const std::string& v) { c.forcing.mode = to_profile(f, v); }},
        {"epsilon", [](RunConfig& c, const std::string& f, const std::string& v) { c.forcing.epsilon = to_double(f, v); }},
        {"omega", [](RunConfig& c, const std::string& f, const std::string& v) { c.forcing.omega = to_double(f, v); }}}},
      {"melnikov",
       {{"omega_min", [](RunConfig& c, const std::string& f, const std::string& v) { c.melnikov.omega_min = to_double(f, v); }},
        {"omega_max", [](RunConfig& c, const std::string& f, const std::string& v) { c.melnikov.omega_max = to_double(f, v); }},
        {"omega_step",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.melnikov.omega_step = to_double(f, v); }},
        {"window", [](RunConfig& c, const std::string& f, const std::string& v) { c.melnikov.window = to_double(f, v); }},
        {"adjoint_tol",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.melnikov.adjoint_tol = to_double(f, v); }},
        {"phase_samples",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.melnikov.phase_samples = to_int(f, v); }}}},
      {"noise",
       {{"D", [](RunConfig& c, const std::string& f, const std::string& v) { c.noise.D = to_double(f, v); }},
        {"ensemble", [](RunConfig& c, const std::string& f, const std::string& v) { c.noise.ensemble = to_int(f, v); }},
        {"seed",
         [](RunConfig& c, const std::string& f, const std::string& v) {
           const long long s = to_integer(f, v);
           if (s < 0) throw ValidationError(f, ">= 0");
           c.noise.seed = static_cast<std::uint64_t>(s);
         }},
        {"histogram_bins",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.noise.histogram_bins = to_int(f, v); }},
        {"scaling_D", [](RunConfig& c, const std::string& f, const std::string& v) { c.noise.scaling_D = to_list(f, v); }}}},
      {"manifolds",
       {{"delta_unstable",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.manifolds.delta_unstable = to_double(f, v); }},
        {"delta_stable",
         [](RunConfig& c, const std::string& f, const std::string& v) { c.manifolds.delta_stable = to_double(f, v); }},
        {"T", [](RunConfig& c, const std::string& f, const std::string& v) { c.manifolds.horizon = to_double(f, v); }}}},
      {"output",
       {{"directory", [](RunConfig& c, const std::string&, const std::string& v) { c.output_directory = v; }}}},
  };
  return s;
}

void require(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) throw ValidationError(field, constraint);
}

}  // namespace

void RunConfig::validate() const {
  require(domain.length > 0.0, "domain.L", "required, > 0");
  require(domain.modes >= 2, "domain.N", "required, >= 2");
  require(integration.dt > 0.0, "integration.dt", "> 0");
  require(integration.horizon > 0.0, "integration.T", "> 0");
  require(integration.sample_stride >= 1, "integration.sample_stride", ">= 1");
  require(integration.contour_points >= 16, "integration.contour_points", ">= 16");
  require(steady.tol > 0.0, "steady.tol", "> 0");
  require(steady.max_iter >= 1, "steady.max_iter", ">= 1");
  require(steady.amplitude > 0.0, "steady.amplitude", "> 0");
  require(steady.settle_time >= 0.0, "steady.settle_time", ">= 0");
  try {
    shooting.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("shooting", e.what());
  }
  require(forcing.mode >= 1 && forcing.mode <= domain.modes, "forcing.profile", "mode within 1..N");
  require(forcing.epsilon >= 0.0, "forcing.epsilon", ">= 0");
  require(forcing.omega >= 0.0, "forcing.omega", ">= 0");
  require(melnikov.omega_min >= 0.0, "melnikov.omega_min", ">= 0");
  require(melnikov.omega_max >= melnikov.omega_min, "melnikov.omega_max", ">= omega_min");
  require(melnikov.omega_step > 0.0, "melnikov.omega_step", "> 0");
  require(melnikov.window > 0.0, "melnikov.window", "> 0");
  require(melnikov.adjoint_tol > 0.0, "melnikov.adjoint_tol", "> 0");
  require(melnikov.phase_samples >= 4, "melnikov.phase_samples", ">= 4");
  require(noise.D >= 0.0, "noise.D", ">= 0");
  require(noise.ensemble >= 1, "noise.ensemble", ">= 1");
  require(noise.histogram_bins >= 1, "noise.histogram_bins", ">= 1");
  require(noise.scaling_D.size() >= 3, "noise.scaling_D", "at least three values");
  for (double d : noise.scaling_D) require(d > 0.0, "noise.scaling_D", "all > 0");
  require(manifolds.delta_unstable > 0.0 && manifolds.delta_unstable < 0.1, "manifolds.delta_unstable", "in (0, 0.1)");
  require(manifolds.delta_stable > 0.0 && manifolds.delta_stable < 0.1, "manifolds.delta_stable", "in (0, 0.1)");
  require(manifolds.horizon > 0.0, "manifolds.T", "> 0");
  require(!output_directory.empty(), "output.directory", "non-empty");
}

RunConfig parse_config(std::string_view text, std::string name) {
  RunConfig cfg;
  cfg.name = std::move(name);
  std::string section;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto c = s.find_first_of("#;"); c != std::string::npos) s.erase(c);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError(line, "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!schema().contains(section)) throw ParseError(line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key = value");
    if (section.empty()) throw ParseError(line, "key outside of a section");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) throw ParseError(line, "empty key");
    if (value.empty()) throw ParseError(line, "empty value for " + key);
    const auto& keys = schema().at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError(line, "unknown key '" + key + "' in [" + section + "]");
    const std::string field = section + "." + key;
    if (!seen.insert(field).second) throw ParseError(line, "duplicate key " + field);
    it->second(cfg, field, value);
  }
  if (!seen.contains("domain.L")) throw ValidationError("domain.L", "required");
  if (!seen.contains("domain.N")) throw ValidationError("domain.N", "required");
  cfg.validate();
  return cfg;
}

std::string subspace_name(Subspace s) { return s == Subspace::Full ? "full" : "odd"; }

std::string canonical_config(const RunConfig& c) {
  std::string out;
  const auto num = [&](const char* key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", key, v);
    out += buf;
  };
  const auto str = [&](const char* key, const std::string& v) { out += std::string(key) + "=" + v + "\n"; };
  num("domain.L", c.domain.length);
  num("domain.N", c.domain.modes);
  num("integration.dt", c.integration.dt);
  num("integration.T", c.integration.horizon);
  num("integration.sample_stride", c.integration.sample_stride);
  num("integration.contour_points", c.integration.contour_points);
  num("steady.amplitude", c.steady.amplitude);
  num("steady.settle_time", c.steady.settle_time);
  num("steady.tol", c.steady.tol);
  num("steady.max_iter", c.steady.max_iter);
  str("steady.subspace", subspace_name(c.steady.subspace));
  num("shooting.T", c.shooting.horizon);
  num("shooting.dt", c.shooting.dt);
  num("shooting.sample_stride", c.shooting.sample_stride);
  num("shooting.delta_min", c.shooting.delta_min);
  num("shooting.delta_max", c.shooting.delta_max);
  num("shooting.eta_min", c.shooting.eta_min);
  num("shooting.eta_max", c.shooting.eta_max);
  num("shooting.return_tol", c.shooting.return_tol);
  num("shooting.max_evaluations", c.shooting.max_evaluations);
  num("shooting.scan_angles", c.shooting.scan_angles);
  num("shooting.scan_etas", c.shooting.scan_etas);
  num("shooting.clip_fraction", c.shooting.clip_fraction);
  str("shooting.subspace", subspace_name(c.orbit_subspace));
  num("forcing.mode", c.forcing.mode);
  num("forcing.epsilon", c.forcing.epsilon);
  num("forcing.omega", c.forcing.omega);
  num("melnikov.omega_min", c.melnikov.omega_min);
  num("melnikov.omega_max", c.melnikov.omega_max);
  num("melnikov.omega_step", c.melnikov.omega_step);
  num("melnikov.window", c.melnikov.window);
  num("melnikov.adjoint_tol", c.melnikov.adjoint_tol);
  num("melnikov.phase_samples", c.melnikov.phase_samples);
  num("noise.D", c.noise.D);
  num("noise.ensemble", c.noise.ensemble);
  str("noise.seed", std::to_string(c.noise.seed));
  num("noise.histogram_bins", c.noise.histogram_bins);
  for (double d : c.noise.scaling_D) num("noise.scaling_D", d);
  num("manifolds.delta_unstable", c.manifolds.delta_unstable);
  num("manifolds.delta_stable", c.manifolds.delta_stable);
  num("manifolds.T", c.manifolds.horizon);
  return out;  // output directory is deliberately not part of the identity
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(canonical_config(cfg)); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

const std::map<std::string, std::string, std::less<>>& presets() {
  static const std::map<std::string, std::string, std::less<>> p = {
      {"fig1", R"(# homoclinic orbit
[domain]
L = 22
N = 32
[integration]
dt = 1e-3
[steady]
tol = 1e-8
[shooting]
T = 200
dt = 1e-3
)"},
      {"fig2", R"(# unperturbed manifolds from linearized eigenvectors, forward/backward
[domain]
L = 22
N = 32
[integration]
dt = 1e-3
[steady]
tol = 1e-8
[shooting]
T = 200
dt = 1e-3
[manifolds]
T = 200
)"},
      {"fig3", R"(# periodic forcing
[domain]
L = 22
N = 32
[integration]
dt = 1e-3
T = 300
[steady]
tol = 1e-8
[shooting]
T = 200
dt = 1e-3
[forcing]
profile = sin(qx)
epsilon = 0.01
omega = 0.5
)"},
      {"fig4", R"(# Melnikov coefficients against forcing frequency
[domain]
L = 22
N = 32
[integration]
dt = 1e-3
[steady]
tol = 1e-8
[shooting]
T = 200
dt = 1e-3
[forcing]
profile = sin(qx)
[melnikov]
omega_min = 0
omega_max = 2
omega_step = 0.02
window = 150
adjoint_tol = 1e-8
)"},
      {"fig5", R"(# stochastic Melnikov distribution
[domain]
L = 22
N = 32
[integration]
dt = 1e-3
[steady]
tol = 1e-8
[shooting]
T = 200
dt = 1e-3
[noise]
D = 0.02
ensemble = 500
)"},
      {"fig6", R"(# noise-driven wandering near the orbit
[domain]
L = 22
N = 32
[integration]
dt = 1e-3
T = 100
[steady]
tol = 1e-8
[shooting]
T = 200
dt = 1e-3
[noise]
D = 0.02
)"},
  };
  return p;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1", "fig2", "fig3", "fig4", "fig5", "fig6"};
  return names;
}

std::string preset_text(std::string_view name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  return it->second;
}

RunConfig load_preset(std::string_view name) { return parse_config(preset_text(name), std::string(name)); }

}  // namespace ksm
