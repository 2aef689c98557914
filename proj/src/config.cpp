#include "rdtf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rdtf/errors.hpp"
#include "rdtf/flow_engine.hpp"
#include "rdtf/initial_data.hpp"

namespace rdtf {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GridConfig, n, N, L)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BackgroundConfig, kind, amplitude, modes)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(InitialConfig, kind, alpha, amplitude, eps0, k_max, pattern, mollify, path)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FlowConfig, T_final, scheme, c_cfl, snapshots, spacing, eps0)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DeturckConfig, S, t_min, substeps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScalarTestConfig, b, eps1_rule, family_size, Y, sigma, p_list)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(VerifyConfig, sigmas, center, inner, outer, p_list, convergence_sigma, min_rate,
                                   attainment, decay_fraction)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(OutputConfig, directory, formats)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExperimentConfig, seed, grid, background, initial, flow, deturck,
                                   scalar_test, verify, output)

namespace {

const char* kind_of(const json& v) {
  if (v.is_object()) return "object";
  if (v.is_array()) return "array";
  if (v.is_string()) return "string";
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return "null";
}

// integers are accepted where a real is expected, not the other way round
void check_type(const json& def, const json& v, const std::string& key) {
  bool ok = false;
  if (def.is_number_unsigned()) ok = v.is_number_unsigned();
  else if (def.is_number_integer()) ok = v.is_number_integer();
  else if (def.is_number()) ok = v.is_number();
  else ok = std::string(kind_of(def)) == kind_of(v);
  if (!ok) throw ConfigError("config key '" + key + "': expected " + kind_of(def) + ", got " + kind_of(v));
}

void merge(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (const auto& [k, v] : patch.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (!base.contains(k)) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[k];
    if (slot.is_object()) {
      merge(slot, v, key);
    } else {
      check_type(slot, v, key);
      slot = v;
    }
  }
}

void apply_override(json& doc, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not KEY=VALUE");
  const std::string key = item.substr(0, eq);
  const std::string text = item.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  // rebuild a nested patch from the dotted path and merge it like file content
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override key '" + key + "' has an empty component");
    json wrap = json::object();
    wrap[*it] = std::move(patch);
    patch = std::move(wrap);
  }
  merge(doc, patch, "");
}

ExperimentConfig decode(const json& doc) {
  try {
    return doc.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

bool in_list(const std::string& v, std::initializer_list<const char*> list) {
  return std::any_of(list.begin(), list.end(), [&](const char* s) { return v == s; });
}

}  // namespace

double ExperimentConfig::effective_amplitude() const {
  if (initial.kind == "pulled_back" && scalar_test.eps1_rule == "min_sigma3_eps0")
    return std::min({initial.amplitude, std::pow(scalar_test.sigma, 3), initial.eps0});
  return initial.amplitude;
}

bool ExperimentConfig::writes_csv() const {
  return std::find(output.formats.begin(), output.formats.end(), "csv") != output.formats.end();
}

std::string default_config_json() { return to_json(ExperimentConfig{}); }

std::string to_json(const ExperimentConfig& cfg) { return json(cfg).dump(2) + "\n"; }

ExperimentConfig parse_config(const std::string& text) { return parse_config(text, {}); }

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json doc = json(ExperimentConfig{});
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  merge(doc, user, "");
  for (const auto& o : overrides) apply_override(doc, o);
  ExperimentConfig cfg = decode(doc);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

void validate(const ExperimentConfig& c) {
  require(c.grid.n >= 1 && c.grid.n <= 3, "grid.n must be 1, 2 or 3");
  require(c.grid.N >= 8 && (c.grid.N & (c.grid.N - 1)) == 0, "grid.N must be a power of two, at least 8");
  require(c.grid.L > 0.0 && std::isfinite(c.grid.L), "grid.L must be positive");

  require(in_list(c.background.kind, {"flat", "perturbed"}), "background.kind must be flat or perturbed");
  require(std::abs(c.background.amplitude) < 1.0, "background.amplitude must lie in (-1, 1)");
  for (const auto& m : c.background.modes) {
    require(!m.empty() && static_cast<int>(m.size()) <= c.grid.n, "background.modes entries need 1..n components");
    require(std::any_of(m.begin(), m.end(), [](int k) { return k != 0; }), "background.modes contains the zero mode");
  }
  if (c.background.kind == "perturbed") require(!c.background.modes.empty(), "background.modes is empty");

  const auto& in = c.initial;
  require(in_list(in.kind, {"rough", "identity", "pulled_back", "file"}),
          "initial.kind must be rough, identity, pulled_back or file");
  require(in.alpha > 0.0, "initial.alpha must be positive");
  require(in.eps0 > 0.0 && in.eps0 < 1.0, "initial.eps0 must lie in (0, 1)");
  require(in.amplitude >= 0.0 && in.amplitude <= in.eps0, "initial.amplitude must lie in [0, eps0]");
  require(in.k_max >= 0 && in.k_max < c.grid.N / 2, "initial.k_max must lie in [0, N/2)");
  try {
    parse_pattern(in.pattern);
  } catch (const Error&) {
    throw ConfigError("config: initial.pattern must be all, diagonal or conformal");
  }
  require(in.mollify >= 0.0, "initial.mollify must be >= 0");
  if (in.kind == "file") require(!in.path.empty(), "initial.path is required for kind = file");
  if (in.kind == "pulled_back") {
    require(c.background.kind == "flat", "pulled_back initial data needs a flat background");
    require(c.effective_amplitude() > 0.0, "pulled_back initial data needs a positive amplitude");
  }

  const auto& f = c.flow;
  require(f.T_final > 0.0, "flow.T_final must be positive");
  try {
    parse_scheme(f.scheme);
  } catch (const Error&) {
    throw ConfigError("config: flow.scheme must be euler, rk2 or rk4");
  }
  require(f.c_cfl > 0.0 && f.c_cfl <= 1.0, "flow.c_cfl must lie in (0, 1]");
  require(f.snapshots >= 1, "flow.snapshots must be >= 1");
  require(in_list(f.spacing, {"linear", "geometric"}), "flow.spacing must be linear or geometric");
  require(f.eps0 > 0.0 && f.eps0 < 1.0 / 3.0, "flow.eps0 must lie in (0, 1/3)");

  require(c.deturck.substeps >= 1, "deturck.substeps must be >= 1");
  require(c.deturck.S < 0.0 || c.deturck.S <= f.T_final, "deturck.S exceeds flow.T_final");

  const auto& s = c.scalar_test;
  require(in_list(s.eps1_rule, {"min_sigma3_eps0", "none"}), "scalar_test.eps1_rule must be min_sigma3_eps0 or none");
  require(s.family_size >= 1, "scalar_test.family_size must be >= 1");
  require(s.sigma > 0.0 && s.sigma < 0.25, "scalar_test.sigma must lie in (0, 1/4)");
  require(s.Y < 0.0 || s.Y <= f.T_final, "scalar_test.Y exceeds flow.T_final");
  for (double p : s.p_list) require(p >= 1.0, "scalar_test.p_list entries must be >= 1");

  const auto& v = c.verify;
  require(!v.sigmas.empty(), "verify.sigmas is empty");
  for (double sg : v.sigmas) require(sg >= 0.0 && sg <= 0.25, "verify.sigmas entries must lie in [0, 1/4]");
  require(static_cast<int>(v.center.size()) >= c.grid.n, "verify.center needs n entries");
  require(v.inner > 0.0 && v.inner < v.outer && v.outer < 0.5, "verify radii need 0 < inner < outer < 1/2");
  for (double p : v.p_list) require(p >= 2.0, "verify.p_list entries must be >= 2");
  require(v.convergence_sigma > 0.0 && v.convergence_sigma < 0.25, "verify.convergence_sigma must lie in (0, 1/4)");
  require(v.attainment > 0.0 && v.decay_fraction > 0.0, "verify thresholds must be positive");

  require(!c.output.directory.empty(), "output.directory is empty");
  for (const auto& fmt : c.output.formats) require(in_list(fmt, {"json", "csv"}), "output.formats entries are json or csv");
  require(std::find(c.output.formats.begin(), c.output.formats.end(), "json") != c.output.formats.end(),
          "output.formats must include json; later stages read the JSON reports");
}

}  // namespace rdtf
