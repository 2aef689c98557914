#pragma once

// Experiment configuration: one JSON document with documented defaults, strict key checking
// and dotted KEY=VALUE overrides.

#include <cstdint>
#include <string>
#include <vector>

namespace rdtf {

struct GridConfig {
  int n = 2;
  int N = 128;
  double L = 1.0;
};

struct BackgroundConfig {
  std::string kind = "flat";                  // flat | perturbed
  double amplitude = 0.0;                     // a in (1 + a s(x)) delta
  std::vector<std::vector<int>> modes{{1}};   // integer wave vectors, zero-padded to n
};

struct InitialConfig {
  std::string kind = "rough";   // rough | identity | pulled_back | file
  double alpha = 3.5;
  double amplitude = 0.05;      // pinning level; pulled_back may cap it through eps1_rule
  double eps0 = 0.1;
  int k_max = 0;                // 0 means N/2 - 1
  std::string pattern = "all";  // all | diagonal | conformal
  double mollify = 0.0;         // Gaussian scale in length units, 0 = off
  std::string path;             // kind = file: RDTL trajectory, first snapshot is used
};

struct FlowConfig {
  double T_final = 0.01;
  std::string scheme = "rk4";
  double c_cfl = 0.2;
  int snapshots = 40;           // intervals after t = 0
  std::string spacing = "geometric";  // linear | geometric (geometric starts at 10 dx^2)
  double eps0 = 0.1;            // blow-up threshold is 3 eps0
};

struct DeturckConfig {
  double S = -1.0;              // negative: last snapshot
  double t_min = -1.0;          // negative: first snapshot at or after 10 dx^2
  int substeps = 4;
};

struct ScalarTestConfig {
  double b = 0.0;
  std::string eps1_rule = "min_sigma3_eps0";   // min_sigma3_eps0 | none
  int family_size = 8;          // random band-limited test functions; two bumps are added
  double Y = -1.0;              // negative: last related-flow snapshot
  double sigma = 0.1;
  std::vector<double> p_list{2.0};
};

struct VerifyConfig {
  std::vector<double> sigmas{0.0, 0.1, 0.2};
  std::vector<double> center{0.5, 0.5, 0.5};   // in units of L; the first n entries are used
  double inner = 0.2;                          // ball radii in units of L
  double outer = 0.4;
  std::vector<double> p_list{2.0, 4.0};
  double convergence_sigma = 0.1;
  double min_rate = 0.9;
  double attainment = 1e-2;
  double decay_fraction = 0.05;
};

struct OutputConfig {
  std::string directory = "rdtf_out";
  std::vector<std::string> formats{"json", "csv"};
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  GridConfig grid;
  BackgroundConfig background;
  InitialConfig initial;
  FlowConfig flow;
  DeturckConfig deturck;
  ScalarTestConfig scalar_test;
  VerifyConfig verify;
  OutputConfig output;

  /// Pinning level used for pulled-back initial data.
  double effective_amplitude() const;
  bool writes_csv() const;
};

/// Defaults as a JSON document, formatted like to_json.
std::string default_config_json();

/// Parses a JSON document on top of the defaults. Unknown keys, wrong types and values out of
/// range throw ConfigError.
ExperimentConfig parse_config(const std::string& text);

/// Like parse_config, applying KEY=VALUE overrides (dotted keys, VALUE parsed as JSON or else
/// taken as a string) before validation.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides);

/// Reads a file; a missing file throws ConfigError.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Complete configuration with every key written out.
std::string to_json(const ExperimentConfig& cfg);

/// Throws ConfigError on inconsistent values.
void validate(const ExperimentConfig& cfg);

}  // namespace rdtf
