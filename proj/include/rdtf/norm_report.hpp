#pragma once

// Labeled measurements: scalar entries, time series, fitted power laws and verdicts.

#include <map>
#include <string>
#include <vector>

namespace rdtf {

struct Series {
  std::vector<double> t;
  std::vector<double> value;

  void push(double time, double v) {
    t.push_back(time);
    value.push_back(v);
  }
};

struct PowerFit {
  double exponent = 0.0;   // q in C t^q
  double constant = 0.0;   // C
  double residual = 0.0;   // rms of log residuals
  int points = 0;
};

struct NormReport {
  std::string name;
  std::map<std::string, std::string> metadata;   // grid, dt, scheme, ...
  std::map<std::string, double> values;
  std::map<std::string, Series> series;
  std::map<std::string, PowerFit> fits;
  std::map<std::string, bool> verdicts;

  /// True unless some verdict is false.
  bool passed() const;
  /// Throws StructuralError if any stored number is not finite.
  void require_finite() const;

  std::string to_json() const;
  /// Inverse of to_json; the "passed" field is recomputed, not read. Throws StructuralError.
  static NormReport from_json(const std::string& text);
  /// One row per series point: series,t,value
  std::string to_csv() const;
};

}  // namespace rdtf
