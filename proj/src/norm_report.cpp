#include "rdtf/norm_report.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rdtf/errors.hpp"

namespace rdtf {

namespace {

// JSON has no inf/nan; keep them readable as strings
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double read_number(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw StructuralError("report: expected a number, got " + v.dump());
}

}  // namespace

bool NormReport::passed() const {
  for (const auto& [k, v] : verdicts)
    if (!v) return false;
  return true;
}

void NormReport::require_finite() const {
  auto bad = [&](const std::string& what) { throw StructuralError("report '" + name + "': non-finite " + what); };
  for (const auto& [k, v] : values)
    if (!std::isfinite(v)) bad(k);
  for (const auto& [k, s] : series)
    for (double v : s.value)
      if (!std::isfinite(v)) bad(k);
  for (const auto& [k, f] : fits)
    if (!std::isfinite(f.exponent) || !std::isfinite(f.constant)) bad(k);
}

std::string NormReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["metadata"] = metadata;
  nlohmann::ordered_json vals = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values) vals[k] = number(v);
  j["values"] = vals;
  nlohmann::ordered_json ser = nlohmann::ordered_json::object();
  for (const auto& [k, s] : series) {
    nlohmann::ordered_json e;
    e["t"] = s.t;
    nlohmann::json v = nlohmann::json::array();
    for (double x : s.value) v.push_back(number(x));
    e["value"] = v;
    ser[k] = e;
  }
  j["series"] = ser;
  nlohmann::ordered_json fit = nlohmann::ordered_json::object();
  for (const auto& [k, f] : fits)
    fit[k] = {{"exponent", number(f.exponent)}, {"constant", number(f.constant)},
              {"residual", number(f.residual)}, {"points", f.points}};
  j["fits"] = fit;
  j["verdicts"] = verdicts;
  j["passed"] = passed();
  return j.dump(2) + "\n";
}

NormReport NormReport::from_json(const std::string& text) {
  NormReport rep;
  try {
    const auto j = nlohmann::json::parse(text);
    rep.name = j.at("name").get<std::string>();
    rep.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& [k, v] : j.at("values").items()) rep.values[k] = read_number(v);
    for (const auto& [k, e] : j.at("series").items()) {
      Series s;
      s.t = e.at("t").get<std::vector<double>>();
      for (const auto& v : e.at("value")) s.value.push_back(read_number(v));
      if (s.t.size() != s.value.size()) throw StructuralError("report: series '" + k + "' has ragged columns");
      rep.series[k] = std::move(s);
    }
    for (const auto& [k, f] : j.at("fits").items()) {
      PowerFit pf;
      pf.exponent = read_number(f.at("exponent"));
      pf.constant = read_number(f.at("constant"));
      pf.residual = read_number(f.at("residual"));
      pf.points = f.at("points").get<int>();
      rep.fits[k] = pf;
    }
    rep.verdicts = j.at("verdicts").get<std::map<std::string, bool>>();
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("report: malformed JSON: ") + e.what());
  }
  return rep;
}

std::string NormReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "series,t,value\n";
  for (const auto& [k, s] : series)
    for (std::size_t i = 0; i < s.t.size(); ++i) os << k << ',' << s.t[i] << ',' << s.value[i] << '\n';
  return os.str();
}

}  // namespace rdtf
