#pragma once

// Experiment configuration: a flat, typed `key = value` file. Unknown keys and
// malformed values are rejected with the key named; every field has a default
// and the full set is written into each record.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bergman_lab/core.hpp"

namespace bergman_lab::harness {

struct ExperimentConfig {
  std::string space = "sphere";            // sphere | product
  std::string preset = "fs+logpole(0,0.3)";
  std::vector<int> p_ladder{8, 16, 32};
  int samples = 200;
  std::uint64_t seed = 20240601;
  int threads = 1;
  double quad_tol = 1e-9;
  double cluster_tol = 1e-8;
  double residual_tol = 1e-6;
  std::vector<std::string> battery{"all"};
  double rate_A = 10.0;
  double rate_exponent = 1.0;
  double rate_c = 1.0;
  int pl_sections = 50;
  int bertini_pairs = 500;
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string out = "out";

  ModelSpace model_space() const { return space == "product" ? ModelSpace::product() : ModelSpace::sphere(); }
  bool battery_selects(const std::string& name) const {
    for (const auto& b : battery)
      if (b == "all" || b == name) return true;
    return false;
  }
  bool runs_criterion(int k) const {
    for (int c : criteria)
      if (c == k) return true;
    return false;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& what, const std::string& v) {
  throw ConfigError("config key '" + key + "': expected " + what + ", got '" + v + "'");
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    bad_value(key, "an integer", v);
  }
  if (pos != v.size()) bad_value(key, "an integer", v);
  return x;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    bad_value(key, "a number", v);
  }
  if (pos != v.size() || !std::isfinite(x)) bad_value(key, "a finite number", v);
  return x;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<int>(parse_int(key, item)));
  if (out.empty()) bad_value(key, "a comma-separated list of integers", v);
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"space", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v != "sphere" && v != "product") bad_value(k, "'sphere' or 'product'", v);
         c.space = v;
       }},
      {"preset", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v.empty()) bad_value(k, "a preset name", v);
         c.preset = v;
       }},
      {"p_ladder", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.p_ladder = parse_int_list(k, v); }},
      {"samples", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.samples = static_cast<int>(parse_int(k, v)); }},
      {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto x = parse_int(k, v);
         if (x < 0) bad_value(k, "a non-negative integer", v);
         c.seed = static_cast<std::uint64_t>(x);
       }},
      {"threads", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.threads = static_cast<int>(parse_int(k, v)); }},
      {"quad_tol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.quad_tol = parse_double(k, v); }},
      {"cluster_tol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.cluster_tol = parse_double(k, v); }},
      {"residual_tol", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.residual_tol = parse_double(k, v); }},
      {"battery", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.battery = split_list(v);
         if (c.battery.empty()) bad_value(k, "a comma-separated list of battery names", v);
       }},
      {"rate_A", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rate_A = parse_double(k, v); }},
      {"rate_exponent", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rate_exponent = parse_double(k, v); }},
      {"rate_c", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rate_c = parse_double(k, v); }},
      {"pl_sections", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.pl_sections = static_cast<int>(parse_int(k, v)); }},
      {"bertini_pairs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.bertini_pairs = static_cast<int>(parse_int(k, v)); }},
      {"criteria", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.criteria = parse_int_list(k, v); }},
      {"out", [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v.empty()) bad_value(k, "a path", v);
         c.out = v;
       }},
  };
  return table;
}

}  // namespace detail

// Range checks that do not depend on which operation runs.
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError("config key '" + key + "': " + msg); };
  for (int p : c.p_ladder)
    if (p < 1) fail("p_ladder", "every p must be ≥ 1");
  for (size_t k = 1; k < c.p_ladder.size(); ++k)
    if (c.p_ladder[k] <= c.p_ladder[k - 1]) fail("p_ladder", "must be strictly increasing");
  if (c.samples < 30) fail("samples", "N ≥ 30 is required");
  if (c.threads < 1) fail("threads", "must be ≥ 1");
  if (!(c.quad_tol > 0.0)) fail("quad_tol", "must be positive");
  if (!(c.cluster_tol > 0.0)) fail("cluster_tol", "must be positive");
  if (!(c.residual_tol > 0.0)) fail("residual_tol", "must be positive");
  if (!(c.rate_A > 0.0)) fail("rate_A", "must be positive");
  if (!(c.rate_exponent > 0.0)) fail("rate_exponent", "must be positive");
  if (!(c.rate_c > 0.0)) fail("rate_c", "must be positive");
  if (c.pl_sections < 1) fail("pl_sections", "must be ≥ 1");
  if (c.bertini_pairs < 1) fail("bertini_pairs", "must be ≥ 1");
  for (int k : c.criteria)
    if (k < 1 || k > 9) fail("criteria", "criteria are numbered 1 to 9");
}

// Applies one `key = value` assignment.
inline void set_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto& table = detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(c, key, value);
}

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    set_key(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

// Every field, defaults included.
inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"space", c.space},           {"preset", c.preset},
          {"p_ladder", c.p_ladder},     {"samples", c.samples},
          {"seed", c.seed},             {"threads", c.threads},
          {"quad_tol", c.quad_tol},     {"cluster_tol", c.cluster_tol},
          {"residual_tol", c.residual_tol}, {"battery", c.battery},
          {"rate_A", c.rate_A},         {"rate_exponent", c.rate_exponent},
          {"rate_c", c.rate_c},         {"pl_sections", c.pl_sections},
          {"bertini_pairs", c.bertini_pairs}, {"criteria", c.criteria},
          {"out", c.out}};
}

// The config file text equivalent to `c`.
inline std::string to_config_text(const ExperimentConfig& c) {
  auto join = [](const auto& v) {
    std::ostringstream os;
    for (size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    return os.str();
  };
  auto num = [](double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };
  std::ostringstream os;
  os << "space = " << c.space << "\npreset = " << c.preset << "\np_ladder = " << join(c.p_ladder)
     << "\nsamples = " << c.samples << "\nseed = " << c.seed << "\nthreads = " << c.threads
     << "\nquad_tol = " << num(c.quad_tol) << "\ncluster_tol = " << num(c.cluster_tol)
     << "\nresidual_tol = " << num(c.residual_tol) << "\nbattery = " << join(c.battery)
     << "\nrate_A = " << num(c.rate_A) << "\nrate_exponent = " << num(c.rate_exponent)
     << "\nrate_c = " << num(c.rate_c) << "\npl_sections = " << c.pl_sections
     << "\nbertini_pairs = " << c.bertini_pairs << "\ncriteria = " << join(c.criteria) << "\nout = " << c.out << "\n";
  return os.str();
}

// Config text from a record's config snapshot; every key must be known.
inline std::string config_text_from_json(const nlohmann::json& j) {
  std::ostringstream os;
  for (const auto& [key, v] : j.items()) {
    os << key << " = ";
    if (v.is_array()) {
      for (size_t k = 0; k < v.size(); ++k) {
        os << (k ? "," : "");
        if (v[k].is_string()) os << v[k].get<std::string>();
        else os << v[k].dump();
      }
    } else if (v.is_string()) {
      os << v.get<std::string>();
    } else {
      os << v.dump();
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace bergman_lab::harness
