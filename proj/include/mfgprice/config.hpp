#pragma once

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfgprice/model.hpp"

namespace mfgprice {

// Config problems always carry file and line so the message pinpoints the
// offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& file, int line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

// INI-style reader: [section] headers (dots allowed), key = value entries,
// '#' or ';' comments.  Values stay strings until a typed getter pulls them.
class IniFile {
 public:
  static IniFile parse(std::istream& in, std::string name) {
    IniFile ini;
    ini.name_ = std::move(name);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip_comment(line);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError(ini.name_, lineno, "unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        if (section.empty())
          throw ConfigError(ini.name_, lineno, "empty section name");
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(ini.name_, lineno, "expected 'key = value'");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError(ini.name_, lineno, "empty key");
      std::string full = section.empty() ? key : section + "." + key;
      if (ini.entries_.count(full))
        throw ConfigError(ini.name_, lineno, "duplicate key '" + full + "'");
      ini.entries_[full] = Entry{value, lineno};
    }
    return ini;
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  const std::string& name() const { return name_; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  double number(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    return to_number(key, *e);
  }

  std::uint64_t unsigned_integer(const std::string& key,
                                 std::uint64_t fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    errno = 0;
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(e->value.c_str(), &end, 10);
    // strtoull silently negates "-4"; reject any sign character up front
    if (!e->value.empty() && (e->value[0] == '-' || e->value[0] == '+'))
      throw ConfigError(name_, e->line,
                        "expected nonnegative integer for '" + key + "', got '" +
                            e->value + "'");
    if (errno != 0 || end == e->value.c_str() || *end != '\0')
      throw ConfigError(name_, e->line,
                        "expected nonnegative integer for '" + key + "', got '" +
                            e->value + "'");
    return v;
  }

  std::vector<double> number_list(const std::string& key,
                                  std::vector<double> fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    return to_number_list(key, *e);
  }

  std::string text(const std::string& key, std::string fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    return e->value;
  }

  int line_of(const std::string& key) const {
    const Entry* e = find(key);
    return e ? e->line : 0;
  }

  // Every recognized key must be consumed through a getter; leftovers are
  // reported as errors so typos never silently fall back to defaults.
  void reject_unconsumed() const {
    for (const auto& [key, entry] : entries_) {
      if (!consumed_.count(key))
        throw ConfigError(name_, entry.line, "unknown key '" + key + "'");
    }
  }

 private:
  struct Entry {
    std::string value;
    int line;
  };

  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  double to_number(const std::string& key, const Entry& e) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (errno != 0 || end == e.value.c_str() || *end != '\0')
      throw ConfigError(name_, e.line, "expected number for '" + key +
                                           "', got '" + e.value + "'");
    return v;
  }

  std::vector<double> to_number_list(const std::string& key,
                                     const Entry& e) const {
    std::vector<double> out;
    std::string item;
    std::istringstream in(e.value);
    while (in >> item) {
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (errno != 0 || end == item.c_str() || *end != '\0')
        throw ConfigError(name_, e.line, "expected number list for '" + key +
                                             "', got '" + e.value + "'");
      out.push_back(v);
    }
    if (out.empty())
      throw ConfigError(name_, e.line, "empty value for '" + key + "'");
    return out;
  }

  static std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] == '#' || s[i] == ';') return s.substr(0, i);
    return s;
  }

  static std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  std::string name_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> consumed_;
};

// Experiment description: a base model, the list of terminal-preference
// shifts alpha to sweep, and the numerical parameters.
struct ExperimentConfig {
  ModelSpec model;
  std::vector<double> alphas{0.0};
  std::uint64_t seed = 42;
  double dt_ode = 1e-3;
  double dt_sde = 1e-3;
  std::size_t particles = 10000;
  std::size_t martingale_paths = 2000;
  std::string output_dir = "out";
};

namespace detail {

inline AffineComponent component_from_ini(const IniFile& ini,
                                          const std::string& key, double T) {
  if (!ini.has(key)) return AffineComponent(0.0);
  std::vector<double> values = ini.number_list(key, {});
  if (values.size() == 1) return AffineComponent(values[0]);
  return AffineComponent::tabulated(std::move(values), T);
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_ini(const IniFile& ini) {
  ExperimentConfig cfg;
  cfg.model.c = ini.number("model.c", cfg.model.c);
  cfg.model.T = ini.number("model.T", cfg.model.T);
  cfg.model.q_bar = ini.number("model.q_bar", cfg.model.q_bar);
  const double T = cfg.model.T;
  cfg.model.supply_drift.k0 = detail::component_from_ini(ini, "model.supply_drift.k0", T);
  cfg.model.supply_drift.k1 = detail::component_from_ini(ini, "model.supply_drift.k1", T);
  cfg.model.supply_drift.k2 = detail::component_from_ini(ini, "model.supply_drift.k2", T);
  cfg.model.supply_vol.k0 = detail::component_from_ini(ini, "model.supply_vol.k0", T);
  cfg.model.supply_vol.k1 = detail::component_from_ini(ini, "model.supply_vol.k1", T);
  cfg.model.supply_vol.k2 = detail::component_from_ini(ini, "model.supply_vol.k2", T);

  cfg.model.terminal.c0 = ini.number("model.terminal.c0", 0.0);
  cfg.model.terminal.c1 = {ini.number("model.terminal.c1_x", 0.0),
                           ini.number("model.terminal.c1_q", 0.0),
                           ini.number("model.terminal.c1_w", 0.0)};
  cfg.model.terminal.c2 = {ini.number("model.terminal.c2_xx", 0.0),
                           ini.number("model.terminal.c2_xq", 0.0),
                           ini.number("model.terminal.c2_xw", 0.0),
                           ini.number("model.terminal.c2_qq", 0.0),
                           ini.number("model.terminal.c2_qw", 0.0),
                           ini.number("model.terminal.c2_ww", 0.0)};

  const std::string family = ini.text("model.agents.family", "gaussian");
  if (family == "gaussian") {
    cfg.model.agents.family = InitialDistribution::Family::gaussian;
  } else if (family == "point") {
    cfg.model.agents.family = InitialDistribution::Family::point;
  } else if (family == "samples") {
    cfg.model.agents.family = InitialDistribution::Family::samples;
  } else {
    throw ConfigError(ini.name(), ini.line_of("model.agents.family"),
                      "unknown agents family '" + family +
                          "' (expected gaussian, point, or samples)");
  }
  cfg.model.agents.mean = ini.number("model.agents.mean", 0.0);
  cfg.model.agents.variance = ini.number("model.agents.variance", 1.0);
  cfg.model.agents.samples = ini.number_list("model.agents.samples", {});
  cfg.model.agents.seed = ini.unsigned_integer("model.agents.seed", 1);

  cfg.alphas = ini.number_list("experiment.alphas", cfg.alphas);
  cfg.seed = ini.unsigned_integer("experiment.seed", cfg.seed);
  cfg.dt_ode = ini.number("experiment.dt_ode", cfg.dt_ode);
  cfg.dt_sde = ini.number("experiment.dt_sde", cfg.dt_sde);
  cfg.particles = static_cast<std::size_t>(
      ini.unsigned_integer("experiment.particles", cfg.particles));
  cfg.martingale_paths = static_cast<std::size_t>(
      ini.unsigned_integer("experiment.martingale_paths", cfg.martingale_paths));
  cfg.output_dir = ini.text("experiment.output_dir", cfg.output_dir);

  ini.reject_unconsumed();
  return cfg;
}

inline ExperimentConfig parse_experiment_config(std::istream& in,
                                                const std::string& name) {
  return experiment_config_from_ini(IniFile::parse(in, name));
}

inline ExperimentConfig parse_experiment_config(const std::string& path) {
  return experiment_config_from_ini(IniFile::parse_file(path));
}

// Experiment-level validation on top of model validation.
inline std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> violations = validate(cfg.model).violations;
  if (cfg.alphas.empty()) violations.push_back("alphas must not be empty");
  for (double a : cfg.alphas)
    if (!std::isfinite(a)) {
      violations.push_back("alphas must be finite");
      break;
    }
  if (!(cfg.dt_ode > 0.0) || !(cfg.model.T / cfg.dt_ode >= 10.0 - 1e-9))
    violations.push_back("dt_ode must divide [0, T] into at least 10 steps");
  if (!(cfg.dt_sde > 0.0) || !(cfg.model.T / cfg.dt_sde >= 1.0))
    violations.push_back("dt_sde must be positive and at most T");
  if (cfg.particles < 2) violations.push_back("particles must be at least 2");
  if (cfg.martingale_paths < 100)
    violations.push_back("martingale_paths must be at least 100");
  return violations;
}

}  // namespace mfgprice
