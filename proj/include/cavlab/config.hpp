#pragma once

// Scenario and fit settings, read from a TOML file:
//
//   [params]            omega, gamma, kappa, alpha
//   [scenario.<label>]  nbar, solver, t_end (ms), samples, dark_counts, nmax,
//                       damping, dt, and any [params] key as an override
//   [fit]               nmax_fit, normalize, max_iter, conv_tol, free

#include <cstddef>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <toml.hpp>

#include "cavlab/core.hpp"
#include "cavlab/error.hpp"
#include "cavlab/inversion.hpp"

namespace cavlab {

enum class Solver { ideal, phenomenological, zeroth, first, exact };

inline const char* to_string(Solver s) {
  switch (s) {
    case Solver::ideal:
      return "ideal";
    case Solver::phenomenological:
      return "phenomenological";
    case Solver::zeroth:
      return "zeroth";
    case Solver::first:
      return "first";
    case Solver::exact:
      return "exact";
  }
  return "?";
}

inline Solver parse_solver(const std::string& s) {
  for (Solver v : {Solver::ideal, Solver::phenomenological, Solver::zeroth, Solver::first, Solver::exact})
    if (s == to_string(v)) return v;
  throw ValidationError("unknown solver '" + s + "' (expected ideal, phenomenological, zeroth, first or exact)");
}

struct ScenarioConfig {
  std::string label = "scenario";
  double nbar = 0.0;
  SystemParams params;
  double t_end = 0.09;  ///< ms
  std::size_t samples = 181;
  Solver solver = Solver::first;
  bool dark_counts = false;
  std::optional<std::size_t> nmax;  ///< photon truncation; default keeps a Poissonian tail below 1e-12
  std::optional<double> damping;    ///< Gamma for the phenomenological solver, ms^-1
  std::optional<double> dt;         ///< step for the exact solver, ms

  void validate() const {
    params.validate();
    if (samples < 2) throw ValidationError("samples must be at least 2");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("t_end must be positive");
    if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw ValidationError("nbar must be non-negative");
    if (solver == Solver::phenomenological && !damping)
      throw ValidationError("the phenomenological solver needs a damping rate");
    if (damping && !(*damping >= 0.0)) throw ValidationError("damping must be non-negative");
    if (dt && !(*dt > 0.0)) throw ValidationError("dt must be positive");
  }
};

struct ConfigFile {
  SystemParams params;
  std::vector<ScenarioConfig> scenarios;
  FitConfig fit;
  std::vector<FitParameter> free;
  bool has_free = false;
};

namespace detail {

inline void reject_unknown(const toml::table& t, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, node] : t) {
    (void)node;
    if (!known.count(std::string(key.str())))
      throw ValidationError("unknown key '" + std::string(key.str()) + "' in " + where);
  }
}

inline std::optional<double> toml_number(const toml::table& t, const char* key, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->value<double>()) return *v;
  throw ValidationError(where + "." + key + " must be a number");
}

inline std::optional<std::size_t> toml_count(const toml::table& t, const char* key, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  const auto v = node->value<std::int64_t>();
  if (!v || *v < 0) throw ValidationError(where + "." + key + " must be a non-negative integer");
  return static_cast<std::size_t>(*v);
}

inline std::optional<bool> toml_bool(const toml::table& t, const char* key, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->value<bool>()) return *v;
  throw ValidationError(where + "." + key + " must be true or false");
}

inline std::optional<std::string> toml_string(const toml::table& t, const char* key, const std::string& where) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  if (auto v = node->value<std::string>()) return *v;
  throw ValidationError(where + "." + key + " must be a string");
}

inline void read_params(const toml::table& t, SystemParams& p, const std::string& where) {
  if (auto v = toml_number(t, "omega", where)) p.omega = *v;
  if (auto v = toml_number(t, "gamma", where)) p.gamma = *v;
  if (auto v = toml_number(t, "kappa", where)) p.kappa = *v;
  if (auto v = toml_number(t, "alpha", where)) p.alpha = *v;
}

}  // namespace detail

inline ConfigFile parse_config(const toml::table& root) {
  detail::reject_unknown(root, {"params", "scenario", "fit"}, "config");
  ConfigFile cfg;

  if (const auto* params = root.get_as<toml::table>("params")) {
    detail::reject_unknown(*params, {"omega", "gamma", "kappa", "alpha"}, "[params]");
    detail::read_params(*params, cfg.params, "params");
  } else if (root.get("params")) {
    throw ValidationError("[params] must be a table");
  }

  if (const auto* scenarios = root.get_as<toml::table>("scenario")) {
    for (const auto& [key, node] : *scenarios) {
      const std::string label(key.str());
      const std::string where = "scenario." + label;
      const auto* t = node.as_table();
      if (!t) throw ValidationError("[" + where + "] must be a table");
      detail::reject_unknown(*t,
                             {"nbar", "solver", "t_end", "samples", "dark_counts", "nmax", "damping", "dt", "omega",
                              "gamma", "kappa", "alpha"},
                             "[" + where + "]");
      ScenarioConfig s;
      s.label = label;
      s.params = cfg.params;
      detail::read_params(*t, s.params, where);
      if (auto v = detail::toml_number(*t, "nbar", where)) s.nbar = *v;
      if (auto v = detail::toml_string(*t, "solver", where)) s.solver = parse_solver(*v);
      if (auto v = detail::toml_number(*t, "t_end", where)) s.t_end = *v;
      if (auto v = detail::toml_count(*t, "samples", where)) s.samples = *v;
      if (auto v = detail::toml_bool(*t, "dark_counts", where)) s.dark_counts = *v;
      s.nmax = detail::toml_count(*t, "nmax", where);
      s.damping = detail::toml_number(*t, "damping", where);
      s.dt = detail::toml_number(*t, "dt", where);
      cfg.scenarios.push_back(std::move(s));
    }
  } else if (root.get("scenario")) {
    throw ValidationError("[scenario] must be a table of tables");
  }

  if (const auto* fit = root.get_as<toml::table>("fit")) {
    detail::reject_unknown(*fit, {"nmax_fit", "normalize", "max_iter", "conv_tol", "free"}, "[fit]");
    if (auto v = detail::toml_count(*fit, "nmax_fit", "fit")) cfg.fit.nmax_fit = *v;
    if (auto v = detail::toml_bool(*fit, "normalize", "fit")) cfg.fit.normalize = *v;
    if (auto v = detail::toml_count(*fit, "max_iter", "fit")) cfg.fit.max_iter = *v;
    if (auto v = detail::toml_number(*fit, "conv_tol", "fit")) cfg.fit.conv_tol = *v;
    if (const auto* node = fit->get("free")) {
      const auto* arr = node->as_array();
      if (!arr) throw ValidationError("fit.free must be an array of parameter names");
      cfg.has_free = true;
      for (const auto& item : *arr) {
        const auto name = item.value<std::string>();
        if (!name) throw ValidationError("fit.free entries must be strings");
        cfg.free.push_back(parse_fit_parameter(*name));
      }
    }
  }
  return cfg;
}

inline ConfigFile parse_config_text(const std::string& text, const std::string& source = "<config>") {
  try {
    return parse_config(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    throw ValidationError(source + ":" + std::to_string(e.source().begin.line) + ": " +
                          std::string(e.description()));
  }
}

inline ConfigFile load_config(const std::string& path) {
  try {
    return parse_config(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    const auto d = e.description();
    if (d.find("File could not be opened") != std::string_view::npos)
      throw IoError("cannot open config file '" + path + "'");
    throw ValidationError(path + ":" + std::to_string(e.source().begin.line) + ": " + std::string(d));
  }
}

/// Explicit path, else $CAVLAB_CONFIG, else none.
inline std::optional<std::string> resolve_config_path(const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* env = std::getenv("CAVLAB_CONFIG"); env && *env) return std::string(env);
  return std::nullopt;
}

}  // namespace cavlab
