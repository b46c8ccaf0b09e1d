#pragma once

// File-level workflows behind the command-line tool: simulate, compare,
// invert and fit-params. Every written file carries enough header metadata to
// be regenerated exactly.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <exception>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "cavlab/analytic.hpp"
#include "cavlab/config.hpp"
#include "cavlab/core.hpp"
#include "cavlab/error.hpp"
#include "cavlab/inversion.hpp"
#include "cavlab/lindblad.hpp"
#include "cavlab/trace_io.hpp"

namespace cavlab {

inline constexpr const char* kGenerator = "cavlab 1.0";
inline constexpr double kDefaultTailMass = 1e-12;

/// Photon truncation used for a scenario.
inline std::size_t scenario_nmax(const ScenarioConfig& cfg) {
  return cfg.nmax ? *cfg.nmax : coherent_nmax_for(cfg.nbar, kDefaultTailMass);
}

/// P_eg samples for a scenario on its uniform time grid (ms).
inline Trace simulate_trace(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto times = uniform_times(cfg.t_end, cfg.samples);
  const auto dist = poisson_distribution(cfg.nbar, scenario_nmax(cfg));
  const SystemParams& p = cfg.params;

  std::vector<double> values(times.size());
  switch (cfg.solver) {
    case Solver::ideal:
      for (std::size_t k = 0; k < times.size(); ++k) values[k] = rabi_ideal(dist, p.omega, times[k]);
      break;
    case Solver::phenomenological:
      for (std::size_t k = 0; k < times.size(); ++k)
        values[k] = rabi_phenomenological(dist, p.omega, {*cfg.damping}, times[k]);
      break;
    case Solver::zeroth:
      for (std::size_t k = 0; k < times.size(); ++k) values[k] = peg_zeroth(dist, p, times[k]);
      break;
    case Solver::first:
      for (std::size_t k = 0; k < times.size(); ++k) values[k] = peg_first(dist, p, times[k]);
      break;
    case Solver::exact: {
      std::optional<EvolutionConfig> ec;
      if (cfg.dt) {
        ec = EvolutionConfig{};
        ec->t_end = cfg.t_end;
        ec->dt = *cfg.dt;
      }
      values = peg_exact(dist, p, times, ec);
      break;
    }
  }
  // Perturbative values may stray outside [0, 1] by O(kappa^2 t^2); they are kept as computed.
  Trace trace(times, std::move(values), Trace::kMeasuredSlack);
  return cfg.dark_counts ? apply_dark_counts(trace, p.alpha) : trace;
}

inline Metadata scenario_metadata(const ScenarioConfig& cfg) {
  Metadata m;
  m.set("time_unit", std::string("us"));
  m.set("solver", std::string(to_string(cfg.solver)));
  m.set("omega", cfg.params.omega);
  m.set("gamma", cfg.params.gamma);
  m.set("kappa", cfg.params.kappa);
  m.set("alpha", cfg.params.alpha);
  m.set("nbar", cfg.nbar);
  m.set("nmax", std::to_string(scenario_nmax(cfg)));
  m.set("label", cfg.label);
  m.set("t_end_ms", cfg.t_end);
  m.set("samples", std::to_string(cfg.samples));
  m.set("dark_counts", std::string(cfg.dark_counts ? "true" : "false"));
  if (cfg.damping) m.set("damping", *cfg.damping);
  if (cfg.dt) m.set("dt_ms", *cfg.dt);
  m.set("generator", std::string(kGenerator));
  return m;
}

namespace detail {

inline bool parse_flag(const std::string& text, const std::string& key) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ValidationError("header key '" + key + "' must be true or false, got '" + text + "'");
}

inline std::size_t parse_count(const std::string& text, const std::string& key) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError("header key '" + key + "' must be a non-negative integer, got '" + text + "'");
  return v;
}

}  // namespace detail

/// Rebuilds the scenario that produced a simulate output from its header.
inline ScenarioConfig scenario_from_metadata(const Metadata& m) {
  ScenarioConfig cfg;
  cfg.solver = parse_solver(m.require("solver"));
  cfg.params.omega = m.number("omega");
  cfg.params.gamma = m.number("gamma");
  cfg.params.kappa = m.number("kappa");
  cfg.params.alpha = m.number("alpha");
  cfg.nbar = m.number("nbar");
  cfg.label = m.require("label");
  cfg.t_end = m.number("t_end_ms");
  cfg.samples = detail::parse_count(m.require("samples"), "samples");
  cfg.nmax = detail::parse_count(m.require("nmax"), "nmax");
  cfg.dark_counts = detail::parse_flag(m.require("dark_counts"), "dark_counts");
  cfg.damping = m.optional_number("damping");
  cfg.dt = m.optional_number("dt_ms");
  return cfg;
}

inline TraceFile run_simulate(const ScenarioConfig& cfg, const std::string& out_path) {
  TraceFile file;
  file.trace = simulate_trace(cfg);
  file.metadata = scenario_metadata(cfg);
  file.time_unit = TimeUnit::us;
  write_trace_file(out_path, file);
  return file;
}

/// Simulates every (scenario, path) job concurrently; each job owns its file.
/// The first failure (in job order) is rethrown after all jobs finish.
inline std::vector<TraceFile> run_simulate_all(const std::vector<std::pair<ScenarioConfig, std::string>>& jobs) {
  std::vector<std::future<TraceFile>> futures;
  futures.reserve(jobs.size());
  for (const auto& job : jobs)
    futures.push_back(std::async(std::launch::async, [&job] { return run_simulate(job.first, job.second); }));
  std::vector<TraceFile> out;
  std::exception_ptr first_error;
  for (auto& f : futures) {
    try {
      out.push_back(f.get());
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

/// Every applicable solver on one grid, as columns t_us,ideal,[phenomenological,]zeroth,first,exact.
inline std::string run_compare(const ScenarioConfig& cfg, const std::string& out_path) {
  cfg.validate();
  std::vector<Solver> solvers{Solver::ideal};
  if (cfg.damping) solvers.push_back(Solver::phenomenological);
  solvers.insert(solvers.end(), {Solver::zeroth, Solver::first, Solver::exact});

  std::vector<std::future<Trace>> columns;
  for (Solver s : solvers) {
    ScenarioConfig c = cfg;
    c.solver = s;
    columns.push_back(std::async(std::launch::async, [c] { return simulate_trace(c); }));
  }
  std::vector<Trace> traces;
  for (auto& f : columns) traces.push_back(f.get());

  Metadata m = scenario_metadata(cfg);
  m.set("solver", std::string("compare"));
  std::string names = "t";
  for (Solver s : solvers) names += std::string(",") + to_string(s);
  m.set("columns", names);

  std::ostringstream os;
  for (const auto& [key, value] : m.entries()) os << "# " << key << ": " << value << '\n';
  const auto times = traces.front().times();
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << format_scaled(times[k], 3);
    for (const auto& tr : traces) os << ',' << format_number(tr.values()[k]);
    os << '\n';
  }
  write_text_file(out_path, os.str());
  return os.str();
}

/// Model parameters for a trace file: dark counts are dropped from the model
/// when the header says the data were generated without them.
inline SystemParams model_params_for(const TraceFile& file, SystemParams params) {
  if (const auto dc = file.metadata.get("dark_counts"); dc && !detail::parse_flag(*dc, "dark_counts"))
    params.alpha = 0.0;
  return params;
}

inline InversionResult run_invert(const std::string& trace_path, const SystemParams& params, const FitConfig& cfg,
                                  const std::string& out_path) {
  const TraceFile file = read_trace_file(trace_path);
  const SystemParams model = model_params_for(file, params);
  const InversionResult r = invert_distribution(file.trace, model, cfg);

  Metadata m;
  m.set("source", trace_path);
  if (auto label = file.metadata.get("label")) m.set("label", *label);
  m.set("omega", model.omega);
  m.set("gamma", model.gamma);
  m.set("kappa", model.kappa);
  m.set("alpha", model.alpha);
  m.set("nmax_fit", std::to_string(cfg.nmax_fit));
  m.set("normalize", std::string(cfg.normalize ? "true" : "false"));
  m.set("residual", r.residual);
  m.set("nbar_best", r.nbar_best);
  m.set("poisson_sse", r.poisson_sse);
  m.set("generator", std::string(kGenerator));
  m.set("columns", std::string("n,p_tilde,weight,poisson_best"));

  std::ostringstream os;
  for (const auto& [key, value] : m.entries()) os << "# " << key << ": " << value << '\n';
  const auto best =
      poisson_distribution(r.nbar_best, std::max(cfg.nmax_fit, coherent_nmax_for(r.nbar_best, kDefaultTailMass)));
  for (std::size_t n = 0; n <= cfg.nmax_fit; ++n)
    os << n << ',' << format_number(r.distribution.probs()[n]) << ',' << format_number(r.weights[n]) << ','
       << format_number(best.probs()[n]) << '\n';
  write_text_file(out_path, os.str());
  return r;
}

/// Photon statistics assumed for a fit-params input: Poissonian with the
/// header (or override) mean and truncation.
inline PhotonDistribution assumed_distribution(const TraceFile& file, std::optional<double> nbar_override) {
  double nbar = 0.0;
  if (nbar_override) {
    nbar = *nbar_override;
  } else if (file.metadata.get("nbar")) {
    nbar = file.metadata.number("nbar");
  } else {
    throw ValidationError("trace has no 'nbar' header; pass the mean photon number explicitly");
  }
  std::size_t nmax = coherent_nmax_for(nbar, kDefaultTailMass);
  if (!nbar_override)
    if (auto text = file.metadata.get("nmax")) nmax = detail::parse_count(*text, "nmax");
  return poisson_distribution(nbar, nmax);
}

inline ParamFitResult run_fit_params(const std::vector<std::string>& trace_paths, const SystemParams& init,
                                     const std::vector<FitParameter>& free, const FitConfig& cfg,
                                     const std::string& out_path, std::optional<double> nbar_override = {}) {
  if (trace_paths.empty()) throw ValidationError("fit-params needs at least one trace file");
  std::vector<ObservedTrace> data;
  for (const auto& path : trace_paths) {
    const TraceFile file = read_trace_file(path);
    data.push_back({file.trace, assumed_distribution(file, nbar_override)});
  }
  const ParamFitResult r = fit_params(data, init, free, cfg);

  std::ostringstream os;
  os << "# fit-params report\n";
  os << "mode: " << (free.empty() ? "evaluate" : "fit") << '\n';
  std::string names;
  for (auto p : free) names += (names.empty() ? "" : ",") + std::string(to_string(p));
  os << "free: " << names << '\n';
  os << "traces: " << trace_paths.size() << '\n';
  for (std::size_t i = 0; i < trace_paths.size(); ++i) os << "trace_" << i << ": " << trace_paths[i] << '\n';
  os << "omega: " << format_number(r.params.omega) << '\n';
  os << "gamma: " << format_number(r.params.gamma) << '\n';
  os << "kappa: " << format_number(r.params.kappa) << '\n';
  os << "alpha: " << format_number(r.params.alpha) << '\n';
  os << "residual: " << format_number(r.residual) << '\n';
  os << "iterations: " << r.iterations << '\n';
  os << "converged: " << (r.converged ? "true" : "false") << '\n';
  for (const auto& [p, c] : r.curvature) os << "curvature_" << to_string(p) << ": " << format_number(c) << '\n';
  os << "generator: " << kGenerator << '\n';
  write_text_file(out_path, os.str());
  return r;
}

/// Process exit status for an exception escaping a workflow.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return exit_code::kIo;
  if (dynamic_cast<const ValidationError*>(&e)) return exit_code::kValidation;
  if (dynamic_cast<const ConvergenceError*>(&e)) return exit_code::kConvergence;
  if (dynamic_cast<const std::system_error*>(&e)) return exit_code::kIo;
  return exit_code::kInternal;
}

}  // namespace cavlab
