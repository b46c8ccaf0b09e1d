// cavlab: simulate, compare and invert Rabi-oscillation traces of an atom in a
// lossy, dephasing cavity.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cavlab/cavlab.hpp"

namespace {

using namespace cavlab;

struct ParamFlags {
  std::optional<double> omega, gamma, kappa, alpha;

  void add(CLI::App* cmd) {
    cmd->add_option("--omega", omega, "vacuum Rabi coupling Omega (ms^-1)");
    cmd->add_option("--gamma", gamma, "collision dephasing rate (ms^-1)");
    cmd->add_option("--kappa", kappa, "cavity leakage rate (ms^-1)");
    cmd->add_option("--alpha", alpha, "dark-count rate (ms^-1)");
  }

  void apply(SystemParams& p) const {
    if (omega) p.omega = *omega;
    if (gamma) p.gamma = *gamma;
    if (kappa) p.kappa = *kappa;
    if (alpha) p.alpha = *alpha;
  }
};

struct ScenarioFlags {
  std::vector<std::string> scenarios;
  std::optional<std::string> label;
  std::optional<double> nbar, t_end, damping, dt;
  std::optional<std::string> solver;
  std::optional<std::size_t> samples, nmax;
  bool dark_counts = false;
  CLI::Option* dark_opt = nullptr;

  void add(CLI::App* cmd, bool with_solver) {
    cmd->add_option("--scenario", scenarios, "scenario label(s) from the config file (default: all)");
    cmd->add_option("--label", label, "label for a scenario built from flags");
    cmd->add_option("--nbar", nbar, "mean photon number of the coherent field");
    if (with_solver) cmd->add_option("--solver", solver, "ideal | phenomenological | zeroth | first | exact");
    cmd->add_option("--t-end", t_end, "final time (ms)");
    cmd->add_option("--samples", samples, "number of samples on [0, t-end]");
    cmd->add_option("--nmax", nmax, "photon-number truncation");
    dark_opt = cmd->add_flag("--dark-counts,!--no-dark-counts", dark_counts, "apply the e^{-alpha t} dark-count factor");
    cmd->add_option("--damping", damping, "Gamma for the phenomenological solver (ms^-1)");
    cmd->add_option("--dt", dt, "integration step for the exact solver (ms)");
  }

  void apply(ScenarioConfig& s) const {
    if (label) s.label = *label;
    if (nbar) s.nbar = *nbar;
    if (solver) s.solver = parse_solver(*solver);
    if (t_end) s.t_end = *t_end;
    if (samples) s.samples = *samples;
    if (nmax) s.nmax = *nmax;
    if (dark_opt->count() > 0) s.dark_counts = dark_counts;
    if (damping) s.damping = *damping;
    if (dt) s.dt = *dt;
  }
};

ConfigFile base_config(const std::string& config_path) {
  if (auto path = resolve_config_path(config_path)) return load_config(*path);
  return {};
}

std::vector<ScenarioConfig> select_scenarios(const ConfigFile& file, const ScenarioFlags& sf, const ParamFlags& pf) {
  std::vector<ScenarioConfig> out;
  if (!sf.scenarios.empty()) {
    for (const auto& name : sf.scenarios) {
      bool found = false;
      for (const auto& s : file.scenarios)
        if (s.label == name) {
          out.push_back(s);
          found = true;
        }
      if (!found) throw ValidationError("no scenario '" + name + "' in the config file");
    }
  } else if (!file.scenarios.empty()) {
    out = file.scenarios;
  } else {
    ScenarioConfig s;
    s.params = file.params;
    out.push_back(s);
  }
  for (auto& s : out) {
    pf.apply(s.params);
    sf.apply(s);
  }
  return out;
}

FitConfig fit_config(const ConfigFile& file, std::optional<std::size_t> nmax_fit, bool no_normalize,
                     std::optional<std::size_t> max_iter) {
  FitConfig cfg = file.fit;
  if (nmax_fit) cfg.nmax_fit = *nmax_fit;
  if (no_normalize) cfg.normalize = false;
  if (max_iter) cfg.max_iter = *max_iter;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Atom-cavity Rabi-oscillation simulation and photon-statistics inversion"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "TOML config file (default: $CAVLAB_CONFIG)");

  auto* simulate = app.add_subcommand("simulate", "write P_eg(t) traces");
  ParamFlags sim_params;
  ScenarioFlags sim_scenario;
  std::string sim_out;
  sim_params.add(simulate);
  sim_scenario.add(simulate, true);
  simulate->add_option("--out", sim_out,
                       "output file for one scenario, or directory for several (default: <label>.csv in .)");

  auto* compare = app.add_subcommand("compare", "tabulate every solver on one time grid");
  ParamFlags cmp_params;
  ScenarioFlags cmp_scenario;
  std::string cmp_out = "compare.csv";
  cmp_params.add(compare);
  cmp_scenario.add(compare, false);
  compare->add_option("--out", cmp_out, "output CSV");

  auto* invert = app.add_subcommand("invert", "recover photon statistics from a trace");
  ParamFlags inv_params;
  std::string inv_trace, inv_out = "inversion.csv";
  std::optional<std::size_t> inv_nmax_fit, inv_max_iter;
  bool inv_no_normalize = false;
  inv_params.add(invert);
  invert->add_option("--trace", inv_trace, "input trace file")->required();
  invert->add_option("--nmax-fit", inv_nmax_fit, "highest photon number in the fit basis");
  invert->add_flag("--no-normalize", inv_no_normalize, "drop the sum(p) = 1 constraint");
  invert->add_option("--max-iter", inv_max_iter, "solver iteration cap");
  invert->add_option("--out", inv_out, "output CSV");

  auto* fit = app.add_subcommand("fit-params", "fit Omega, gamma and alpha to one or more traces");
  ParamFlags fit_params_flags;
  std::vector<std::string> fit_traces, fit_free;
  std::string fit_out = "fit.txt";
  std::optional<double> fit_nbar;
  std::optional<std::size_t> fit_max_iter;
  bool fit_evaluate = false;
  fit_params_flags.add(fit);
  fit->add_option("--trace", fit_traces, "input trace files")->required();
  fit->add_option("--free", fit_free, "parameters to fit: omega, gamma, alpha (default: all)")->delimiter(',');
  fit->add_flag("--evaluate", fit_evaluate, "fit nothing; report the residual at the given parameters");
  fit->add_option("--nbar", fit_nbar, "mean photon number for every trace (default: from each header)");
  fit->add_option("--max-iter", fit_max_iter, "iteration cap per fitting stage");
  fit->add_option("--out", fit_out, "report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_code::kSuccess : exit_code::kValidation;
  }

  try {
    const ConfigFile file = base_config(config_path);

    if (simulate->parsed()) {
      const auto scenarios = select_scenarios(file, sim_scenario, sim_params);
      std::vector<std::pair<ScenarioConfig, std::string>> jobs;
      if (scenarios.size() == 1) {
        jobs.emplace_back(scenarios.front(), sim_out.empty() ? scenarios.front().label + ".csv" : sim_out);
      } else {
        const std::filesystem::path dir = sim_out.empty() ? "." : sim_out;
        std::filesystem::create_directories(dir);
        for (const auto& s : scenarios) jobs.emplace_back(s, (dir / (s.label + ".csv")).string());
      }
      run_simulate_all(jobs);
      for (const auto& [s, path] : jobs) std::cout << s.label << " -> " << path << '\n';
    } else if (compare->parsed()) {
      const auto scenarios = select_scenarios(file, cmp_scenario, cmp_params);
      if (scenarios.size() != 1) throw ValidationError("compare takes exactly one scenario; pass --scenario");
      run_compare(scenarios.front(), cmp_out);
      std::cout << scenarios.front().label << " -> " << cmp_out << '\n';
    } else if (invert->parsed()) {
      SystemParams params = file.params;
      inv_params.apply(params);
      const auto r = run_invert(inv_trace, params, fit_config(file, inv_nmax_fit, inv_no_normalize, inv_max_iter),
                                inv_out);
      std::cout << "residual: " << format_number(r.residual) << '\n'
                << "nbar_best: " << format_number(r.nbar_best) << '\n';
    } else if (fit->parsed()) {
      SystemParams init = file.params;
      fit_params_flags.apply(init);
      std::vector<FitParameter> free;
      if (fit_evaluate) {
        if (!fit_free.empty()) throw ValidationError("--evaluate and --free are exclusive");
      } else if (!fit_free.empty()) {
        for (const auto& name : fit_free) free.push_back(parse_fit_parameter(name));
      } else if (file.has_free) {
        free = file.free;
      } else {
        free.assign(kAllFitParameters.begin(), kAllFitParameters.end());
      }
      const auto r = run_fit_params(fit_traces, init, free, fit_config(file, {}, false, fit_max_iter), fit_out,
                                    fit_nbar);
      std::cout << "omega: " << format_number(r.params.omega) << '\n'
                << "gamma: " << format_number(r.params.gamma) << '\n'
                << "alpha: " << format_number(r.params.alpha) << '\n'
                << "residual: " << format_number(r.residual) << '\n';
      if (!r.converged) {
        std::cerr << "cavlab: fit did not converge; report written to " << fit_out << '\n';
        return exit_code::kConvergence;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "cavlab: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return exit_code::kSuccess;
}
