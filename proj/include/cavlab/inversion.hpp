#pragma once

// Statistical inference from inversion traces: photon-statistics recovery,
// coherent-state fits and global rate fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cavlab/analytic.hpp"
#include "cavlab/core.hpp"
#include "cavlab/nnls.hpp"
#include "cavlab/optimize.hpp"

namespace cavlab {

struct FitConfig {
  std::size_t nmax_fit = 8;
  bool normalize = true;
  std::size_t max_iter = 2000;
  double conv_tol = 1e-10;

  void validate() const {
    if (!(conv_tol > 0.0)) throw ValidationError("conv_tol must be positive");
  }
};

struct PoissonFit {
  double nbar = 0.0;
  double sse = 0.0;
};

/// Squared distance between dist and a Poissonian of mean nbar, over 0..nmax.
inline double poisson_distance(const PhotonDistribution& dist, double nbar) {
  double term = std::exp(-nbar);
  double sse = 0.0;
  for (std::size_t n = 0; n <= dist.nmax(); ++n) {
    const double d = dist.probs()[n] - term;
    sse += d * d;
    term *= nbar / static_cast<double>(n + 1);
  }
  return sse;
}

/// Coherent-state mean minimizing the squared distance on p_n, searched on
/// [0, nmax]: a coarse scan brackets the minimum, golden section refines it.
/// Ties resolve toward the smaller mean.
inline PoissonFit fit_poisson(const PhotonDistribution& dist) {
  const double hi = std::max<double>(1.0, static_cast<double>(dist.nmax()));
  const auto objective = [&](double nbar) { return poisson_distance(dist, nbar); };

  constexpr std::size_t kScan = 256;
  std::size_t best = 0;
  double best_val = objective(0.0);
  for (std::size_t i = 1; i <= kScan; ++i) {
    const double v = objective(hi * static_cast<double>(i) / kScan);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo_b = hi * static_cast<double>(best == 0 ? 0 : best - 1) / kScan;
  const double hi_b = hi * static_cast<double>(std::min(best + 1, kScan)) / kScan;
  double nbar = golden_section(objective, lo_b, hi_b, 1e-13);
  double sse = objective(nbar);
  if (objective(lo_b) <= sse && lo_b == 0.0) {
    nbar = 0.0;
    sse = objective(0.0);
  }
  return {nbar, sse};
}

/// Design matrix A_kn = e^{-alpha t_k} f_n(t_k).
inline Eigen::MatrixXd inversion_design(const Trace& trace, const SystemParams& params, std::size_t nmax_fit) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(trace.size()), static_cast<Eigen::Index>(nmax_fit + 1));
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double t = trace.times()[k];
    const double dark = std::exp(-params.alpha * t);
    const auto f = basis_functions(nmax_fit, params, t);
    for (std::size_t n = 0; n <= nmax_fit; ++n)
      a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) = dark * f[n];
  }
  return a;
}

/// Least-squares photon statistics behind a P_eg trace, with p_n >= 0 and
/// (if cfg.normalize) sum p_n = 1. Dark counts are applied to the model.
inline InversionResult invert_distribution(const Trace& trace, const SystemParams& params, const FitConfig& cfg) {
  params.validate();
  cfg.validate();
  if (trace.size() < cfg.nmax_fit + 2)
    throw ValidationError("inversion with nmax_fit = " + std::to_string(cfg.nmax_fit) + " needs at least " +
                          std::to_string(cfg.nmax_fit + 2) + " samples, trace has " +
                          std::to_string(trace.size()));
  const Eigen::MatrixXd a = inversion_design(trace, params, cfg.nmax_fit);
  const auto rank = column_rank(a);
  if (rank < a.cols())
    throw RankDeficiencyError("inversion basis is rank deficient (rank " + std::to_string(rank) + " of " +
                              std::to_string(a.cols()) + "); choose sample times spanning more oscillations");
  Eigen::VectorXd b(static_cast<Eigen::Index>(trace.size()));
  for (std::size_t k = 0; k < trace.size(); ++k) b(static_cast<Eigen::Index>(k)) = trace.values()[k];

  const NnlsResult sol = nnls(a, b, cfg.normalize, cfg.max_iter);
  std::vector<double> weights(sol.x.data(), sol.x.data() + sol.x.size());

  InversionResult r;
  r.weights = weights;
  r.distribution = cfg.normalize ? PhotonDistribution(weights) : PhotonDistribution::normalized(weights);
  r.residual = sol.residual;
  const auto pf = fit_poisson(r.distribution);
  r.nbar_best = pf.nbar;
  r.poisson_sse = pf.sse;
  return r;
}

enum class FitParameter { omega, gamma, alpha };

inline constexpr std::array<FitParameter, 3> kAllFitParameters{FitParameter::omega, FitParameter::gamma,
                                                                FitParameter::alpha};

inline const char* to_string(FitParameter p) {
  switch (p) {
    case FitParameter::omega:
      return "omega";
    case FitParameter::gamma:
      return "gamma";
    case FitParameter::alpha:
      return "alpha";
  }
  return "?";
}

inline FitParameter parse_fit_parameter(const std::string& s) {
  if (s == "omega") return FitParameter::omega;
  if (s == "gamma") return FitParameter::gamma;
  if (s == "alpha") return FitParameter::alpha;
  throw ValidationError("unknown fit parameter '" + s + "' (expected omega, gamma or alpha)");
}

inline double& param_ref(SystemParams& p, FitParameter which) {
  switch (which) {
    case FitParameter::omega:
      return p.omega;
    case FitParameter::gamma:
      return p.gamma;
    case FitParameter::alpha:
      break;
  }
  return p.alpha;
}

struct ParamFitResult {
  SystemParams params;
  double residual = 0.0;
  /// d^2 residual / d param^2 at the optimum, per free parameter.
  std::vector<std::pair<FitParameter, double>> curvature;
  std::size_t iterations = 0;
  bool converged = true;
};

struct ObservedTrace {
  Trace trace;
  PhotonDistribution distribution;
};

/// Pooled squared error of e^{-alpha t} peg_first against every trace.
inline double pooled_residual(const std::vector<ObservedTrace>& data, const SystemParams& params,
                              double window = 1.0) {
  double sse = 0.0;
  for (const auto& obs : data) {
    const auto times = obs.trace.times();
    const auto values = obs.trace.values();
    const double t_cut = window * times.back();
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (times[k] > t_cut * (1.0 + 1e-12)) break;
      const double model = std::exp(-params.alpha * times[k]) * peg_first(obs.distribution, params, times[k]);
      const double d = values[k] - model;
      sse += d * d;
    }
  }
  return sse;
}

/// Fits the free subset of {omega, gamma, alpha} (kappa stays fixed) by
/// Nelder-Mead on the pooled residual. The fit is continued over growing time
/// windows so the Rabi phase is locked on the first oscillations before the
/// late-time samples are admitted.
inline ParamFitResult fit_params(const std::vector<ObservedTrace>& data, const SystemParams& init,
                                 const std::vector<FitParameter>& free, const FitConfig& cfg = {}) {
  if (data.empty()) throw ValidationError("fit_params needs at least one trace");
  init.validate();
  cfg.validate();
  for (std::size_t i = 0; i < free.size(); ++i)
    for (std::size_t j = i + 1; j < free.size(); ++j)
      if (free[i] == free[j]) throw ValidationError("fit parameter listed twice");

  ParamFitResult result;
  result.params = init;
  if (free.empty()) {
    result.residual = pooled_residual(data, init);
    return result;
  }

  std::vector<double> scale(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) {
    const double v = param_ref(result.params, free[i]);
    scale[i] = v != 0.0 ? std::abs(v) : (free[i] == FitParameter::omega ? 100.0 : 1.0);
  }
  const auto unpack = [&](const std::vector<double>& x) {
    SystemParams p = init;
    for (std::size_t i = 0; i < free.size(); ++i) param_ref(p, free[i]) = x[i] * scale[i];
    return p;
  };

  std::vector<double> x(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) x[i] = param_ref(result.params, free[i]) / scale[i];

  bool converged = true;
  std::size_t iterations = 0;
  for (double window : {0.25, 0.5, 1.0}) {
    const auto objective = [&](const std::vector<double>& xi) {
      const SystemParams p = unpack(xi);
      if (!(p.omega > 0.0) || p.gamma < 0.0 || p.alpha < 0.0 || !(p.gamma < 2.0 * p.omega))
        return std::numeric_limits<double>::max();
      return pooled_residual(data, p, window);
    };
    const std::vector<double> step(free.size(), window < 1.0 ? 0.02 : 0.005);
    const auto r = nelder_mead(objective, x, step, cfg.max_iter, cfg.conv_tol);
    x = r.x;
    iterations += r.iterations;
    converged = r.converged;
  }

  result.params = unpack(x);
  result.residual = pooled_residual(data, result.params);
  result.iterations = iterations;
  result.converged = converged;
  for (auto which : free) {
    const double v = param_ref(result.params, which);
    const double h = 1e-4 * std::max(std::abs(v), 1e-3);
    // Forward differences when the parameter sits on its lower bound.
    const double base = v - h < 0.0 ? v + h : v;
    const auto at = [&](double value) {
      SystemParams p = result.params;
      param_ref(p, which) = value;
      return pooled_residual(data, p);
    };
    result.curvature.emplace_back(which, (at(base + h) - 2.0 * at(base) + at(base - h)) / (h * h));
  }
  return result;
}

}  // namespace cavlab
