#pragma once

// Shared domain types for the dissipative Jaynes-Cummings toolkit.
//
// Units: every rate is a plain (non-angular) inverse millisecond and every
// time is in milliseconds, so a rate quoted in kHz carries over unchanged.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cavlab/error.hpp"

namespace cavlab {

/// Physical rates of the atom-cavity system, all in ms^-1.
struct SystemParams {
  double omega = 150.2;  ///< vacuum Rabi coupling
  double gamma = 19.3;   ///< collision dephasing rate
  double kappa = 4.55;   ///< cavity leakage rate
  double alpha = 1.59;   ///< detector dark-count rate

  /// Throws ValidationError unless omega > 0, gamma, kappa, alpha >= 0 and
  /// gamma < 2 omega (underdamped for every photon number).
  void validate() const {
    if (!(omega > 0.0) || !std::isfinite(omega))
      throw ValidationError("omega must be a positive finite rate, got " + std::to_string(omega));
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw ValidationError("gamma must be non-negative, got " + std::to_string(gamma));
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
      throw ValidationError("kappa must be non-negative, got " + std::to_string(kappa));
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw ValidationError("alpha must be non-negative, got " + std::to_string(alpha));
    if (!(gamma < 2.0 * omega))
      throw ValidationError("gamma must be below 2*omega (underdamped regime)");
  }

  [[nodiscard]] double photon_lifetime() const { return 1.0 / kappa; }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Truncated photon-number distribution p_0..p_nmax.
///
/// The probability mass lost to truncation is declared explicitly rather than
/// renormalized away: sum(p) lies in [1 - deficit - tol, 1 + tol].
class PhotonDistribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit PhotonDistribution(std::vector<double> probs, double truncation_deficit = 0.0)
      : probs_(std::move(probs)), deficit_(truncation_deficit) {
    if (probs_.empty()) throw ValidationError("photon distribution needs at least p_0");
    if (!(deficit_ >= 0.0) || deficit_ >= 1.0)
      throw ValidationError("truncation deficit must lie in [0, 1)");
    for (std::size_t n = 0; n < probs_.size(); ++n) {
      if (!(probs_[n] >= 0.0) || !std::isfinite(probs_[n]))
        throw ValidationError("p_" + std::to_string(n) + " is negative or not finite");
    }
    const double s = sum();
    if (s > 1.0 + kSumTolerance || s < 1.0 - deficit_ - kSumTolerance)
      throw ValidationError("probabilities sum to " + std::to_string(s) +
                            ", outside [1 - deficit, 1]");
  }

  static PhotonDistribution vacuum(std::size_t nmax = 0) {
    std::vector<double> p(nmax + 1, 0.0);
    p[0] = 1.0;
    return PhotonDistribution(std::move(p));
  }

  /// Renormalizes raw non-negative weights to unit sum.
  static PhotonDistribution normalized(std::vector<double> weights) {
    const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(s > 0.0)) throw ValidationError("cannot normalize weights with non-positive sum");
    for (auto& w : weights) w /= s;
    return PhotonDistribution(std::move(weights));
  }

  [[nodiscard]] std::size_t nmax() const { return probs_.size() - 1; }
  [[nodiscard]] std::size_t size() const { return probs_.size(); }
  [[nodiscard]] std::span<const double> probs() const { return probs_; }
  [[nodiscard]] double truncation_deficit() const { return deficit_; }

  /// p_n, with p_n = 0 above the truncation (and for negative n).
  [[nodiscard]] double operator[](long n) const {
    return (n < 0 || static_cast<std::size_t>(n) >= probs_.size()) ? 0.0
                                                                    : probs_[static_cast<std::size_t>(n)];
  }

  [[nodiscard]] double sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (std::size_t n = 0; n < probs_.size(); ++n) m += static_cast<double>(n) * probs_[n];
    return m;
  }

 private:
  std::vector<double> probs_;
  double deficit_;
};

/// Poissonian tail mass sum_{n > nmax} p_n, summed forward (no cancellation).
inline double poisson_tail(double nbar, std::size_t nmax) {
  if (nbar == 0.0) return 0.0;
  double term = std::exp(-nbar);
  for (std::size_t n = 1; n <= nmax + 1; ++n) term *= nbar / static_cast<double>(n);
  double tail = 0.0;
  for (std::size_t n = nmax + 1;; ++n) {
    tail += term;
    term *= nbar / static_cast<double>(n + 1);
    if (term < tail * 1e-18 || term == 0.0) break;
  }
  return tail;
}

/// Coherent-state statistics p_n = e^{-nbar} nbar^n / n!, n <= nmax.
inline PhotonDistribution poisson_distribution(double nbar, std::size_t nmax) {
  if (!(nbar >= 0.0) || !std::isfinite(nbar))
    throw ValidationError("mean photon number must be non-negative, got " + std::to_string(nbar));
  std::vector<double> p(nmax + 1);
  p[0] = std::exp(-nbar);
  for (std::size_t n = 0; n < nmax; ++n) p[n + 1] = p[n] * nbar / static_cast<double>(n + 1);
  const double kept = std::accumulate(p.begin(), p.end(), 0.0);
  if (kept < 0.999)
    throw ValidationError("nmax = " + std::to_string(nmax) + " keeps only " + std::to_string(kept) +
                          " of the Poissonian mass; enlarge nmax");
  return PhotonDistribution(std::move(p), poisson_tail(nbar, nmax));
}

/// Smallest nmax whose Poissonian tail beyond nmax is below tail_mass.
inline std::size_t coherent_nmax_for(double nbar, double tail_mass) {
  if (!(tail_mass > 0.0 && tail_mass < 1.0)) throw ValidationError("tail_mass must lie in (0, 1)");
  if (!(nbar >= 0.0)) throw ValidationError("mean photon number must be non-negative");
  std::size_t nmax = 0;
  while (poisson_tail(nbar, nmax) >= tail_mass) ++nmax;
  return nmax;
}

/// Time series of probabilities; times in ms, strictly increasing.
class Trace {
 public:
  static constexpr double kAnalyticSlack = 1e-9;
  static constexpr double kMeasuredSlack = 0.5;

  Trace() = default;

  Trace(std::vector<double> times, std::vector<double> values, double value_slack = kAnalyticSlack,
        std::vector<double> sigmas = {})
      : times_(std::move(times)), values_(std::move(values)), sigmas_(std::move(sigmas)), slack_(value_slack) {
    if (times_.size() != values_.size())
      throw ValidationError("trace has mismatched time and value counts");
    if (!sigmas_.empty() && sigmas_.size() != values_.size())
      throw ValidationError("trace uncertainties must cover every sample");
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!std::isfinite(times_[k])) throw ValidationError("non-finite time at sample " + std::to_string(k));
      if (k > 0 && !(times_[k] > times_[k - 1]))
        throw ValidationError("trace times must be strictly increasing (sample " + std::to_string(k) + ")");
      if (!(values_[k] >= -slack_ && values_[k] <= 1.0 + slack_))
        throw ValidationError("trace value " + std::to_string(values_[k]) + " at sample " + std::to_string(k) +
                              " is not a probability");
    }
  }

  [[nodiscard]] std::size_t size() const { return times_.size(); }
  [[nodiscard]] bool empty() const { return times_.empty(); }
  [[nodiscard]] std::span<const double> times() const { return times_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<const double> sigmas() const { return sigmas_; }
  [[nodiscard]] bool has_sigmas() const { return !sigmas_.empty(); }
  [[nodiscard]] double value_slack() const { return slack_; }

  /// Same times, new values (validated with the same slack).
  [[nodiscard]] Trace with_values(std::vector<double> values) const {
    return Trace(times_, std::move(values), slack_, sigmas_);
  }

  /// First `count` samples.
  [[nodiscard]] Trace head(std::size_t count) const {
    count = std::min(count, size());
    return Trace({times_.begin(), times_.begin() + static_cast<long>(count)},
                 {values_.begin(), values_.begin() + static_cast<long>(count)}, slack_,
                 sigmas_.empty() ? std::vector<double>{}
                                 : std::vector<double>(sigmas_.begin(), sigmas_.begin() + static_cast<long>(count)));
  }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<double> sigmas_;
  double slack_ = kAnalyticSlack;
};

/// Evenly spaced sample times t_k = t_end * k / (samples - 1).
inline std::vector<double> uniform_times(double t_end, std::size_t samples) {
  if (samples < 2) throw ValidationError("need at least two samples");
  if (!(t_end > 0.0)) throw ValidationError("t_end must be positive");
  std::vector<double> t(samples);
  for (std::size_t k = 0; k < samples; ++k)
    t[k] = t_end * static_cast<double>(k) / static_cast<double>(samples - 1);
  return t;
}

/// Outcome of a photon-statistics inversion.
struct InversionResult {
  PhotonDistribution distribution = PhotonDistribution::vacuum();
  std::vector<double> weights;  ///< raw solver output; equals distribution when normalized
  double residual = 0.0;        ///< sum of squared fit errors
  double nbar_best = 0.0;       ///< best-fit Poissonian mean of `distribution`
  double poisson_sse = 0.0;     ///< squared distance to that Poissonian
};

}  // namespace cavlab
