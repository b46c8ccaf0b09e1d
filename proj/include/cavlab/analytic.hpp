#pragma once

// Closed-form inversion probabilities for an initially excited atom in a
// lossy, dephasing cavity.
//
// The zeroth-order solution treats collision dephasing exactly and neglects
// leakage; the first-order correction is linear in kappa. Both are expressed
// per excitation manifold {|m,e>, |m+1,g>}, whose coupling is Omega sqrt(m+1)
// and whose damped frequency is lambda_m = sqrt(4 (m+1) Omega^2 - gamma^2).

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "cavlab/core.hpp"

namespace cavlab {

struct ModeConstants {
  std::size_t n = 0;
  double lambda = 0.0;  ///< modified Rabi frequency, ms^-1
  double phi = 0.0;     ///< phase shift, tan(phi) = gamma / lambda
};

inline ModeConstants mode_constants(std::size_t n, const SystemParams& params) {
  params.validate();
  const double drive_sq = 4.0 * static_cast<double>(n + 1) * params.omega * params.omega;
  const double gamma_sq = params.gamma * params.gamma;
  if (!(gamma_sq < drive_sq))
    throw ValidationError("gamma >= 2 Omega sqrt(n+1) for n = " + std::to_string(n) + ": overdamped mode");
  const double lambda = std::sqrt(drive_sq - gamma_sq);
  return {n, lambda, std::atan2(params.gamma, lambda)};
}

struct PhenomenologicalParams {
  double Gamma = 0.0;  ///< empirical damping rate, ms^-1
};

/// Diagonal and coherence elements of the density matrix at photon index n:
/// gg = <n,g|rho|n,g>, ee = <n,e|rho|n,e>, coh = <n,e|rho|n+1,g>.
struct RhoElements {
  double gg = 0.0;
  double ee = 0.0;
  std::complex<double> coh{0.0, 0.0};
};

namespace detail {

inline void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time must be non-negative and finite");
}

// cos(lambda t - phi) / cos(phi)
inline double shifted_cos(const ModeConstants& m, double t) {
  return std::cos(m.lambda * t - m.phi) / std::cos(m.phi);
}

// First-order correction within manifold m, for manifold weight p = p_m and
// upper-neighbour weight q = p_{m+1}.
struct ManifoldCorrection {
  double excited = 0.0;    // <m,e|rho1|m,e>
  double ground = 0.0;     // <m+1,g|rho1|m+1,g>
  double coherence = 0.0;  // Im <m,e|rho1|m+1,g>; the real part vanishes
};

inline ManifoldCorrection first_order_manifold(std::size_t m_index, double p, double q, const SystemParams& prm,
                                               double t) {
  const ModeConstants lo = mode_constants(m_index, prm);
  const ModeConstants hi = mode_constants(m_index + 1, prm);
  const double m = static_cast<double>(m_index);
  const double k = prm.kappa;
  const double g = prm.gamma;
  const double w2 = prm.omega * prm.omega;
  const double decay = std::exp(-g * t);

  const double cos_lo = shifted_cos(lo, t);
  const double sin_lo = std::sin(lo.lambda * t);
  const double cos_hi = shifted_cos(hi, t);
  const double sin_hi = std::sin(hi.lambda * t);
  const double drift = 0.25 * k * ((2 * m + 3) * q - (2 * m + 1) * p) * t;
  const double secular = 0.25 * k * (2 * m + 1) * p * t * cos_lo;

  ManifoldCorrection c;
  c.excited = g * k * (2 * (m + 2) * p - (2 * m + 3) * q) / (8 * w2 * (m + 1) * (m + 2)) + drift +
              decay * (g * k * ((2 * m * m + 5 * m + 4) * q - 2 * p) / (8 * w2 * (m + 1)) * cos_lo +
                       k * (2 * p - (4 * m * m + 11 * m + 8) * q) / (4 * lo.lambda) * sin_lo - secular -
                       g * k * (m + 1) * (2 * m + 5) * q / (8 * w2 * (m + 2)) * cos_hi +
                       k * (m + 1) * (4 * m + 9) * q / (4 * hi.lambda) * sin_hi);

  c.ground = g * k * q / (8 * w2 * (m + 1) * (m + 2)) + drift +
             decay * (-g * k * (2 * m * m + 5 * m + 4) * q / (8 * w2 * (m + 1)) * cos_lo +
                      k * (4 * m * m + 11 * m + 8) * q / (4 * lo.lambda) * sin_lo + secular +
                      g * k * (2 * m * m + 7 * m + 7) * q / (8 * w2 * (m + 2)) * cos_hi -
                      k * (4 * m * m + 13 * m + 11) * q / (4 * hi.lambda) * sin_hi);

  const double scale = k / (8 * prm.omega * std::sqrt(m + 1));
  const double tan_lo = g / lo.lambda;
  const double tan_hi = g / hi.lambda;
  c.coherence = scale * (p - q) +
                scale * decay *
                    (((4 * m * m + 11 * m + 8) * q - p) * std::cos(lo.lambda * t) - (p + m * q) * tan_lo * sin_lo -
                     4 * (m + 1) * (2 * m + 1) * p * w2 / lo.lambda * t * sin_lo -
                     (m + 1) * (4 * m + 7) * q * std::cos(hi.lambda * t) + (m + 1) * q * tan_hi * sin_hi);
  return c;
}

// First-order correction to <0,g|rho|0,g>, which only receives photons leaking
// out of |1,g>.
inline double first_order_vacuum_ground(double p0, const SystemParams& prm, double t) {
  const ModeConstants m0 = mode_constants(0, prm);
  return -prm.kappa / (4 * prm.omega) * p0 *
         (2 * std::sin(m0.phi) - 2 * prm.omega * t +
          std::exp(-prm.gamma * t) * std::sin(m0.lambda * t - 2 * m0.phi) / std::cos(m0.phi));
}

}  // namespace detail

/// Ideal Rabi oscillation: P = 1/2 sum p_n [1 - cos(2 Omega t sqrt(n+1))].
inline double rabi_ideal(const PhotonDistribution& dist, double omega, double t) {
  detail::require_time(t);
  double s = 0.0;
  for (std::size_t n = 0; n <= dist.nmax(); ++n)
    s += dist.probs()[n] * (1.0 - std::cos(2.0 * omega * t * std::sqrt(static_cast<double>(n + 1))));
  return 0.5 * s;
}

/// Empirically damped oscillation with a single decay rate Gamma.
inline double rabi_phenomenological(const PhotonDistribution& dist, double omega, const PhenomenologicalParams& p,
                                    double t) {
  detail::require_time(t);
  if (!(p.Gamma >= 0.0)) throw ValidationError("Gamma must be non-negative");
  const double envelope = std::exp(-p.Gamma * t);
  double s = 0.0;
  for (std::size_t n = 0; n <= dist.nmax(); ++n)
    s += dist.probs()[n] * (1.0 - envelope * std::cos(2.0 * omega * t * std::sqrt(static_cast<double>(n + 1))));
  return 0.5 * s;
}

/// Dephasing-only density matrix elements at photon index n (initially |e>
/// with a diagonal field).
inline RhoElements rho_zeroth(std::size_t n, const PhotonDistribution& dist, const SystemParams& params, double t) {
  detail::require_time(t);
  const double decay = std::exp(-params.gamma * t);
  const long ln = static_cast<long>(n);
  RhoElements r;
  if (n > 0) {
    const auto below = mode_constants(n - 1, params);
    r.gg = 0.5 * dist[ln - 1] * (1.0 - decay * detail::shifted_cos(below, t));
  }
  const auto mode = mode_constants(n, params);
  r.ee = 0.5 * dist[ln] * (1.0 + decay * detail::shifted_cos(mode, t));
  r.coh = {0.0, 0.5 * dist[ln] * decay * std::sin(mode.lambda * t) / std::cos(mode.phi)};
  return r;
}

inline double peg_zeroth(const PhotonDistribution& dist, const SystemParams& params, double t) {
  detail::require_time(t);
  const double decay = std::exp(-params.gamma * t);
  double s = 0.0;
  for (std::size_t n = 0; n <= dist.nmax(); ++n)
    s += dist.probs()[n] * (1.0 - decay * detail::shifted_cos(mode_constants(n, params), t));
  return 0.5 * s;
}

/// First-order (in kappa) leakage correction at photon index n. Every element
/// vanishes at t = 0 and scales linearly with kappa.
inline RhoElements rho_first(std::size_t n, const PhotonDistribution& dist, const SystemParams& params, double t) {
  detail::require_time(t);
  const long ln = static_cast<long>(n);
  RhoElements r;
  if (n == 0) {
    r.gg = detail::first_order_vacuum_ground(dist[0], params, t);
  } else {
    r.gg = detail::first_order_manifold(n - 1, dist[ln - 1], dist[ln], params, t).ground;
  }
  const auto c = detail::first_order_manifold(n, dist[ln], dist[ln + 1], params, t);
  r.ee = c.excited;
  r.coh = {0.0, c.coherence};
  return r;
}

/// Zeroth order plus the first-order ground-state populations. Not clamped:
/// the perturbative result may leave [0, 1] by O(kappa^2 t^2).
inline double peg_first(const PhotonDistribution& dist, const SystemParams& params, double t) {
  double s = peg_zeroth(dist, params, t);
  if (params.kappa == 0.0) return s;
  s += detail::first_order_vacuum_ground(dist[0], params, t);
  for (std::size_t m = 0; m <= dist.nmax(); ++m) {
    const long lm = static_cast<long>(m);
    s += detail::first_order_manifold(m, dist[lm], dist[lm + 1], params, t).ground;
  }
  return s;
}

/// f_n(t) with P_eg(t) = sum_n p_n f_n(t) for every distribution supported on
/// 0..nmax (first-order model).
inline std::vector<double> basis_functions(std::size_t nmax, const SystemParams& params, double t) {
  detail::require_time(t);
  const double decay = std::exp(-params.gamma * t);
  std::vector<double> f(nmax + 1);
  for (std::size_t n = 0; n <= nmax; ++n)
    f[n] = 0.5 * (1.0 - decay * detail::shifted_cos(mode_constants(n, params), t));
  if (params.kappa == 0.0) return f;

  f[0] += detail::first_order_vacuum_ground(1.0, params, t);
  for (std::size_t m = 0; m <= nmax; ++m) {
    // The manifold correction is linear in (p_m, p_{m+1}).
    f[m] += detail::first_order_manifold(m, 1.0, 0.0, params, t).ground;
    if (m + 1 <= nmax) f[m + 1] += detail::first_order_manifold(m, 0.0, 1.0, params, t).ground;
  }
  return f;
}

/// Multiplies each sample by e^{-alpha t} (detector dark counts).
inline Trace apply_dark_counts(const Trace& trace, double alpha) {
  if (!(alpha >= 0.0)) throw ValidationError("dark-count rate must be non-negative");
  std::vector<double> v(trace.values().begin(), trace.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= std::exp(-alpha * trace.times()[k]);
  return trace.with_values(std::move(v));
}

/// Inverse of apply_dark_counts.
inline Trace remove_dark_counts(const Trace& trace, double alpha) {
  if (!(alpha >= 0.0)) throw ValidationError("dark-count rate must be non-negative");
  std::vector<double> v(trace.values().begin(), trace.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] /= std::exp(-alpha * trace.times()[k]);
  return trace.with_values(std::move(v));
}

/// Fraction of detections that are dark counts at time t.
inline double dark_count_fraction(double alpha, double t) { return 1.0 - std::exp(-alpha * t); }

}  // namespace cavlab
