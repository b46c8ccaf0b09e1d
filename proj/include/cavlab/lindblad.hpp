#pragma once

// Exact evolution of the dissipative Jaynes-Cummings master equation
//
//   d rho/dt = -i [H, rho] + L_f rho + L_c rho
//   L_f rho  = kappa/2 (2 a rho a^+ - a^+a rho - rho a^+a)      (cavity leakage)
//   L_c rho  = 2 gamma (2 S_z rho S_z - S_z^2 rho - rho S_z^2)   (collision dephasing)
//
// on the truncated space |n, g/e>, n <= nmax. S_z has eigenvalues +-1/2, so
// L_c damps atomic coherences at 2 gamma and leaves populations alone.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "cavlab/analytic.hpp"
#include "cavlab/core.hpp"
#include "cavlab/density_matrix.hpp"

namespace cavlab {

using SparseComplexMatrix = Eigen::SparseMatrix<Complex>;

/// Jaynes-Cummings Hamiltonian at resonance on a truncated Fock space.
struct Hamiltonian {
  std::size_t nmax = 0;
  double coupling = 0.0;      ///< Omega
  double omega_atom = 0.0;    ///< 0 in the rotating frame
  double omega_cavity = 0.0;  ///< 0 in the rotating frame
  ComplexMatrix matrix;
  SparseComplexMatrix sparse;
  /// |nmax,e> would couple to |nmax+1,g>, which the truncation removes.
  bool top_manifold_open = true;

  [[nodiscard]] bool rotating_frame() const { return omega_atom == 0.0 && omega_cavity == 0.0; }
  [[nodiscard]] Eigen::Index dimension() const { return matrix.rows(); }

  /// H = omega_atom S_z + omega_cavity a^+a + coupling (a^+ S_- + a S_+).
  static Hamiltonian jaynes_cummings(double coupling, std::size_t nmax, double omega_atom = 0.0,
                                     double omega_cavity = 0.0) {
    Hamiltonian h;
    h.nmax = nmax;
    h.coupling = coupling;
    h.omega_atom = omega_atom;
    h.omega_cavity = omega_cavity;
    const auto dim = DensityMatrix::dim_for(nmax);
    h.matrix = ComplexMatrix::Zero(dim, dim);
    for (std::size_t n = 0; n <= nmax; ++n) {
      const double photons = static_cast<double>(n);
      h.matrix(basis_index(n, Level::ground), basis_index(n, Level::ground)) =
          -0.5 * omega_atom + omega_cavity * photons;
      h.matrix(basis_index(n, Level::excited), basis_index(n, Level::excited)) =
          0.5 * omega_atom + omega_cavity * photons;
      if (n < nmax) {
        const auto e = basis_index(n, Level::excited);
        const auto g = basis_index(n + 1, Level::ground);
        const double element = coupling * std::sqrt(photons + 1.0);
        h.matrix(e, g) = element;
        h.matrix(g, e) = element;
      }
    }
    h.sparse = h.matrix.sparseView();
    return h;
  }
};

/// omega_cavity = 0 selects the rotating frame; otherwise the lab frame at
/// exact resonance (omega_atom = omega_cavity).
inline Hamiltonian build_hamiltonian(const SystemParams& params, std::size_t nmax, double omega_cavity = 0.0) {
  params.validate();
  if (!(omega_cavity >= 0.0)) throw ValidationError("cavity frequency must be non-negative");
  return Hamiltonian::jaynes_cummings(params.omega, nmax, omega_cavity, omega_cavity);
}

/// Liouvillian split into its physical pieces; each piece accumulates into `out`.
class MasterEquation {
 public:
  MasterEquation(Hamiltonian h, double gamma, double kappa) : h_(std::move(h)), gamma_(gamma), kappa_(kappa) {
    const auto dim = h_.dimension();
    leak_factor_ = Eigen::MatrixXd::Zero(dim, dim);
    photon_sum_ = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        const double ni = static_cast<double>(photon_number_of(i));
        const double nj = static_cast<double>(photon_number_of(j));
        leak_factor_(i, j) = std::sqrt((ni + 1.0) * (nj + 1.0));
        photon_sum_(i, j) = 0.5 * (ni + nj);
      }
    }
  }

  [[nodiscard]] const Hamiltonian& hamiltonian() const { return h_; }

  void coherent(const ComplexMatrix& rho, ComplexMatrix& out) const {
    const Complex minus_i{0.0, -1.0};
    out += minus_i * (h_.sparse * rho);
    out -= minus_i * (rho * h_.sparse);
  }

  // (a rho a^+)_{ij} = sqrt((n_i+1)(n_j+1)) rho_{i+2, j+2} in the interleaved basis.
  void leakage(const ComplexMatrix& rho, ComplexMatrix& out) const {
    if (kappa_ == 0.0) return;
    const auto dim = rho.rows();
    const auto inner = dim - 2;
    out.topLeftCorner(inner, inner) +=
        kappa_ * leak_factor_.topLeftCorner(inner, inner).cwiseProduct(rho.bottomRightCorner(inner, inner));
    out -= kappa_ * photon_sum_.cwiseProduct(rho);
  }

  // Only elements between different atomic levels are touched.
  void dephasing(const ComplexMatrix& rho, ComplexMatrix& out) const {
    if (gamma_ == 0.0) return;
    const auto dim = rho.rows();
    for (Eigen::Index j = 0; j < dim; ++j)
      for (Eigen::Index i = (j + 1) % 2; i < dim; i += 2) out(i, j) -= 2.0 * gamma_ * rho(i, j);
  }

  [[nodiscard]] ComplexMatrix operator()(const ComplexMatrix& rho) const {
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    coherent(rho, out);
    leakage(rho, out);
    dephasing(rho, out);
    return out;
  }

 private:
  Hamiltonian h_;
  double gamma_;
  double kappa_;
  Eigen::MatrixXd leak_factor_;
  Eigen::MatrixXd photon_sum_;
};

/// d rho / dt for the full master equation.
inline ComplexMatrix liouvillian_rhs(const DensityMatrix& rho, const Hamiltonian& h, const SystemParams& params) {
  if (rho.dimension() != h.dimension())
    throw ValidationError("density matrix dimension " + std::to_string(rho.dimension()) +
                          " does not match Hamiltonian dimension " + std::to_string(h.dimension()));
  return MasterEquation(h, params.gamma, params.kappa)(rho.entries());
}

/// One classical fourth-order Runge-Kutta step of dy/dt = f(t, y).
template <class State, class Rhs>
State rk4_step(const Rhs& f, double t, const State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct EvolutionConfig {
  double t_end = 0.09;            ///< ms
  double dt = 5e-5;               ///< ms
  double tol = 1e-7;              ///< max local step-doubling discrepancy
  std::size_t record_every = 1;   ///< record every k-th step
  bool error_control = true;      ///< compare each step against two half steps
  bool check_invariants = true;   ///< verify trace, Hermiticity and positivity when recording

  /// Fastest rate the step must resolve: max(lambda_nmax, kappa nmax, gamma),
  /// plus the carrier in the lab frame.
  static double fastest_rate(const Hamiltonian& h, const SystemParams& params) {
    const double nmax = static_cast<double>(h.nmax);
    const double drive = 4.0 * (nmax + 1.0) * h.coupling * h.coupling - params.gamma * params.gamma;
    double rate = std::max({drive > 0.0 ? std::sqrt(drive) : 0.0, params.kappa * nmax, params.gamma});
    if (!h.rotating_frame()) rate += std::abs(h.omega_cavity) * (nmax + 1.0) + 0.5 * std::abs(h.omega_atom);
    return rate;
  }

  void validate(const Hamiltonian& h, const SystemParams& params) const {
    if (!(t_end >= 0.0)) throw ValidationError("t_end must be non-negative");
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (record_every == 0) throw ValidationError("record_every must be at least 1");
    const double rate = fastest_rate(h, params);
    if (!(dt * rate < 0.1))
      throw ValidationError("dt = " + std::to_string(dt) + " ms under-resolves the fastest rate " +
                            std::to_string(rate) + " ms^-1 (need dt * rate < 0.1)");
  }

  /// Default step shrunk, if needed, to satisfy the resolution condition.
  static EvolutionConfig resolving(const Hamiltonian& h, const SystemParams& params, double t_end) {
    EvolutionConfig cfg;
    cfg.t_end = t_end;
    cfg.dt = std::min(cfg.dt, 0.05 / fastest_rate(h, params));
    return cfg;
  }
};

template <class T>
struct Timed {
  double time = 0.0;
  T value;
};

namespace detail {

// Fixed-step RK4 propagation with optional step-doubling error control.
template <class Rhs>
class Rk4Propagator {
 public:
  Rk4Propagator(Rhs rhs, const EvolutionConfig& cfg) : rhs_(std::move(rhs)), cfg_(cfg) {}

  ComplexMatrix step(double t, const ComplexMatrix& y, double h) const {
    if (!cfg_.error_control) return rk4_step(rhs_, t, y, h);
    const ComplexMatrix full = rk4_step(rhs_, t, y, h);
    const ComplexMatrix mid = rk4_step(rhs_, t, y, 0.5 * h);
    ComplexMatrix halves = rk4_step(rhs_, t + 0.5 * h, mid, 0.5 * h);
    const double err = (full - halves).cwiseAbs().maxCoeff();
    if (!(err <= cfg_.tol))
      throw ConvergenceError("step-size failure at t = " + std::to_string(t) + " ms: local error " +
                             std::to_string(err) + " exceeds tol " + std::to_string(cfg_.tol));
    return halves;
  }

  // Advances from t0 to t1 in equal steps no longer than cfg.dt.
  ComplexMatrix advance(ComplexMatrix y, double t0, double t1) const {
    if (t1 <= t0) return y;
    const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / cfg_.dt - 1e-9));
    const double h = (t1 - t0) / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) y = step(t0 + static_cast<double>(k) * h, y, h);
    return y;
  }

 private:
  Rhs rhs_;
  EvolutionConfig cfg_;
};

inline void check_recorded(const DensityMatrix& rho, double t) {
  const auto d = rho.diagnose();
  if (d.trace_error > DensityMatrix::kTraceTol || d.hermiticity_error > DensityMatrix::kHermiticityTol ||
      d.min_eigenvalue < DensityMatrix::kEigenFloor)
    throw ConvergenceError("density matrix invariants violated at t = " + std::to_string(t) +
                           " ms (trace error " + std::to_string(d.trace_error) + ", Hermiticity " +
                           std::to_string(d.hermiticity_error) + ", min eigenvalue " +
                           std::to_string(d.min_eigenvalue) + ")");
}

inline std::vector<double> step_grid(double t_end, double dt) {
  const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9)));
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = t_end * static_cast<double>(k) / static_cast<double>(steps);
  return t;
}

inline void require_increasing(const std::vector<double>& times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw ValidationError("sample times must be non-negative");
    if (k > 0 && !(times[k] > times[k - 1])) throw ValidationError("sample times must be strictly increasing");
  }
}

}  // namespace detail

/// States of the full master equation at arbitrary increasing times (>= 0).
inline std::vector<DensityMatrix> evolve_at(const DensityMatrix& rho0, const Hamiltonian& h,
                                            const SystemParams& params, const std::vector<double>& times,
                                            const EvolutionConfig& cfg) {
  if (rho0.dimension() != h.dimension()) throw ValidationError("initial state does not match Hamiltonian");
  cfg.validate(h, params);
  detail::require_increasing(times);
  const MasterEquation eq(h, params.gamma, params.kappa);
  const auto rhs = [&eq](double, const ComplexMatrix& y) { return eq(y); };
  const detail::Rk4Propagator prop(rhs, cfg);

  std::vector<DensityMatrix> out;
  out.reserve(times.size());
  ComplexMatrix y = rho0.entries();
  double t = 0.0;
  for (double target : times) {
    y = prop.advance(std::move(y), t, target);
    t = target;
    out.emplace_back(rho0.nmax(), y, rho0.expected_trace());
    if (cfg.check_invariants) detail::check_recorded(out.back(), t);
  }
  return out;
}

/// Trajectory on the uniform step grid 0..cfg.t_end, recording every
/// cfg.record_every steps plus the final state.
inline std::vector<Timed<DensityMatrix>> evolve(const DensityMatrix& rho0, const Hamiltonian& h,
                                                const SystemParams& params, const EvolutionConfig& cfg) {
  cfg.validate(h, params);
  rho0.check_invariants();
  const auto grid = detail::step_grid(cfg.t_end, cfg.dt);
  std::vector<double> recorded;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (k % cfg.record_every == 0 || k + 1 == grid.size()) recorded.push_back(grid[k]);
  auto states = evolve_at(rho0, h, params, recorded, cfg);
  std::vector<Timed<DensityMatrix>> out;
  out.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) out.push_back({recorded[k], std::move(states[k])});
  return out;
}

/// P_eg = sum_n <n,g|rho|n,g>.
inline double peg_from_rho(const DensityMatrix& rho) {
  double s = 0.0;
  for (std::size_t n = 0; n <= rho.nmax(); ++n) s += rho.population(n, Level::ground);
  return s;
}

/// <a^+a + S_z + 1/2>, conserved by the closed Jaynes-Cummings dynamics.
inline double excitation_number(const DensityMatrix& rho) {
  double s = 0.0;
  for (std::size_t n = 0; n <= rho.nmax(); ++n)
    s += static_cast<double>(n) * rho.population(n, Level::ground) +
         static_cast<double>(n + 1) * rho.population(n, Level::excited);
  return s;
}

inline double energy(const DensityMatrix& rho, const Hamiltonian& h) { return (h.matrix * rho.entries()).trace().real(); }

/// Closed-form dephasing-only state (initially |e> (x) diagonal field) on the
/// truncation nmax.
inline ComplexMatrix zeroth_order_state(const PhotonDistribution& dist, const SystemParams& params, double t,
                                        std::size_t nmax) {
  const auto dim = DensityMatrix::dim_for(nmax);
  ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
  for (std::size_t n = 0; n <= nmax; ++n) {
    const RhoElements r = rho_zeroth(n, dist, params, t);
    rho(basis_index(n, Level::ground), basis_index(n, Level::ground)) = r.gg;
    rho(basis_index(n, Level::excited), basis_index(n, Level::excited)) = r.ee;
    if (n < nmax) {
      rho(basis_index(n, Level::excited), basis_index(n + 1, Level::ground)) = r.coh;
      rho(basis_index(n + 1, Level::ground), basis_index(n, Level::excited)) = std::conj(r.coh);
    }
  }
  return rho;
}

/// Numerical first-order correction: integrates
///   d rho1/dt = -i [H, rho1] + L_c rho1 + L_f rho0(t),   rho1(0) = 0,
/// with rho0(t) the closed-form dephasing-only solution. Reports RhoElements
/// for n = 0 .. H.nmax - 1 at each requested time.
inline std::vector<std::vector<RhoElements>> evolve_first_order_oracle_at(const PhotonDistribution& dist,
                                                                          const Hamiltonian& h,
                                                                          const SystemParams& params,
                                                                          const std::vector<double>& times,
                                                                          const EvolutionConfig& cfg) {
  params.validate();
  if (!h.rotating_frame()) throw ValidationError("first-order oracle works in the rotating frame");
  if (h.nmax < dist.nmax() + 1)
    throw ValidationError("first-order oracle needs nmax >= distribution nmax + 1 to close every manifold");
  cfg.validate(h, params);
  detail::require_increasing(times);

  const MasterEquation unperturbed(h, params.gamma, 0.0);
  const MasterEquation leak_only(Hamiltonian::jaynes_cummings(0.0, h.nmax), 0.0, params.kappa);
  const auto rhs = [&](double t, const ComplexMatrix& y) {
    ComplexMatrix out = unperturbed(y);
    leak_only.leakage(zeroth_order_state(dist, params, t, h.nmax), out);
    return out;
  };
  const detail::Rk4Propagator prop(rhs, cfg);

  std::vector<std::vector<RhoElements>> out;
  out.reserve(times.size());
  const auto dim = h.dimension();
  ComplexMatrix y = ComplexMatrix::Zero(dim, dim);
  double t = 0.0;
  for (double target : times) {
    y = prop.advance(std::move(y), t, target);
    t = target;
    std::vector<RhoElements> elems(h.nmax);
    for (std::size_t n = 0; n < h.nmax; ++n) {
      elems[n].gg = y(basis_index(n, Level::ground), basis_index(n, Level::ground)).real();
      elems[n].ee = y(basis_index(n, Level::excited), basis_index(n, Level::excited)).real();
      elems[n].coh = y(basis_index(n, Level::excited), basis_index(n + 1, Level::ground));
    }
    out.push_back(std::move(elems));
  }
  return out;
}

/// Uniform-grid variant recording every cfg.record_every steps.
inline std::vector<Timed<std::vector<RhoElements>>> evolve_first_order_oracle(const PhotonDistribution& dist,
                                                                              const Hamiltonian& h,
                                                                              const SystemParams& params,
                                                                              const EvolutionConfig& cfg) {
  const auto grid = detail::step_grid(cfg.t_end, cfg.dt);
  std::vector<double> recorded;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (k % cfg.record_every == 0 || k + 1 == grid.size()) recorded.push_back(grid[k]);
  auto states = evolve_first_order_oracle_at(dist, h, params, recorded, cfg);
  std::vector<Timed<std::vector<RhoElements>>> out;
  for (std::size_t k = 0; k < states.size(); ++k) out.push_back({recorded[k], std::move(states[k])});
  return out;
}

/// Exact P_eg samples for an initially excited atom and field statistics dist.
/// The truncation is dist.nmax() + 1 so the top populated manifold is closed.
inline std::vector<double> peg_exact(const PhotonDistribution& dist, const SystemParams& params,
                                     const std::vector<double>& times, std::optional<EvolutionConfig> cfg = {}) {
  const std::size_t nmax = dist.nmax() + 1;
  const Hamiltonian h = build_hamiltonian(params, nmax);
  const EvolutionConfig c = cfg ? *cfg : EvolutionConfig::resolving(h, params, times.empty() ? 0.0 : times.back());
  const auto states = evolve_at(DensityMatrix::product_state(dist, nmax), h, params, times, c);
  std::vector<double> p(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) p[k] = peg_from_rho(states[k]);
  return p;
}

}  // namespace cavlab
