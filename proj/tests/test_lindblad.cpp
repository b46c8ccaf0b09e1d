#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cavlab/lindblad.hpp"

using namespace cavlab;
using Catch::Matchers::WithinAbs;

namespace {

DensityMatrix random_state(std::mt19937_64& rng, std::size_t nmax) {
  std::normal_distribution<double> g;
  const auto dim = DensityMatrix::dim_for(nmax);
  ComplexMatrix a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = {g(rng), g(rng)};
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(nmax, rho);
}

EvolutionConfig plain_config(double t_end, double dt) {
  EvolutionConfig c;
  c.t_end = t_end;
  c.dt = dt;
  c.error_control = false;
  c.check_invariants = false;
  return c;
}

}  // namespace

TEST_CASE("Jaynes-Cummings Hamiltonian") {
  const auto h = build_hamiltonian(SystemParams{}, 3);
  CHECK(h.dimension() == 8);
  CHECK(h.rotating_frame());
  CHECK((h.matrix - h.matrix.adjoint()).norm() == 0.0);
  CHECK(h.matrix(basis_index(0, Level::excited), basis_index(1, Level::ground)).real() == 150.2);
  CHECK_THAT(h.matrix(basis_index(1, Level::excited), basis_index(2, Level::ground)).real(),
             WithinAbs(150.2 * std::sqrt(2.0), 1e-12));
  CHECK(h.matrix(basis_index(3, Level::excited), basis_index(3, Level::excited)).real() == 0.0);

  const auto lab = build_hamiltonian(SystemParams{}, 2, 100.0);
  CHECK_FALSE(lab.rotating_frame());
  CHECK(lab.matrix(basis_index(2, Level::ground), basis_index(2, Level::ground)).real() == 150.0);
  CHECK(lab.matrix(basis_index(2, Level::excited), basis_index(2, Level::excited)).real() == 250.0);
}

TEST_CASE("Liouvillian preserves trace and Hermiticity") {
  std::mt19937_64 rng(5);
  const SystemParams p;
  for (int trial = 0; trial < 10; ++trial) {
    const auto rho = random_state(rng, 4);
    const auto d = liouvillian_rhs(rho, build_hamiltonian(p, 4), p);
    CHECK(std::abs(d.trace()) < 1e-10);
    CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(liouvillian_rhs(random_state(rng, 2), build_hamiltonian(p, 3), p), ValidationError);
}

TEST_CASE("dephasing damps atomic coherences at twice gamma") {
  const double gamma = 19.3;
  const MasterEquation eq(Hamiltonian::jaynes_cummings(0.0, 2), gamma, 0.0);
  ComplexMatrix rho = ComplexMatrix::Zero(6, 6);
  rho(basis_index(0, Level::ground), basis_index(0, Level::excited)) = {0.3, 0.1};
  rho(basis_index(1, Level::excited), basis_index(2, Level::ground)) = 0.2;
  rho(basis_index(1, Level::ground), basis_index(2, Level::ground)) = 0.4;
  rho(basis_index(1, Level::ground), basis_index(1, Level::ground)) = 0.5;
  const auto d = eq(rho);
  CHECK(d(0, 1) == Complex(-2.0 * gamma * 0.3, -2.0 * gamma * 0.1));
  CHECK(d(3, 4) == Complex(-2.0 * gamma * 0.2, 0.0));
  CHECK(d(2, 4) == Complex(0.0, 0.0));
  CHECK(d(2, 2) == Complex(0.0, 0.0));
}

TEST_CASE("leakage moves population down one photon at rate kappa n") {
  const double kappa = 4.55;
  const MasterEquation eq(Hamiltonian::jaynes_cummings(0.0, 3), 0.0, kappa);
  ComplexMatrix rho = ComplexMatrix::Zero(8, 8);
  rho(basis_index(2, Level::excited), basis_index(2, Level::excited)) = 1.0;
  const auto d = eq(rho);
  CHECK_THAT(d(basis_index(1, Level::excited), basis_index(1, Level::excited)).real(), WithinAbs(2.0 * kappa, 1e-13));
  CHECK_THAT(d(basis_index(2, Level::excited), basis_index(2, Level::excited)).real(), WithinAbs(-2.0 * kappa, 1e-13));
  CHECK(std::abs(d.trace()) < 1e-13);

  // A field coherence |1><0| decays at kappa / 2.
  ComplexMatrix c = ComplexMatrix::Zero(8, 8);
  c(basis_index(1, Level::ground), basis_index(0, Level::ground)) = 1.0;
  CHECK_THAT(eq(c)(basis_index(1, Level::ground), basis_index(0, Level::ground)).real(), WithinAbs(-0.5 * kappa, 1e-13));
}

TEST_CASE("vacuum Rabi oscillation without dissipation") {
  SystemParams p;
  p.gamma = 0.0;
  p.kappa = 0.0;
  const auto vac = PhotonDistribution::vacuum();
  const auto t = uniform_times(0.05, 26);
  const auto peg = peg_exact(vac, p, t);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double s = std::sin(p.omega * t[k]);
    CHECK_THAT(peg[k], WithinAbs(s * s, 1e-9));
  }
}

TEST_CASE("exact P_eg matches an independent integration") {
  // Reference values from a Kronecker-product master equation solved with an
  // adaptive 8th-order integrator at rtol 1e-12.
  const SystemParams p;
  const auto peg = peg_exact(poisson_distribution(0.85, 13), p, {0.01, 0.05, 0.09});
  CHECK_THAT(peg[0], WithinAbs(0.7058386466949743, 1e-8));
  CHECK_THAT(peg[1], WithinAbs(0.600888992231154, 1e-8));
  CHECK_THAT(peg[2], WithinAbs(0.5463678448205866, 1e-8));
  const auto vac = peg_exact(PhotonDistribution::vacuum(), p, {0.01, 0.05, 0.09});
  CHECK_THAT(vac[0], WithinAbs(0.9036677264173785, 1e-8));
  CHECK_THAT(vac[1], WithinAbs(0.6715340509582562, 1e-8));
  CHECK_THAT(vac[2], WithinAbs(0.605689182495875, 1e-8));
}

TEST_CASE("recorded states keep their invariants") {
  const SystemParams p;
  const auto dist = poisson_distribution(1.77, 14);
  const auto h = build_hamiltonian(p, 15);
  auto cfg = EvolutionConfig::resolving(h, p, 0.09);
  cfg.record_every = 50;
  const auto traj = evolve(DensityMatrix::product_state(dist, 15), h, p, cfg);
  CHECK(traj.back().time == 0.09);
  for (const auto& s : traj) {
    const auto d = s.value.diagnose();
    CHECK(d.trace_error < 1e-9);
    CHECK(d.hermiticity_error < 1e-12);
    CHECK(d.min_eigenvalue >= -1e-9);
  }
}

TEST_CASE("RK4 error falls by 16 per step halving") {
  const SystemParams p;
  const auto dist = poisson_distribution(0.85, 5);
  const auto h = build_hamiltonian(p, 6);
  const auto rho0 = DensityMatrix::product_state(dist, 6);
  std::vector<ComplexMatrix> finals;
  for (double dt : {1.0e-4, 5.0e-5, 2.5e-5})
    finals.push_back(evolve(rho0, h, p, plain_config(0.09, dt)).back().value.entries());
  const double e1 = (finals[0] - finals[1]).cwiseAbs().maxCoeff();
  const double e2 = (finals[1] - finals[2]).cwiseAbs().maxCoeff();
  const double ratio = e1 / e2;
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("closed dynamics conserve energy and excitation number in the lab frame") {
  SystemParams p;
  p.gamma = 0.0;
  p.kappa = 0.0;
  const auto dist = poisson_distribution(0.85, 8);
  const auto h = build_hamiltonian(p, 9, 100.0);
  const auto rho0 = DensityMatrix::product_state(dist, 9);
  auto cfg = EvolutionConfig::resolving(h, p, 0.05);
  cfg.record_every = 100;
  const auto traj = evolve(rho0, h, p, cfg);
  const double e0 = energy(rho0, h);
  const double n0 = excitation_number(rho0);
  for (const auto& s : traj) {
    CHECK_THAT(energy(s.value, h), WithinAbs(e0, 1e-8));
    CHECK_THAT(excitation_number(s.value), WithinAbs(n0, 1e-10));
  }

  // Dephasing commutes with the excitation number.
  p.gamma = 19.3;
  for (const auto& s : evolve(rho0, h, p, cfg)) CHECK_THAT(excitation_number(s.value), WithinAbs(n0, 1e-10));
}

TEST_CASE("lab and rotating frames give the same inversion") {
  const SystemParams p;
  const auto dist = poisson_distribution(0.4, 6);
  const auto rot = build_hamiltonian(p, 7);
  const auto lab = build_hamiltonian(p, 7, 100.0);
  const std::vector<double> t{0.02, 0.06};
  const auto a = evolve_at(DensityMatrix::product_state(dist, 7), rot, p, t, EvolutionConfig::resolving(rot, p, 0.06));
  const auto b = evolve_at(DensityMatrix::product_state(dist, 7), lab, p, t, EvolutionConfig::resolving(lab, p, 0.06));
  for (std::size_t k = 0; k < t.size(); ++k) CHECK_THAT(peg_from_rho(a[k]), WithinAbs(peg_from_rho(b[k]), 1e-9));
}

TEST_CASE("truncation one above the distribution support is adequate") {
  const SystemParams p;
  const auto dist = poisson_distribution(0.85, 13);
  const std::vector<double> t{0.03, 0.09};
  const auto tight = peg_exact(dist, p, t);
  const auto h = build_hamiltonian(p, 17);
  const auto wide = evolve_at(DensityMatrix::product_state(dist, 17), h, p, t, EvolutionConfig::resolving(h, p, 0.09));
  for (std::size_t k = 0; k < t.size(); ++k) CHECK_THAT(tight[k], WithinAbs(peg_from_rho(wide[k]), 1e-10));
}

TEST_CASE("dephasing-only evolution matches the zeroth-order closed form") {
  SystemParams p;
  p.kappa = 0.0;
  const auto dist = poisson_distribution(0.85, 13);
  const auto t = uniform_times(0.09, 10);
  const auto exact = peg_exact(dist, p, t);
  for (std::size_t k = 0; k < t.size(); ++k) CHECK_THAT(exact[k], WithinAbs(peg_zeroth(dist, p, t[k]), 1e-8));
}

TEST_CASE("first-order oracle matches the closed form") {
  const SystemParams p;
  const auto dist = poisson_distribution(0.4, 10);
  const auto h = build_hamiltonian(p, 11);
  const std::vector<double> t{0.015, 0.045, 0.09};
  const auto oracle = evolve_first_order_oracle_at(dist, h, p, t, EvolutionConfig::resolving(h, p, 0.09));
  for (std::size_t k = 0; k < t.size(); ++k)
    for (std::size_t n = 0; n < 6; ++n) {
      const auto r = rho_first(n, dist, p, t[k]);
      CHECK_THAT(oracle[k][n].gg, WithinAbs(r.gg, 1e-8));
      CHECK_THAT(oracle[k][n].ee, WithinAbs(r.ee, 1e-8));
      CHECK_THAT(oracle[k][n].coh.imag(), WithinAbs(r.coh.imag(), 1e-8));
      CHECK_THAT(oracle[k][n].coh.real(), WithinAbs(0.0, 1e-10));
    }
  CHECK_THROWS_AS(evolve_first_order_oracle_at(dist, build_hamiltonian(p, 10), p, t, {}), ValidationError);
}

TEST_CASE("configuration errors") {
  const SystemParams p;
  const auto h = build_hamiltonian(p, 4);
  const auto rho0 = DensityMatrix::product_state(PhotonDistribution::vacuum(), 4);
  EvolutionConfig coarse;
  coarse.dt = 1e-3;
  CHECK_THROWS_AS(evolve(rho0, h, p, coarse), ValidationError);
  EvolutionConfig strict;
  strict.tol = 1e-30;
  CHECK_THROWS_AS(evolve(rho0, h, p, strict), ConvergenceError);
  CHECK_THROWS_AS(evolve_at(rho0, h, p, {0.02, 0.01}, EvolutionConfig{}), ValidationError);
  CHECK_THROWS_AS(evolve_at(DensityMatrix::product_state(PhotonDistribution::vacuum(), 3), h, p, {0.01}, {}),
                  ValidationError);
}
