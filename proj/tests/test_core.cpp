#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cavlab/core.hpp"
#include "cavlab/density_matrix.hpp"

using namespace cavlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("default parameters are valid and physical") {
  SystemParams p;
  REQUIRE_NOTHROW(p.validate());
  CHECK(p.omega == 150.2);
  CHECK_THAT(p.photon_lifetime(), WithinRel(0.2198, 1e-3));
}

TEST_CASE("parameter validation rejects bad rates") {
  SystemParams p;
  p.omega = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.gamma = -1.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.kappa = NAN;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.gamma = 2.0 * p.omega;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("Poissonian weights") {
  const auto d = poisson_distribution(0.4, 12);
  CHECK_THAT(d.probs()[0], WithinAbs(0.6703200460356393, 1e-15));
  CHECK_THAT(d.probs()[1], WithinAbs(0.26812801841425576, 1e-15));
  CHECK_THAT(d.probs()[2], WithinAbs(0.05362560368285116, 1e-15));
  CHECK_THAT(poisson_distribution(1.77, 20).probs()[0], WithinAbs(0.17033298882540943, 1e-15));
  CHECK_THAT(d.mean(), WithinAbs(0.4, 1e-12));
  CHECK_THAT(d.sum() + d.truncation_deficit(), WithinAbs(1.0, 1e-15));
}

TEST_CASE("vacuum is a point mass") {
  const auto d = poisson_distribution(0.0, 3);
  CHECK(d.probs()[0] == 1.0);
  CHECK(d.truncation_deficit() == 0.0);
  CHECK(d[5] == 0.0);
  CHECK(d[-1] == 0.0);
}

TEST_CASE("truncation that drops too much mass is refused") {
  CHECK_THROWS_AS(poisson_distribution(5.0, 2), ValidationError);
}

TEST_CASE("coherent truncation keeps the requested tail") {
  for (double nbar : {0.0, 0.4, 0.85, 1.77, 5.0}) {
    const auto nmax = coherent_nmax_for(nbar, 1e-12);
    CHECK(poisson_tail(nbar, nmax) < 1e-12);
    if (nmax > 0) CHECK(poisson_tail(nbar, nmax - 1) >= 1e-12);
  }
  CHECK(coherent_nmax_for(0.0, 1e-12) == 0);
}

TEST_CASE("distribution invariants") {
  CHECK_THROWS_AS(PhotonDistribution({0.5, -0.1, 0.6}), ValidationError);
  CHECK_THROWS_AS(PhotonDistribution({0.7, 0.7}), ValidationError);
  CHECK_THROWS_AS(PhotonDistribution({0.5, 0.4}), ValidationError);
  CHECK_NOTHROW(PhotonDistribution({0.5, 0.4}, 0.1));
  CHECK_THROWS_AS(PhotonDistribution(std::vector<double>{}), ValidationError);
  const auto n = PhotonDistribution::normalized({2.0, 1.0, 1.0});
  CHECK_THAT(n.probs()[0], WithinAbs(0.5, 1e-15));
  CHECK_THROWS_AS(PhotonDistribution::normalized({0.0, 0.0}), ValidationError);
}

TEST_CASE("trace validation") {
  CHECK_NOTHROW(Trace({0.0, 0.1}, {0.0, 1.0}));
  CHECK_THROWS_AS(Trace({0.0, 0.0}, {0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(Trace({0.1, 0.0}, {0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(Trace({0.0}, {0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(Trace({0.0, 0.1}, {0.1, 1.1}), ValidationError);
  CHECK_NOTHROW(Trace({0.0, 0.1}, {-0.2, 1.1}, Trace::kMeasuredSlack));
  CHECK_THROWS_AS(Trace({0.0, 0.1}, {0.1, 0.2}, Trace::kAnalyticSlack, {0.1}), ValidationError);

  const Trace t({0.0, 0.1, 0.2}, {0.1, 0.2, 0.3}, Trace::kAnalyticSlack, {0.01, 0.02, 0.03});
  const auto h = t.head(2);
  CHECK(h.size() == 2);
  CHECK(h.sigmas()[1] == 0.02);
  CHECK(t.with_values({0.3, 0.2, 0.1}).values()[0] == 0.3);
}

TEST_CASE("uniform sample grid") {
  const auto t = uniform_times(0.09, 10);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == 0.09);
  CHECK(t.size() == 10);
  CHECK_THROWS_AS(uniform_times(0.09, 1), ValidationError);
  CHECK_THROWS_AS(uniform_times(0.0, 5), ValidationError);
}

TEST_CASE("interleaved basis") {
  CHECK(basis_index(0, Level::ground) == 0);
  CHECK(basis_index(0, Level::excited) == 1);
  CHECK(basis_index(3, Level::excited) == 7);
  CHECK(photon_number_of(7) == 3);
  CHECK(is_excited(7));
  CHECK_FALSE(is_excited(6));
}

TEST_CASE("product state satisfies the density-matrix invariants") {
  const auto dist = poisson_distribution(0.85, 13);
  const auto rho = DensityMatrix::product_state(dist, 14);
  REQUIRE_NOTHROW(rho.check_invariants());
  CHECK_THAT(rho.population(1, Level::excited), WithinAbs(dist.probs()[1], 1e-15));
  CHECK(rho.population(1, Level::ground) == 0.0);
  CHECK_THROWS_AS(DensityMatrix::product_state(dist, 5), ValidationError);
}

TEST_CASE("invariant checks catch broken states") {
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = 1.0;
  m(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix(1, m).check_invariants(), ValidationError);
  m(0, 1) = 0.0;
  m(0, 0) = 0.9;
  CHECK_THROWS_AS(DensityMatrix(1, m).check_invariants(), ValidationError);
  m(0, 0) = 1.1;
  m(1, 1) = -0.1;
  CHECK_THROWS_AS(DensityMatrix(1, m).check_invariants(), ValidationError);
  CHECK_THROWS_AS(DensityMatrix(2, m), ValidationError);
}
