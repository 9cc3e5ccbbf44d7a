#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fedplt/operators.hpp"
#include "fedplt/rates.hpp"

using namespace fedplt;

TEST_CASE("gd contraction factor by hand") {
  // moduli 2 and 4 (lambda 1..3, rho 1), gamma 0.5 -> max{0, 1} ... careful:
  // |1-1| = 0, |1-2| = 1?  No: gamma*mu = 0.5*2 = 1 and 0.5*4 = 2.
  // |1-1|=0, |1-2|=1 -> not contractive.  Use gamma = 1/3: |1-2/3|=1/3,
  // |1-4/3|=1/3.
  CHECK(chi_gd(1.0 / 3.0, 1.0, {1.0, 3.0}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Equal moduli with the matched step contract in one shot.
  CHECK(chi_gd(0.5, 1.0, {1.0, 1.0}) <= 1e-15);
  // Optimal step value: (kappa-1)/(kappa+1) with kappa = 2.
  CHECK(chi_gd(2.0 / 6.0, 1.0, {1.0, 3.0}) ==
        doctest::Approx((2.0 - 1.0) / (2.0 + 1.0)).epsilon(1e-12));
}

TEST_CASE("gd contraction rejects steps outside the valid range") {
  CHECK_THROWS_AS(chi_gd(0.0, 1.0, {1.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(chi_gd(0.5, 1.0, {1.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(chi_gd(0.1, 0.0, {1.0, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(chi_gd(0.1, 1.0, {0.0, 3.0}), std::invalid_argument);
  CHECK_NOTHROW(chi_gd(0.499, 1.0, {1.0, 3.0}));
}

TEST_CASE("accelerated contraction factor by hand") {
  // lambda 1..4 at rho = 1 wait: moduli 2..5, kappa = 2.5.
  // Spec anchor: lambda in [1,4], rho -> kappa = 4 fixture uses bounds
  // {1, 4} with rho chosen so kappa = (4 + 1/rho)/(1 + 1/rho).
  // Simplest hand case: moduli {1, 4} via lambda {0.5, 3.5}, rho = 2:
  // kappa = 4, (1+4)(1-1/2)^3 = 5/8.
  CHECK(chi_agd(3, 2.0, {0.5, 3.5}) ==
        doctest::Approx(0.625).epsilon(1e-12));
  CHECK(chi_agd(1, 2.0, {0.5, 3.5}) == doctest::Approx(2.5).epsilon(1e-12));
  for (int ne = 1; ne < 10; ++ne) {
    CHECK(chi_agd(ne + 1, 2.0, {0.5, 3.5}) < chi_agd(ne, 2.0, {0.5, 3.5}));
  }
  CHECK(chi_agd(2000, 2.0, {0.5, 3.5}) <= 1e-12);
  CHECK_THROWS_AS(chi_agd(0, 2.0, {0.5, 3.5}), std::invalid_argument);
}

TEST_CASE("smallest epoch count that certifies acceleration") {
  // kappa = 4: (1+4)(1-0.5)^n < 1 at n = 3 (5/8), not n = 2 (5/4).
  CHECK(min_contractive_epochs(4.0) == 3);
  CHECK(chi_agd(3, 2.0, {0.5, 3.5}) < 1.0);
  CHECK(chi_agd(2, 2.0, {0.5, 3.5}) >= 1.0);
  // kappa = 1: factor is 2 * 0^n, one epoch suffices.
  CHECK(min_contractive_epochs(1.0) == 1);
  CHECK_THROWS_AS(min_contractive_epochs(0.5), std::invalid_argument);
}

TEST_CASE("coupling matrix entries by hand") {
  const Matrix2d s = build_S(0.5, 0.3, 2.0);
  CHECK(s(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s(1, 1) == doctest::Approx(0.8).epsilon(1e-15));

  // Exact inner solves decouple the matrix.
  const Matrix2d exact = build_S(0.0, 0.3, 2.0);
  CHECK(exact(0, 0) == 0.0);
  CHECK(exact(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(exact(1, 0) == 0.0);
  CHECK(exact(1, 1) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("coupling matrix formula holds on random tuples") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> mu_dist(0.5, 5.0);
  for (int t = 0; t < 20; ++t) {
    const double chi_pow = unit(rng);
    const double zeta = unit(rng);
    const double mu_lo = mu_dist(rng);
    const Matrix2d s = build_S(chi_pow, zeta, mu_lo);
    CHECK(std::abs(s(0, 0) - chi_pow) <= 1e-12);
    CHECK(std::abs(s(0, 1) - (1.0 + chi_pow) / mu_lo) <= 1e-12);
    CHECK(std::abs(s(1, 0) - 2.0 * chi_pow) <= 1e-12);
    CHECK(std::abs(s(1, 1) - (zeta + 2.0 * chi_pow / mu_lo)) <= 1e-12);
  }
}

TEST_CASE("eigenvalues of the coupling matrix by hand") {
  // chi_pow 0.5, zeta 0.3, mu_lo 2: trace 1.3, det 0.4 - 0.75 = -0.35.
  const Matrix2d s = build_S(0.5, 0.3, 2.0);
  const EigenPair e = eigenvalues_2x2(s);
  REQUIRE(e.real);
  const double disc = std::sqrt(1.3 * 1.3 / 4.0 + 0.35);
  CHECK(e.a == doctest::Approx(0.65 + disc).epsilon(1e-12));
  CHECK(e.b == doctest::Approx(0.65 - disc).epsilon(1e-12));
  CHECK(e.a == doctest::Approx(1.529).epsilon(1e-3));
  CHECK(e.b == doctest::Approx(-0.229).epsilon(2e-3));
  CHECK(spectral_radius_2x2(s) == doctest::Approx(e.a).epsilon(1e-12));

  // Decoupled case: eigenvalues on the diagonal.
  const EigenPair d = eigenvalues_2x2(build_S(0.0, 0.3, 2.0));
  REQUIRE(d.real);
  CHECK(std::max(d.a, d.b) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::abs(std::min(d.a, d.b)) <= 1e-15);
}

TEST_CASE("coupling eigenvalues are always real") {
  // Discriminant (tr/2)^2 - det = ((chi_pow - zeta - 2chi/mu)^2)/4
  //   + 2 chi_pow (1 + chi_pow)/mu >= 0.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.5);
  std::uniform_real_distribution<double> mu_dist(0.2, 8.0);
  for (int t = 0; t < 200; ++t) {
    const Matrix2d s = build_S(unit(rng), unit(rng), mu_dist(rng));
    const EigenPair e = eigenvalues_2x2(s);
    CHECK(e.real);
    CHECK(spectral_radius_2x2(s) <= spectral_norm_2x2(s) + 1e-12);
  }
}

TEST_CASE("spectral norm against an explicit gram eigenvalue") {
  const Matrix2d s = build_S(0.5, 0.3, 2.0);
  const Matrix2d g = s.transpose() * s;
  const double tr = g(0, 0) + g(1, 1);
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  const double lam = tr / 2.0 + std::sqrt(tr * tr / 4.0 - det);
  CHECK(spectral_norm_2x2(s) == doctest::Approx(std::sqrt(lam)).epsilon(1e-12));
}

TEST_CASE("stability certificate on the hand-worked unstable point") {
  // chi_pow 0.5, zeta 0.5, mu_lo 2: margin (1-0.5)(1-0.5) = 0.25 is below
  // coupling 4*0.5/2 = 1 -> radius above 1.
  const ContractionReport r = stability_check(0.5, 0.5, 2.0);
  CHECK(r.contraction_margin == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.coupling_strength == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(r.margin_dominates);
  CHECK_FALSE(r.stable);
  CHECK(r.spectral_radius == doctest::Approx(1.6514).epsilon(1e-4));
}

TEST_CASE("stability certificate on an exact-solver point") {
  const ContractionReport r = stability_check(0.0, 0.3, 2.0);
  CHECK(r.stable);
  CHECK(r.margin_dominates);
  CHECK(r.spectral_radius == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_FALSE(r.certificate_gap);
}

TEST_CASE("margin test and radius test agree everywhere") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> chi_dist(0.0, 0.999);
  std::uniform_real_distribution<double> zeta_dist(0.0, 0.999);
  std::uniform_real_distribution<double> mu_dist(0.3, 6.0);
  for (int t = 0; t < 500; ++t) {
    const double chi_pow = chi_dist(rng);
    const double zeta = zeta_dist(rng);
    const double mu_lo = mu_dist(rng);
    const ContractionReport r = stability_check(chi_pow, zeta, mu_lo);
    CHECK(r.margin_dominates == r.stable);
    CHECK(r.stable == (r.spectral_radius < 1.0));
    const double margin = (1.0 - zeta) * (1.0 - chi_pow);
    const double coupling = 4.0 * chi_pow / mu_lo;
    CHECK(r.contraction_margin == doctest::Approx(margin).epsilon(1e-12));
    CHECK(r.coupling_strength == doctest::Approx(coupling).epsilon(1e-12));
  }
}

TEST_CASE("participation-adjusted rate by hand") {
  CHECK(sigma_rate(0.8, 1.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(sigma_rate(0.8, 0.5) ==
        doctest::Approx(std::sqrt(0.82)).epsilon(1e-12));
  CHECK(sigma_rate(0.8, 0.5) == doctest::Approx(0.905539).epsilon(1e-6));
  CHECK(sigma_rate(1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  // Less participation -> slower certified rate.
  CHECK(sigma_rate(0.8, 0.3) > sigma_rate(0.8, 0.6));
  CHECK_THROWS_AS(sigma_rate(0.8, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sigma_rate(0.8, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(sigma_rate(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("error envelope by hand") {
  // sigma 0.5, nu 0.1: limit nu/(1-sigma) = 0.2.
  const auto curve = error_bound_curve(0.5, 0.1, 1.0, 1.0, 1.0, 60);
  REQUIRE(curve.size() == 61);
  CHECK(curve[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(curve[1] == doctest::Approx(0.5 + 0.1).epsilon(1e-12));
  CHECK(curve[2] == doctest::Approx(0.25 + 0.15).epsilon(1e-12));
  CHECK(curve[60] == doctest::Approx(0.2).epsilon(1e-9));
  for (std::size_t k = 1; k < curve.size(); ++k) {
    CHECK(curve[k] <= curve[k - 1] + 1e-12);
    CHECK(curve[k] >= 0.2 - 1e-12);
  }
}

TEST_CASE("error envelope carries the participation spread factor") {
  const auto flat = error_bound_curve(0.5, 0.0, 1.0, 1.0, 2.0, 5);
  const auto spread = error_bound_curve(0.5, 0.0, 0.25, 1.0, 2.0, 5);
  for (std::size_t k = 0; k < flat.size(); ++k) {
    CHECK(spread[k] == doctest::Approx(2.0 * flat[k]).epsilon(1e-12));
  }
  // Non-contractive sigma keeps a finite k-term sum instead of a limit.
  const auto stuck = error_bound_curve(1.0, 0.1, 1.0, 1.0, 1.0, 3);
  CHECK(stuck[3] == doctest::Approx(1.0 + 3 * 0.1).epsilon(1e-12));
}

TEST_CASE("pure decay envelope is the geometric sequence") {
  const auto curve = error_bound_curve(0.7, 0.0, 1.0, 1.0, 3.0, 10);
  for (int k = 0; k <= 10; ++k) {
    CHECK(curve[static_cast<std::size_t>(k)] ==
          doctest::Approx(3.0 * std::pow(0.7, k)).epsilon(1e-12));
  }
}

TEST_CASE("grid tuner certifies the hand-checked grid") {
  // lambda in [1, 3], rho = 1: moduli 2..4, kappa = 2, zeta = 0.5,
  // optimal gd step 1/3 -> chi = 1/3.  One epoch: coupling 4*(1/3)/2 = 2/3
  // above margin 0.5*(2/3) = 1/3 -> unstable.  Two epochs: chi_pow = 1/9,
  // margin 0.5*8/9 = 4/9 above coupling 2/9 -> stable.
  TuneGrid grid;
  grid.rho_values = {1.0};
  grid.ne_values = {1, 2};
  const ConvexityBounds b{1.0, 3.0};
  const TuneResult r = tune_grid(b, grid);
  REQUIRE(r.entries.size() == 2);
  CHECK_FALSE(r.entries[0].report.stable);
  CHECK(r.entries[0].report.spectral_radius ==
        doctest::Approx(1.295).epsilon(1e-3));
  CHECK(r.entries[1].report.stable);
  CHECK(r.entries[1].report.spectral_radius ==
        doctest::Approx(0.79).epsilon(1e-2));
  CHECK(r.best == 1);
  CHECK(r.entries[1].gamma == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("grid tuner covers the accelerated solver with its fixed step") {
  TuneGrid grid;
  grid.rho_values = {0.5, 1.0};
  grid.ne_values = {4};
  grid.solver = SolverType::Agd;
  const ConvexityBounds b{1.0, 3.0};
  const TuneResult r = tune_grid(b, grid);
  REQUIRE(r.entries.size() == 2);
  for (const TuneEntry& e : r.entries) {
    CHECK(e.gamma == 0.0);
    CHECK(e.report.chi_pow ==
          doctest::Approx(chi_agd(4, e.rho, b)).epsilon(1e-12));
    CHECK(e.report.zeta == doctest::Approx(prs_rate(e.rho, b)).epsilon(1e-12));
  }
  // Only the gd and agd solvers carry rate certificates.
  grid.solver = SolverType::ExactProx;
  CHECK_THROWS_AS(tune_grid(b, grid), std::invalid_argument);
}

TEST_CASE("exact inner solves are certified at the splitting rate itself") {
  const ConvexityBounds b{1.0, 3.0};
  for (double rho : {0.5, 1.0, 2.0}) {
    const double zeta = prs_rate(rho, b);
    const ContractionReport r = stability_check(0.0, zeta, 1.0 + 1.0 / rho);
    CHECK(r.stable);
    CHECK(r.spectral_radius == doctest::Approx(zeta).epsilon(1e-12));
  }
}

TEST_CASE("grid tuner throws when nothing is certified") {
  TuneGrid grid;
  grid.rho_values = {1.0};
  grid.ne_values = {1};
  CHECK_THROWS_AS(tune_grid({1.0, 3.0}, grid), NoStableTuning);
}

TEST_CASE("grid tuner tie-break prefers fewer epochs") {
  // Equal moduli make the accelerated factor exactly 0 for every epoch
  // count, so all points at one rho tie on the norm.
  TuneGrid grid;
  grid.rho_values = {1.0};
  grid.ne_values = {3, 1, 2};
  grid.solver = SolverType::Agd;
  const TuneResult r = tune_grid({1.0, 1.0}, grid);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[r.best].epochs == 1);
}

TEST_CASE("tuning tables list one best row with both spectral columns") {
  TuneGrid grid;
  grid.rho_values = {1.0};
  grid.ne_values = {1, 2, 3};
  const TuneResult r = tune_grid({1.0, 3.0}, grid);

  const std::string csv = tuning_table_csv(r);
  CHECK(csv.find("rho,gamma,epochs,chi_pow,zeta,spectral_radius,"
                 "spectral_norm,sigma,contraction_margin,coupling_strength,"
                 "margin_dominates,stable,certificate_gap,best") !=
        std::string::npos);
  // The trailing column is the best marker (bools print as 0/1).
  std::size_t best_rows = 0;
  for (std::size_t pos = 0;
       (pos = csv.find(",1\n", pos)) != std::string::npos; ++pos) {
    ++best_rows;
  }
  CHECK(best_rows == 1);
  // Three data rows + header.
  std::size_t lines = 0;
  for (char c : csv) {
    lines += (c == '\n') ? 1 : 0;
  }
  CHECK(lines == 4);

  const std::string json = tuning_table_json(r);
  CHECK(json.find("\"spectral_radius\"") != std::string::npos);
  CHECK(json.find("\"spectral_norm\"") != std::string::npos);
  CHECK(json.find("\"best\"") != std::string::npos);
}
