#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedplt/privacy.hpp"
#include "fedplt/problem.hpp"

using namespace fedplt;

namespace {

/// Independent long-double reimplementation of the per-agent divergence
/// bound, kept deliberately separate from the library's arithmetic.
long double rdp_reference(long double lambda, long double clip,
                          long double lambda_lo, long double tau_sq,
                          long double q, long double gamma, long double K,
                          long double Ne) {
  const long double front =
      lambda * clip * clip / (lambda_lo * tau_sq * q * q);
  const long double decay = -lambda_lo * gamma * K * Ne / 2.0L;
  return front * (1.0L - std::exp(decay));
}

PrivacyParams spec_params() {
  PrivacyParams pp;
  pp.clip_bound = 1.0;
  pp.tau_sq = 1.0;
  pp.gamma = 0.1;
  pp.lambda_order = 2.0;
  pp.rounds = 10;
  pp.epochs = 5;
  return pp;
}

}  // namespace

TEST_CASE("gradient clipping by hand") {
  Vector small(2);
  small << 0.1, 0.0;
  CHECK(clip_gradient(small, 1.0) == small);  // norm 0.1 <= 1/2

  Vector g(2);
  g << 3.0, 4.0;  // norm 5, cap 2/2 = 1 -> scale by 1/5
  const Vector c = clip_gradient(g, 2.0);
  CHECK(c(0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(c(1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(c.norm() == doctest::Approx(1.0).epsilon(1e-12));

  // Idempotent, zero-safe, and norm-capped on random inputs.
  CHECK(clip_gradient(c, 2.0) == c);
  CHECK(clip_gradient(Vector::Zero(3), 1.0).norm() == 0.0);
  auto rng = make_rng(3, {kStreamCheck});
  std::normal_distribution<double> normal(0.0, 4.0);
  for (int t = 0; t < 50; ++t) {
    Vector x(3);
    for (int j = 0; j < 3; ++j) {
      x[j] = normal(rng);
    }
    CHECK(clip_gradient(x, 1.5).norm() <= 0.75 + 1e-12);
  }
  CHECK_THROWS_AS(clip_gradient(g, 0.0), std::invalid_argument);
}

TEST_CASE("agent divergence bound matches the worked example") {
  const PrivacyParams pp = spec_params();
  const double eps = rdp_epsilon_agent(pp, 1.0, 10);
  // 2 * 1 / (1 * 1 * 100) * (1 - e^{-1*0.1*10*5/2}) = 0.02 (1 - e^{-2.5}).
  CHECK(eps == doctest::Approx(0.02 * (1.0 - std::exp(-2.5))).epsilon(1e-12));
  CHECK(eps == doctest::Approx(0.018358).epsilon(1e-4));
  CHECK(rdp_epsilon_limit(pp, 1.0, 10) == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("agent divergence bound matches an independent reimplementation") {
  auto check_params = [](PrivacyParams pp, double lambda_lo, std::size_t q) {
    const double got = rdp_epsilon_agent(pp, lambda_lo, q);
    const long double want = rdp_reference(
        pp.lambda_order, pp.clip_bound, lambda_lo, pp.tau_sq,
        static_cast<long double>(q), pp.gamma, pp.rounds, pp.epochs);
    CHECK(got == doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
  };
  check_params(spec_params(), 1.0, 10);
  PrivacyParams pp;
  pp.clip_bound = 2.5;
  pp.tau_sq = 0.3;
  pp.gamma = 0.05;
  pp.lambda_order = 8.0;
  pp.rounds = 40;
  pp.epochs = 3;
  check_params(pp, 0.7, 33);
  pp.lambda_order = 1.5;
  pp.rounds = 1;
  check_params(pp, 2.0, 5);
}

TEST_CASE("divergence bound edge cases and growth") {
  PrivacyParams pp = spec_params();
  pp.rounds = 0;
  CHECK(rdp_epsilon_agent(pp, 1.0, 10) == 0.0);

  // Monotone in rounds and epochs, always below the infinite-round limit.
  double prev = 0.0;
  for (int k : {1, 2, 5, 20, 100}) {
    pp.rounds = k;
    const double eps = rdp_epsilon_agent(pp, 1.0, 10);
    CHECK(eps > prev);
    CHECK(eps < rdp_epsilon_limit(pp, 1.0, 10));
    prev = eps;
  }
  pp.rounds = 10;
  double prev_ne = 0.0;
  for (int ne : {1, 2, 5, 20}) {
    pp.epochs = ne;
    const double eps = rdp_epsilon_agent(pp, 1.0, 10);
    CHECK(eps > prev_ne);
    prev_ne = eps;
  }

  // Log-spaced round counts up to 10^6 stay below the ceiling.
  pp = spec_params();
  for (double k = 1.0; k <= 1e6; k *= 10.0) {
    pp.rounds = static_cast<int>(k);
    CHECK(rdp_epsilon_agent(pp, 1.0, 10) <=
          rdp_epsilon_limit(pp, 1.0, 10) + 1e-15);
  }

  CHECK_THROWS_AS(rdp_epsilon_agent(pp, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(rdp_epsilon_agent(pp, 1.0, 0), std::invalid_argument);
  pp.lambda_order = 1.0;
  CHECK_THROWS_AS(rdp_epsilon_agent(pp, 1.0, 10), std::invalid_argument);
}

TEST_CASE("worst-case bound tracks the smallest dataset") {
  const PrivacyParams pp = spec_params();
  const std::vector<std::size_t> q{10, 100};
  const double worst = rdp_epsilon_worst(pp, 1.0, q);
  CHECK(worst == doctest::Approx(rdp_epsilon_agent(pp, 1.0, 10)).epsilon(1e-15));
  // q enters squared: the 10-sample agent pays 100x the 100-sample agent.
  CHECK(worst == doctest::Approx(100.0 * rdp_epsilon_agent(pp, 1.0, 100))
                     .epsilon(1e-12));

  auto rng = make_rng(5, {kStreamCheck});
  std::uniform_int_distribution<std::size_t> size_dist(3, 200);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::size_t> sizes;
    for (int i = 0; i < 6; ++i) {
      sizes.push_back(size_dist(rng));
    }
    double max_eps = 0.0;
    for (std::size_t s : sizes) {
      max_eps = std::max(max_eps, rdp_epsilon_agent(pp, 1.0, s));
    }
    CHECK(rdp_epsilon_worst(pp, 1.0, sizes) ==
          doctest::Approx(max_eps).epsilon(1e-15));
  }
  CHECK_THROWS_AS(rdp_epsilon_worst(pp, 1.0, {}), std::invalid_argument);
}

TEST_CASE("renyi to approximate conversion by hand") {
  // eps_adp = eps + log(1/delta)/(lambda-1): 0.02 + 1/(2-1) = 1.02.
  CHECK(rdp_to_adp(0.02, 2.0, std::exp(-1.0)) ==
        doctest::Approx(1.02).epsilon(1e-12));
  // Independent reimplementation on a few tuples.
  for (double eps : {0.01, 0.3}) {
    for (double lam : {1.5, 4.0}) {
      for (double delta : {1e-3, 1e-7}) {
        const long double want =
            static_cast<long double>(eps) +
            std::log(1.0L / static_cast<long double>(delta)) /
                (static_cast<long double>(lam) - 1.0L);
        CHECK(rdp_to_adp(eps, lam, delta) ==
              doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
      }
    }
  }
  // Increasing in the divergence, decreasing in delta.
  CHECK(rdp_to_adp(0.3, 2.0, 1e-5) > rdp_to_adp(0.1, 2.0, 1e-5));
  CHECK(rdp_to_adp(0.1, 2.0, 1e-7) > rdp_to_adp(0.1, 2.0, 1e-5));
  CHECK_THROWS_AS(rdp_to_adp(0.1, 1.0, 1e-5), std::invalid_argument);
  CHECK_THROWS_AS(rdp_to_adp(0.1, 2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rdp_to_adp(0.1, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("private start has the advertised variance") {
  const double tau_sq = 0.5;
  const double lambda_lo = 2.0;
  const int dim = 5;
  const int draws = 20000;
  double acc = 0.0;
  for (int t = 0; t < draws; ++t) {
    auto rng = make_rng(404, {kStreamInit, static_cast<std::uint32_t>(t)});
    acc += private_init(dim, tau_sq, lambda_lo, rng).squaredNorm();
  }
  const double sample_var = acc / static_cast<double>(draws) / dim;
  CHECK(std::abs(sample_var - 2.0 * tau_sq / lambda_lo) <=
        0.03 * (2.0 * tau_sq / lambda_lo));

  auto r1 = make_rng(9, {kStreamInit, 0});
  auto r2 = make_rng(9, {kStreamInit, 0});
  CHECK(private_init(dim, tau_sq, lambda_lo, r1) ==
        private_init(dim, tau_sq, lambda_lo, r2));
  auto r3 = make_rng(9, {kStreamInit, 1});
  CHECK(private_init(dim, tau_sq, lambda_lo, r3).squaredNorm() > 0.0);
  auto r4 = make_rng(9, {kStreamInit, 0});
  CHECK(private_init(dim, 0.0, lambda_lo, r4).norm() == 0.0);
}

TEST_CASE("noisy accuracy bound by hand") {
  // tau 0.1 (tau_sq 0.01), n=1, N=2, gamma=0.1, chi=0.5, Ne=2, s=0.5:
  // asymptote = (1/0.5) * 0.1 * sqrt(10*1*2*0.1) * (1 - 0.25)/(1 - 0.5)
  //           = 2 * 0.1 * sqrt(2) * 1.5 = 0.424264.
  const double asym =
      privacy_accuracy_asymptote(0.5, 0.5, 2, 0.01, 1, 2, 0.1);
  CHECK(asym == doctest::Approx(0.424264).epsilon(1e-5));

  // Zero noise collapses the bound to the geometric decay term.
  const PrivacyAccuracyBound clean =
      privacy_accuracy_bound(0.5, 0.5, 2, 0.0, 1, 2, 0.1, 8, 3.0);
  CHECK(clean.contractive);
  CHECK(clean.value == doctest::Approx(3.0 * std::pow(0.5, 8)).epsilon(1e-12));

  // The finite-round bound approaches the asymptote from below + decay.
  const PrivacyAccuracyBound far =
      privacy_accuracy_bound(0.5, 0.5, 2, 0.01, 1, 2, 0.1, 60, 3.0);
  CHECK(far.value == doctest::Approx(asym).epsilon(1e-9));

  // chi = 0 (exact inner solves in the model) keeps one unit of noise gain.
  const double exact_asym =
      privacy_accuracy_asymptote(0.5, 0.0, 2, 0.01, 1, 2, 0.1);
  CHECK(exact_asym ==
        doctest::Approx(2.0 * 0.1 * std::sqrt(2.0)).epsilon(1e-12));

  // Monotone in the noise scale.
  CHECK(privacy_accuracy_asymptote(0.5, 0.5, 2, 0.04, 1, 2, 0.1) >
        asym);

  // Non-contractive rates carry no asymptote.
  const PrivacyAccuracyBound stuck =
      privacy_accuracy_bound(1.0, 0.5, 2, 0.01, 1, 2, 0.1, 5, 1.0);
  CHECK_FALSE(stuck.contractive);
  CHECK_THROWS_AS(privacy_accuracy_asymptote(1.0, 0.5, 2, 0.01, 1, 2, 0.1),
                  std::invalid_argument);
}

TEST_CASE("sensitivity falsifier accepts clipped gradients") {
  GenerateConfig gen;
  gen.seed = 71;
  gen.num_agents = 1;
  gen.dim = 3;
  gen.per_agent = 12;
  const ProblemInstance p = generate_logistic_data(gen);
  const SensitivityOutcome out = sensitivity_check(
      p.datasets[0], p.regularizer, 0.5, 200, 11, /*clipped=*/true);
  CHECK(out.holds);
  CHECK(out.worst_gap <= 0.0);
}

TEST_CASE("sensitivity falsifier separates honest and dishonest constants") {
  GenerateConfig gen;
  gen.seed = 72;
  gen.num_agents = 1;
  gen.dim = 3;
  gen.per_agent = 10;
  const ProblemInstance p = generate_logistic_data(gen);
  double max_norm = 0.0;
  for (const DataPoint& d : p.datasets[0].points) {
    max_norm = std::max(max_norm, d.features.norm());
  }
  // Unclipped per-sample gradients are bounded by the feature norm, so a
  // swap moves the mean by (||a_old|| + ||a_new||) / q.  Replacement probes
  // share the data's scale, which leaves a generous constant unfalsified
  // while a fraction of the data's own scale is caught.
  CHECK(sensitivity_check(p.datasets[0], p.regularizer, 6.0 * max_norm, 300,
                          13, false)
            .holds);
  const SensitivityOutcome bad = sensitivity_check(
      p.datasets[0], p.regularizer, 0.5 * max_norm, 300, 13, false);
  CHECK_FALSE(bad.holds);
  CHECK(bad.worst_gap > 0.0);
  // L = 0 claims zero sensitivity: any probe disproves it.
  CHECK_FALSE(
      sensitivity_check(p.datasets[0], p.regularizer, 0.0, 10, 1, false)
          .holds);
}

TEST_CASE("privacy report aggregates agents and conversions") {
  const PrivacyParams pp = spec_params();
  const std::vector<std::size_t> q{10, 100};
  const std::vector<double> deltas{std::exp(-1.0), 1e-5};
  const PrivacyReport rep = build_privacy_report(pp, 1.0, q, deltas);

  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].samples == 10);
  CHECK(rep.rows[0].eps_rdp ==
        doctest::Approx(rdp_epsilon_agent(pp, 1.0, 10)).epsilon(1e-15));
  CHECK(rep.rows[0].eps_rdp_limit == doctest::Approx(0.02).epsilon(1e-12));
  REQUIRE(rep.rows[0].eps_adp.size() == 2);
  CHECK(rep.rows[0].eps_adp[0] ==
        doctest::Approx(rdp_to_adp(rep.rows[0].eps_rdp, 2.0, deltas[0]))
            .epsilon(1e-15));
  CHECK(rep.eps_rdp_worst ==
        doctest::Approx(rep.rows[0].eps_rdp).epsilon(1e-15));

  const std::string csv = privacy_report_csv(rep);
  CHECK(csv.find("agent,samples,order,rounds,epochs,eps_rdp,eps_rdp_limit") !=
        std::string::npos);
  const std::string json = privacy_report_json(rep);
  CHECK(json.find("\"worst\"") != std::string::npos);
  CHECK(json.find("\"eps_rdp_limit\"") != std::string::npos);
}
