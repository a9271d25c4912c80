#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "beliefplay/analysis.h"
#include "beliefplay/errors.h"
#include "beliefplay/games.h"

namespace beliefplay {
namespace {

using Set = std::vector<std::size_t>;

Belief probs(std::vector<double> p) { return Belief::from_probs(p); }

TEST(Kl, HandValues) {
  auto g = make_cournot();
  const StrategyProfile qd({{0.5}, {0.5}}), qs({{2.0 / 3.0}, {2.0 / 3.0}});
  EXPECT_EQ(kl_divergence(*g, 1, 1, qs), 0.0);
  EXPECT_NEAR(kl_divergence(*g, 0, 1, qd), 0.0, 1e-15);
  EXPECT_NEAR(kl_divergence(*g, 0, 1, qs), 4.0 / 9.0, 1e-12);
}

TEST(Kl, NonNegativeAndZeroOnDiagonal) {
  Rng rng(1);
  for (const auto& g : {make_cournot(), make_zerosum_example(), make_investment(),
                        make_coordination_penalty()}) {
    for (int k = 0; k < 200; ++k) {
      auto q = g->random_profile(rng);
      for (std::size_t a = 0; a < g->space().size(); ++a) {
        EXPECT_EQ(kl_divergence(*g, a, a, q), 0.0);
        for (std::size_t b = 0; b < g->space().size(); ++b)
          ASSERT_GE(kl_divergence(*g, a, b, q), 0.0) << g->id();
      }
    }
  }
}

TEST(Kl, DegenerateAtomMismatchIsInfinite) {
  GameOptions opts;
  opts.sigma = {0.0};
  auto g = make_investment(opts);
  EXPECT_EQ(kl_divergence(*g, 1, 0, StrategyProfile({{0.2}, {0.2}})),
            std::numeric_limits<double>::infinity());
}

TEST(EquivalentSet, Examples) {
  auto cournot = make_cournot();
  EXPECT_EQ(payoff_equivalent_set(*cournot, StrategyProfile({{0.5}, {0.5}})), (Set{0, 1}));
  EXPECT_EQ(payoff_equivalent_set(*cournot, StrategyProfile({{0.6}, {0.6}})), (Set{0}));
  auto inv = make_investment();
  Rng rng(2);
  for (int k = 0; k < 100; ++k)
    EXPECT_EQ(payoff_equivalent_set(*inv, inv->random_profile(rng)), (Set{1}));
  auto zs = make_zerosum_example();
  EXPECT_EQ(payoff_equivalent_set(*zs, StrategyProfile({{0.0}, {1.0}})), (Set{0, 1, 2}));
}

TEST(EquivalentSet, ContainsTruthAndGrowsWithTolerance) {
  Rng rng(3);
  for (const auto& g : {make_cournot(), make_zerosum_example(), make_coordination_penalty()}) {
    for (int k = 0; k < 100; ++k) {
      auto q = g->random_profile(rng);
      Set prev;
      for (double tol : {0.0, 1e-9, 1e-3, 1e-1, 10.0}) {
        Set s = payoff_equivalent_set(*g, q, tol);
        EXPECT_TRUE(std::count(s.begin(), s.end(), g->space().true_index()) == 1);
        EXPECT_TRUE(std::includes(s.begin(), s.end(), prev.begin(), prev.end()));
        prev = s;
      }
    }
  }
}

TEST(EquivalentSet, MixedProfiles) {
  auto g = make_two_route_congestion();
  // every action profile has its own congestion, so full support pins the truth
  EXPECT_EQ(payoff_equivalent_set_mixed(*g, StrategyProfile({{0.3, 0.7}, {0.6, 0.4}})),
            (Set{0}));
  const StrategyProfile pure({{1.0, 0.0}, {0.0, 1.0}});
  EXPECT_EQ(payoff_equivalent_set_mixed(*g, pure), payoff_equivalent_set(*g, pure));
  // an action with probability exactly support_tol is outside the support
  const StrategyProfile edge({{1.0 - 1e-6, 1e-6}, {0.0, 1.0}});
  EXPECT_EQ(payoff_equivalent_set_mixed(*g, edge, kKlTolerance, 1e-6),
            payoff_equivalent_set(*g, pure));
}

TEST(Certify, CournotExamples) {
  auto g = make_cournot();
  auto star = certify_fixed_point(*g, Belief::point_mass(2, 0),
                                  StrategyProfile({{2.0 / 3.0}, {2.0 / 3.0}}));
  EXPECT_TRUE(star.valid);
  EXPECT_TRUE(star.is_complete_info);
  auto dagger = certify_fixed_point(*g, probs({0.5, 0.5}), StrategyProfile({{0.5}, {0.5}}));
  EXPECT_TRUE(dagger.valid);
  EXPECT_FALSE(dagger.is_complete_info);
  auto bad = certify_fixed_point(*g, probs({0.5, 0.5}), StrategyProfile({{0.6}, {0.6}}));
  EXPECT_FALSE(bad.valid);
  EXPECT_FALSE(bad.support_in_equivalence);
  EXPECT_NEAR(bad.eq_residual, 0.15 * std::sqrt(2.0), 1e-9);  // BR is (0.45, 0.45)
}

TEST(Enumerate, PaperFixedPointSets) {
  EnumerationOptions opts;
  auto cournot = enumerate_fixed_points(*make_cournot(), opts);
  ASSERT_EQ(cournot.clusters.size(), 2u);
  const auto* star = cournot.find("complete_info");
  ASSERT_NE(star, nullptr);
  EXPECT_NEAR(star->rep().strategy[0][0], 2.0 / 3.0, 1e-9);
  const FixedPointCluster* other =
      &cournot.clusters[&cournot.clusters[0] == star ? 1 : 0];
  EXPECT_FALSE(other->complete_info);
  EXPECT_NEAR(other->rep().belief.prob(0), 0.5, 1e-9);
  EXPECT_NEAR(other->rep().strategy[1][0], 0.5, 1e-9);

  auto inv = enumerate_fixed_points(*make_investment(), opts);
  ASSERT_EQ(inv.clusters.size(), 1u);
  EXPECT_TRUE(inv.clusters[0].complete_info);
  EXPECT_NEAR(inv.clusters[0].rep().belief.prob(1), 1.0, 1e-12);
  EXPECT_NEAR(inv.clusters[0].rep().strategy[0][0], 1.0 / 3.0, 1e-9);

  opts.belief_grid = 11;
  opts.strategy_grid = 13;
  auto zs = enumerate_fixed_points(*make_zerosum_example(), opts);
  ASSERT_EQ(zs.clusters.size(), 2u);
  for (const auto& c : zs.clusters) {
    for (const auto& m : c.members) {
      ASSERT_EQ(m.strategy[0][0], 0.0);
      if (c.complete_info) continue;
      double min_supported = 1e9;
      for (std::size_t s : m.belief.support())
        min_supported = std::min(min_supported, 1.0 + 2.0 * static_cast<double>(s));  // S = {1, 3, 5}
      ASSERT_LE(m.strategy[1][0], min_supported + 1e-9);
    }
  }
}

TEST(Enumerate, MembersRecertify) {
  EnumerationOptions opts;
  opts.belief_grid = 21;
  opts.strategy_grid = 9;
  for (const auto& g : {make_cournot(), make_investment(), make_zerosum_example(),
                        make_coordination_penalty()}) {
    auto e = enumerate_fixed_points(*g, opts);
    for (const auto& c : e.clusters)
      for (const auto& m : c.members)
        ASSERT_TRUE(certify_fixed_point(*g, m.belief, m.strategy, opts.tol_kl, opts.tol_eq).valid)
            << g->id() << " " << c.id;
  }
}

TEST(Completeness, PaperVerdicts) {
  EXPECT_TRUE(check_all_fixed_points_complete(*make_investment(), 21, 200, 1).all_complete);
  auto c = check_all_fixed_points_complete(*make_cournot(), 21, 200, 1);
  EXPECT_FALSE(c.all_complete);
  ASSERT_TRUE(c.counterexample.has_value());
  EXPECT_NEAR(c.counterexample->strategy[0][0], 0.5, 1e-9);
  EXPECT_FALSE(check_all_fixed_points_complete(*make_coordination_penalty(), 21, 200, 1)
                   .all_complete);
}

TEST(CompleteInfoConditions, PaperExamples) {
  auto co = make_coordination_penalty();
  auto cert = certify_fixed_point(*co, probs({0.5, 0.5}), StrategyProfile({{1.0}, {1.5}}));
  ASSERT_TRUE(cert.valid);
  auto r = check_complete_info_equilibrium_conditions(*co, cert, 0.2, 500, 1);
  EXPECT_TRUE(r.local_equivalence);
  EXPECT_TRUE(r.concavity);
  EXPECT_TRUE(r.eq_matches_complete);

  auto cournot = make_cournot();
  cert = certify_fixed_point(*cournot, probs({0.5, 0.5}), StrategyProfile({{0.5}, {0.5}}));
  r = check_complete_info_equilibrium_conditions(*cournot, cert, 0.05, 500, 1);
  EXPECT_FALSE(r.local_equivalence);
  EXPECT_TRUE(r.counterexample.has_value());

  // min of the supported parameters is 3; q2 = 1.5 leaves room 1.5
  auto zs = make_zerosum_example();
  cert = certify_fixed_point(*zs, probs({0.0, 0.5, 0.5}), StrategyProfile({{0.0}, {1.5}}));
  ASSERT_TRUE(cert.valid);
  r = check_complete_info_equilibrium_conditions(*zs, cert, 1.0, 500, 1);
  EXPECT_TRUE(r.local_equivalence);
  EXPECT_TRUE(r.concavity);
}

TEST(Thresholds, HandValue) {
  auto th = stability_thresholds(Belief::point_mass(2, 0), 0.3, 0.9, 2);
  EXPECT_NEAR(th.rho1, 0.0067720090293453723, 1e-15);
  EXPECT_NEAR(th.rho2, 0.075, 1e-15);
  EXPECT_EQ(th.n_excluded, 1u);
  EXPECT_FALSE(th.degenerate);

  auto full = stability_thresholds(probs({0.2, 0.3, 0.5}), 0.3, 0.5, 3);
  EXPECT_TRUE(full.degenerate);
  EXPECT_EQ(full.rho2, 0.3 / 3.0);
}

TEST(Thresholds, OrderingOnRandomInputs) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 2 + k % 4;
    std::vector<double> p(n);
    double sum = 0.0;
    for (double& v : p) sum += (v = u(rng) < 0.3 ? 0.0 : u(rng) + 1e-3);
    if (sum == 0.0) p[0] = sum = 1.0;
    for (double& v : p) v /= sum;
    const Belief theta = Belief::from_probs(p);
    const double eps = 0.01 + u(rng), gamma = 0.01 + 0.98 * u(rng);
    auto th = stability_thresholds(theta, eps, gamma, n);
    ASSERT_GT(th.rho1, 0.0);
    ASSERT_LT(th.rho1, th.rho2);
    if (th.degenerate)
      ASSERT_LE(th.rho2, eps / static_cast<double>(n));
    else
      ASSERT_LT(th.rho2, eps / static_cast<double>(n));
    double min_supported = 1.0;
    for (std::size_t s : theta.support()) min_supported = std::min(min_supported, theta.prob(s));
    ASSERT_LE(th.rho3, min_supported);
  }
  EXPECT_THROW(stability_thresholds(Belief::uniform(2), 0.3, 1.5, 2), ContractError);
}

TEST(Rate, ExactExponential) {
  std::vector<double> ts, ys;
  for (int t = 1; t <= 300; ++t) {
    ts.push_back(t);
    ys.push_back(-0.1 * t + 2.0);
  }
  auto fit = fit_line(ts, ys);
  EXPECT_NEAR(fit.slope, -0.1, 1e-12);
  EXPECT_NEAR(fit.intercept, 2.0, 1e-10);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);

  // the same curve stored as a belief trajectory
  Trajectory traj(2, {1}, 1);
  for (int t = 1; t <= 200; ++t) {
    const double a = -0.1 * t;
    traj.append(Belief::from_log_weights(std::vector<double>{a, std::log1p(-std::exp(a))}),
                StrategyProfile(std::vector<std::vector<double>>{{0.0}}), {0.0}, true);
  }
  auto r = estimate_convergence_rate(traj, 0, 10);
  EXPECT_NEAR(r.slope, -0.1, 1e-12);
  EXPECT_NEAR(r.r2, 1.0, 1e-12);
  EXPECT_EQ(r.points, 190u);
  EXPECT_FALSE(r.truncated);
}

int brute_upcrossings(const std::vector<double>& x, double lo, double hi) {
  const int n = static_cast<int>(x.size());
  std::vector<int> memo(n + 1, -1);
  std::function<int(int)> best = [&](int i) -> int {
    if (i >= n) return 0;
    if (memo[i] >= 0) return memo[i];
    int out = 0;
    for (int u = i; u < n; ++u) {
      if (!(x[u] < lo)) continue;
      for (int v = u + 1; v < n; ++v)
        if (x[v] > hi) out = std::max(out, 1 + best(v + 1));
    }
    return memo[i] = out;
  };
  return best(0);
}

TEST(Upcrossings, ExamplesAndBruteForce) {
  EXPECT_EQ(upcrossing_count(std::vector<double>{0.9, 0.7, 0.5, 0.3, 0.1}, 0.2, 0.6), 0);
  EXPECT_EQ(upcrossing_count(std::vector<double>{0.0, 0.5, 0.0, 0.5}, 0.1, 0.4), 2);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> x(1 + k % 25);
    for (double& v : x) v = u(rng);
    const double lo = 0.1 + 0.4 * u(rng), hi = lo + 0.4 * u(rng) + 1e-3;
    ASSERT_EQ(upcrossing_count(x, lo, hi), brute_upcrossings(x, lo, hi));
  }
}

TEST(Wilson, FrozenValues) {
  auto a = wilson_interval(5, 10);
  EXPECT_NEAR(a.lo, 0.23658959361548731, 1e-14);
  EXPECT_NEAR(a.hi, 0.76341040638451263, 1e-14);
  auto b = wilson_interval(0, 20);
  EXPECT_NEAR(b.lo, 0.0, 1e-12);
  EXPECT_NEAR(b.hi, 0.16113012549493322, 1e-14);
  auto c = wilson_interval(200, 200);
  EXPECT_NEAR(c.lo, 0.98115399408167914, 1e-14);
  EXPECT_NEAR(c.hi, 1.0, 1e-12);
}

TEST(Martingale, EquivalentProfileIsExact) {
  auto g = make_cournot();
  auto stats = martingale_diagnostic(*g, probs({0.3, 0.7}), StrategyProfile({{0.5}, {0.5}}),
                                     1000, 1);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_NEAR(stats[1].mean_ratio, stats[1].expected_ratio, 1e-12);
  EXPECT_NEAR(stats[1].ratio_se, 0.0, 1e-12);
}

TEST(Martingale, RatioMeanAndSubmartingale) {
  auto g = make_cournot();
  auto stats = martingale_diagnostic(*g, probs({0.4, 0.6}), StrategyProfile({{0.6}, {0.6}}),
                                     100000, 7);
  for (const auto& s : stats) {
    EXPECT_LE(std::abs(s.mean_ratio - s.expected_ratio), 3.0 * s.ratio_se + 1e-15);
    EXPECT_GE(s.mean_log_gain, -3.0 * s.log_gain_se);
  }
}

TEST(LocalStability, ZeroRadiiUnitHorizonStays) {
  auto g = make_cournot();
  auto cert = certify_fixed_point(*g, probs({0.5, 0.5}), StrategyProfile({{0.5}, {0.5}}));
  LocalStabilityOptions opts;
  opts.eps1 = opts.delta1 = 0.0;
  opts.horizon = 1;
  opts.n_runs = 20;
  auto r = monte_carlo_local_stability(*g, cert, opts);
  EXPECT_EQ(r.stayed, 20u);
  EXPECT_EQ(r.stay_probability, 1.0);
  EXPECT_LE(r.stay_ci.lo, 1.0);
  EXPECT_GE(r.escape_probability, 0.0);
}

TEST(Assumption2, CournotFixedPoints) {
  auto g = make_cournot();
  auto star = certify_fixed_point(*g, Belief::point_mass(2, 0),
                                  StrategyProfile({{2.0 / 3.0}, {2.0 / 3.0}}));
  auto ev = check_assumption2(*g, star, 1.0 / 3.0, 1.0, 1000, 3);
  EXPECT_TRUE(ev.a2a.passed) << ev.a2a.detail;
  EXPECT_TRUE(ev.a2b.passed) << ev.a2b.detail;
  EXPECT_TRUE(ev.a2c.passed) << ev.a2c.detail;

  auto dagger = certify_fixed_point(*g, probs({0.5, 0.5}), StrategyProfile({{0.5}, {0.5}}));
  ev = check_assumption2(*g, dagger, 0.1, 0.1, 500, 3);
  EXPECT_FALSE(ev.a2c.passed);
  EXPECT_TRUE(ev.a2c.counter_strategy.has_value());
}

TEST(GlobalStability, Verdicts) {
  GlobalStabilityOptions opts;
  opts.n_runs = 10;
  opts.horizon = 20000;
  opts.seed = 11;
  opts.enumeration.belief_grid = 21;
  opts.enumeration.strategy_grid = 9;
  auto inv = check_global_stability(*make_investment(), opts);
  EXPECT_TRUE(inv.globally_stable) << inv.verdict;
  EXPECT_EQ(inv.converged, 10u);
  auto cournot = check_global_stability(*make_cournot(), opts);
  EXPECT_FALSE(cournot.globally_stable);
  ASSERT_TRUE(cournot.witness.has_value());
  EXPECT_FALSE(cournot.witness->is_complete_info);
}

}  // namespace
}  // namespace beliefplay
