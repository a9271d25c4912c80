#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "beliefplay/dynamics.h"
#include "beliefplay/errors.h"
#include "beliefplay/games.h"

namespace beliefplay {
namespace {

InitialState init_of(std::vector<double> theta, StrategyProfile q) {
  return {Belief::from_probs(theta), std::move(q)};
}

bool same_records(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.log_theta_row(k) != b.log_theta_row(k)) return false;
    for (std::size_t j = 0; j < a.q_size(); ++j)
      if (a.q_flat(k, j) != b.q_flat(k, j)) return false;
    for (std::size_t i = 0; i < a.n_payoffs(); ++i)
      if (a.payoff(k, i) != b.payoff(k, i)) return false;
    if (a.updated(k) != b.updated(k)) return false;
  }
  return true;
}

TEST(Run, DeterministicGivenSeed) {
  auto g = make_investment();
  auto init = init_of({0.3, 0.3, 0.4}, StrategyProfile({{0.9}, {0.1}}));
  for (const auto& rule : {UpdateRule::simultaneous(), UpdateRule::sequential(),
                           UpdateRule::linear()}) {
    auto a = run(*g, rule, UpdateSchedule::every_stage(), init, 2000, 77);
    auto b = run(*g, rule, UpdateSchedule::every_stage(), init, 2000, 77);
    EXPECT_TRUE(same_records(a, b)) << rule.name();
    auto c = run(*g, rule, UpdateSchedule::every_stage(), init, 2000, 78);
    EXPECT_FALSE(same_records(a, c)) << rule.name();
  }
}

TEST(Step, SequentialMovesOneBlock) {
  auto g = make_cournot();
  Rng rng(3);
  auto state = make_initial_state(*g, Belief::uniform(2), StrategyProfile({{0.1}, {2.5}}),
                                  UpdateSchedule::every_stage(), Estimator::kBayes, rng);
  for (long t = 1; t <= 40; ++t) {
    const StrategyProfile before = state.strategy;
    step(state, UpdateRule::sequential(), *g, rng);
    const std::size_t mover = static_cast<std::size_t>((t - 1) % 2);
    EXPECT_EQ(state.strategy[1 - mover], before[1 - mover]) << "t=" << t;
    if (t <= 2) EXPECT_NE(state.strategy[mover], before[mover]) << "t=" << t;
  }
}

TEST(Step, LinearWithUnitStepIsSimultaneous) {
  for (const auto& g : {make_cournot(), make_investment(), make_zerosum_example()}) {
    Rng r1(11), r2(11);
    Rng pick(12);
    const StrategyProfile q0 = g->random_profile(pick);
    const Belief th = Belief::uniform(g->space().size());
    auto a = make_initial_state(*g, th, q0, UpdateSchedule::every_stage(), Estimator::kBayes, r1);
    auto b = make_initial_state(*g, th, q0, UpdateSchedule::every_stage(), Estimator::kBayes, r2);
    for (int t = 0; t < 50; ++t) {
      step(a, UpdateRule::simultaneous(), *g, r1);
      step(b, UpdateRule::linear(1.0), *g, r2);
      ASSERT_EQ(a.strategy.flat(), b.strategy.flat()) << g->id();
    }
  }
}

TEST(Step, LinearMoveIsBoundedByStepTimesDiameter) {
  auto g = make_zerosum_example();
  Rng rng(4);
  auto state = make_initial_state(*g, Belief::uniform(3), StrategyProfile({{5.0}, {0.5}}),
                                  UpdateSchedule::every_stage(), Estimator::kBayes, rng);
  const UpdateRule rule = UpdateRule::linear();
  for (long t = 1; t <= 200; ++t) {
    const StrategyProfile before = state.strategy;
    step(state, rule, *g, rng);
    for (std::size_t i = 0; i < 2; ++i)
      ASSERT_LE(std::abs(state.strategy[i][0] - before[i][0]), rule.alpha(t) * 6.0 + 1e-12);
  }
}

TEST(Run, RecordsStayFeasibleAndBeliefMovesOnlyAtUpdates) {
  auto g = make_coordination_penalty();
  auto traj = run(*g, UpdateRule::simultaneous(), UpdateSchedule::fixed_batch(7),
                  init_of({0.5, 0.5}, StrategyProfile({{2.0}, {1.0}})), 300, 5);
  ASSERT_EQ(traj.size(), 300u);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EXPECT_EQ(traj.stage(k), static_cast<long>(k) + 1);
    ASSERT_TRUE(g->feasible(traj.q(k), 1e-12));
    if (k > 0 && !traj.updated(k)) ASSERT_EQ(traj.log_theta_row(k), traj.log_theta_row(k - 1));
  }
  EXPECT_TRUE(traj.updated(0));
  EXPECT_TRUE(traj.updated(7));
  EXPECT_FALSE(traj.updated(6));
}

TEST(Run, FictitiousPlayMatchesActionCounts) {
  auto g = make_two_route_congestion();
  const StrategyProfile q1({{1.0, 0.0}, {0.0, 1.0}});
  auto traj = run(*g, UpdateRule::fictitious_play(), UpdateSchedule::every_stage(),
                  {Belief::uniform(2), q1}, 60, 9);
  ASSERT_TRUE(traj.has_played());
  // q^{t+1} = (q^1 + sum of played actions up to t) / (t + 1), counted in integers
  std::vector<long> counts(4, 0);
  for (std::size_t j = 0; j < 4; ++j) counts[j] = q1.flat()[j] == 1.0 ? 1 : 0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const auto a = traj.played(k).flat();
    for (std::size_t j = 0; j < 4; ++j) {
      ASSERT_TRUE(a[j] == 0.0 || a[j] == 1.0);
      counts[j] += static_cast<long>(a[j]);
    }
    const double denom = static_cast<double>(k + 2);
    for (std::size_t j = 0; j < 4; ++j)
      ASSERT_NEAR(traj.q_flat(k + 1, j), static_cast<double>(counts[j]) / denom, 1e-13);
  }
}

TEST(Run, FixedPointIsInvariant) {
  // theta = (1/2, 1/2) with q = (1/2, 1/2): both Cournot parameters give price 1/2
  auto g = make_cournot();
  auto traj = run(*g, UpdateRule::simultaneous(), UpdateSchedule::every_stage(),
                  init_of({0.5, 0.5}, StrategyProfile({{0.5}, {0.5}})), 500, 21);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    ASSERT_EQ(traj.q_flat(k, 0), 0.5);
    ASSERT_EQ(traj.q_flat(k, 1), 0.5);
    ASSERT_EQ(traj.log_theta(k, 0) - traj.log_theta(k, 1), 0.0);
  }
}

TEST(Run, InvestmentReachesCompleteInformation) {
  auto g = make_investment();
  auto traj = run(*g, UpdateRule::sequential(), UpdateSchedule::every_stage(),
                  init_of({0.5, 0.4, 0.1}, StrategyProfile({{1.0}, {0.0}})), 20000, 2024);
  const auto& s = traj.summary;
  EXPECT_NEAR(s.final_theta[0], 0.0, 1e-2);
  EXPECT_NEAR(s.final_theta[1], 1.0, 1e-2);
  EXPECT_NEAR(s.final_theta[2], 0.0, 1e-2);
  EXPECT_NEAR(s.final_q[0][0], 1.0 / 3.0, 1e-2);
  EXPECT_NEAR(s.final_q[1][0], 1.0 / 3.0, 1e-2);
}

TEST(Run, CournotFromNearlyCompleteBelief) {
  auto g = make_cournot();
  auto traj = run(*g, UpdateRule::simultaneous(), UpdateSchedule::every_stage(),
                  init_of({0.99, 0.01}, StrategyProfile({{0.6}, {0.6}})), 10000, 31);
  EXPECT_NEAR(traj.summary.final_q[0][0], 2.0 / 3.0, 5e-2);
  EXPECT_NEAR(traj.summary.final_q[1][0], 2.0 / 3.0, 5e-2);
  EXPECT_TRUE(traj.summary.converged);
  EXPECT_EQ(traj.summary.cycle_period, 0);
}

TEST(Run, TwoRouteSimultaneousCycles) {
  GameOptions opts;
  opts.sigma = {0.0};
  auto g = make_two_route_congestion(2, opts);
  auto traj = run(*g, UpdateRule::simultaneous(), UpdateSchedule::every_stage(),
                  {Belief::uniform(2), StrategyProfile({{1.0, 0.0}, {1.0, 0.0}})}, 1000, 1);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double on_first = k % 2 == 0 ? 1.0 : 0.0;
    ASSERT_EQ(traj.q_flat(k, 0), on_first) << k;
    ASSERT_EQ(traj.q_flat(k, 2), on_first) << k;
  }
  EXPECT_EQ(traj.summary.cycle_period, 2);
  EXPECT_FALSE(traj.summary.converged);
}

TEST(Run, ZeroPriorIsRejected) {
  auto g = make_investment();
  InitialState init{Belief::from_probs(std::vector<double>{0.0, 0.5, 0.5}),
                    StrategyProfile({{0.5}, {0.5}})};
  EXPECT_THROW(run(*g, UpdateRule::simultaneous(), UpdateSchedule::every_stage(), init, 10, 1),
               ContractError);
  EXPECT_THROW(run(*g, UpdateRule::simultaneous(), UpdateSchedule::every_stage(),
                   init_of({0.5, 0.5, 0.0}, StrategyProfile({{0.5}, {0.5}})), 0, 1),
               ContractError);
  EXPECT_THROW(run(*g, UpdateRule::fictitious_play(), UpdateSchedule::every_stage(),
                   init_of({0.2, 0.5, 0.3}, StrategyProfile({{0.5}, {0.5}})), 10, 1),
               ContractError);
}

TEST(TwoTimescale, ConstantUnitGapIsEveryStage) {
  auto g = make_investment();
  auto init = init_of({0.2, 0.2, 0.6}, StrategyProfile({{0.0}, {1.0}}));
  auto a = run(*g, UpdateRule::simultaneous(), UpdateSchedule::every_stage(), init, 3000, 8);
  auto b = run_two_timescale(*g, UpdateRule::simultaneous(), GapFunction::constant(1.0), init,
                             3000, 8);
  EXPECT_TRUE(same_records(a, b));
  EXPECT_EQ(b.summary.update_stages.size(), 2999u);
}

TEST(TwoTimescale, ResponsesSettleBetweenUpdates) {
  auto g = make_investment();
  auto traj = run_two_timescale(*g, UpdateRule::simultaneous(), GapFunction::linear(10.0),
                                init_of({0.4, 0.3, 0.3}, StrategyProfile({{1.0}, {0.0}})),
                                20000, 12);
  const auto& s = traj.summary;
  ASSERT_GE(s.update_stages.size(), 10u);
  for (std::size_t k = 3; k < s.update_stages.size(); ++k)
    EXPECT_LT(s.update_eq_distance[k], 1e-3) << "update at " << s.update_stages[k];
}

TEST(TwoTimescale, ZeroNoiseFreezesEquivalentBelief) {
  GameOptions opts;
  opts.sigma = {0.0};
  auto g = make_cournot(opts);
  auto traj = run_two_timescale(*g, UpdateRule::simultaneous(), GapFunction::linear(3.0),
                                init_of({0.5, 0.5}, StrategyProfile({{0.5}, {0.5}})), 400, 3);
  for (std::size_t k = 1; k < traj.size(); ++k)
    ASSERT_EQ(traj.log_theta_row(k), traj.log_theta_row(0));
}

TEST(Detect, ConvergenceAndCycleOnSyntheticRecords) {
  Trajectory flat(1, {1}, 1);
  for (int k = 0; k < 20; ++k)
    flat.append(Belief::uniform(1), StrategyProfile(std::vector<std::vector<double>>{{k < 5 ? 0.1 * k : 0.4}}), {0.0}, true);
  detect_convergence(flat, 10, 1e-5, 1e-5);
  EXPECT_TRUE(flat.summary.converged);
  EXPECT_EQ(flat.summary.t_converged, 15);  // last move at stage 5, window 10
  EXPECT_EQ(detect_cycle(flat, 10), 0);

  Trajectory alt(1, {1}, 1);
  for (int k = 0; k < 20; ++k)
    alt.append(Belief::uniform(1), StrategyProfile(std::vector<std::vector<double>>{{k % 2 ? 1.0 : 0.0}}), {0.0}, true);
  detect_convergence(alt, 10, 1e-5, 1e-5);
  EXPECT_FALSE(alt.summary.converged);
  EXPECT_EQ(alt.summary.t_converged, -1);
  EXPECT_EQ(detect_cycle(alt, 10), 2);
  EXPECT_EQ(detect_cycle(alt, 10, 2.0), 0);
}

TEST(Csv, HeaderAndExactDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0 / 3.0), "0.66666666666666663");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(-2.5e-7), "-2.4999999999999999e-07");

  auto g = make_cournot();
  auto traj = run(*g, UpdateRule::simultaneous(), UpdateSchedule::every_stage(),
                  init_of({0.5, 0.5}, StrategyProfile({{0.5}, {0.5}})), 3, 1);
  std::ostringstream out;
  write_trajectory_csv(traj, out, {"seed=1"});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# seed=1");
  std::getline(in, line);
  EXPECT_EQ(line, "t,theta_0,theta_1,q_0_0,q_1_0,c_0,c_1,updated");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("1,0.5,0.5,0.5,0.5,", 0), 0u) << line;
  EXPECT_EQ(line.back(), '1');
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(out.str().find('\r'), std::string::npos);
}

}  // namespace
}  // namespace beliefplay
