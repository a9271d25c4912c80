#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "beliefplay/belief.h"
#include "beliefplay/errors.h"
#include "beliefplay/estimators.h"
#include "beliefplay/games.h"
#include "beliefplay/schedule.h"

namespace beliefplay {
namespace {

double gauss_logpdf(double x, double mu, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - (x - mu) * (x - mu) / (2.0 * var);
}

ObservationBatch batch_of(const StrategyProfile& q, std::vector<double> observed) {
  ObservationBatch b;
  b.records.push_back(Observation{q, std::move(observed), {}});
  return b;
}

TEST(ParameterSpace, RejectsBadInput) {
  EXPECT_THROW(ParameterSpace({}, 0), ContractError);
  EXPECT_THROW(ParameterSpace({{1.0}, {2.0}}, 2), ContractError);
  EXPECT_THROW(ParameterSpace({{1.0}, {1.0, 2.0}}, 0), ContractError);
  EXPECT_THROW(ParameterSpace({{1.0}, {1.0}}, 0), ContractError);
  ParameterSpace ok({{1.0}, {2.0}}, 1);
  EXPECT_EQ(ok.size(), 2u);
  EXPECT_EQ(ok.true_index(), 1u);
}

TEST(Belief, FromProbsKeepsSimplex) {
  Belief b = Belief::from_probs(std::vector<double>{0.2, 0.0, 0.8});
  EXPECT_NEAR(b.prob(0), 0.2, 1e-15);
  EXPECT_EQ(b.prob(1), 0.0);
  EXPECT_TRUE(std::isinf(b.log_prob(1)));
  EXPECT_FALSE(b.in_support(1));
  EXPECT_FALSE(b.has_full_support());
  EXPECT_EQ(b.support(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(b.argmax(), 2u);
  EXPECT_NEAR(std::exp(b.log_prob(2)), b.prob(2), 1e-12);
}

TEST(Belief, RejectsInvalidProbabilities) {
  EXPECT_THROW(Belief::from_probs(std::vector<double>{0.5, -0.1, 0.6}), ContractError);
  EXPECT_THROW(Belief::from_probs(std::vector<double>{0.0, 0.0}), ContractError);
}

TEST(Belief, ArgmaxTiesGoLow) {
  EXPECT_EQ(Belief::uniform(4).argmax(), 0u);
}

TEST(Belief, LogWeightsSurviveUnderflow) {
  Belief b = Belief::from_log_weights(std::vector<double>{0.0, -2000.0});
  EXPECT_EQ(b.prob(0), 1.0);
  EXPECT_TRUE(b.in_support(1));
  EXPECT_NEAR(b.log_ratio(1, 0), -2000.0, 1e-9);
}

TEST(LogLikelihood, CournotPeakAndOneSigma) {
  auto g = make_cournot();
  StrategyProfile q({{2.0 / 3.0}, {2.0 / 3.0}});
  const double peak = -0.5 * std::log(2.0 * std::numbers::pi * 0.5);
  EXPECT_NEAR(log_likelihood(*g, 0, q, std::vector<double>{2.0 / 3.0}), peak, 1e-12);
  EXPECT_NEAR(log_likelihood(*g, 0, q, std::vector<double>{2.0 / 3.0 + std::sqrt(0.5)}),
              peak - 0.5, 1e-12);
  EXPECT_THROW(log_likelihood(*g, 0, q, std::vector<double>{1.0, 2.0}), ContractError);
}

TEST(LogLikelihood, DegenerateChannelIsAtom) {
  GameOptions opts;
  opts.sigma = {0.0};
  auto g = make_cournot(opts);
  StrategyProfile q({{0.5}, {0.5}});
  EXPECT_EQ(log_likelihood(*g, 0, q, std::vector<double>{1.0}), 0.0);
  EXPECT_TRUE(std::isinf(log_likelihood(*g, 0, q, std::vector<double>{1.1})));
}

TEST(BayesUpdate, CournotSingleRecordByHand) {
  auto g = make_cournot();
  StrategyProfile q({{2.0 / 3.0}, {2.0 / 3.0}});
  Belief post = bayes_update(Belief::uniform(2), batch_of(q, {2.0 / 3.0}), *g);
  const double l1 = std::exp(gauss_logpdf(2.0 / 3.0, 2.0 / 3.0, 0.5));
  const double l2 = std::exp(gauss_logpdf(2.0 / 3.0, 0.0, 0.5));
  EXPECT_NEAR(post.prob(0), l1 / (l1 + l2), 1e-12);
  EXPECT_NEAR(post.prob(0) + post.prob(1), 1.0, 1e-12);
}

TEST(BayesUpdate, EquivalentRecordLeavesRatioBitIdentical) {
  auto g = make_cournot();
  StrategyProfile q({{0.5}, {0.5}});
  Belief b = Belief::from_probs(std::vector<double>{0.3, 0.7});
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    Observation obs = sample_observation(*g, 0, q, rng);
    ObservationBatch batch;
    batch.records.push_back(obs);
    Belief next = bayes_update(b, batch, *g);
    ASSERT_EQ(next.ratio(1, 0), b.ratio(1, 0));
    b = next;
  }
}

TEST(BayesUpdate, ZeroIsPermanent) {
  GameOptions opts;
  opts.sigma = {0.0};
  auto g = make_cournot(opts);
  StrategyProfile q({{2.0 / 3.0}, {2.0 / 3.0}});
  Rng atom(1);
  ObservationBatch first;
  first.records.push_back(sample_observation(*g, 0, q, atom));
  Belief b = bayes_update(Belief::uniform(2), first, *g);
  EXPECT_EQ(b.prob(1), 0.0);
  EXPECT_FALSE(b.in_support(1));
  auto noisy = make_cournot();
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    StrategyProfile r({{std::uniform_real_distribution<double>(0, 3)(rng)}, {0.2}});
    ObservationBatch batch;
    batch.records.push_back(sample_observation(*noisy, 0, r, rng));
    b = bayes_update(b, batch, *noisy);
    ASSERT_EQ(b.prob(1), 0.0);
  }
}

TEST(BayesUpdate, ImpossibleObservationThrows) {
  GameOptions opts;
  opts.sigma = {0.0};
  auto g = make_cournot(opts);
  StrategyProfile q({{2.0 / 3.0}, {2.0 / 3.0}});
  EXPECT_THROW(bayes_update(Belief::uniform(2), batch_of(q, {5.0}), *g), ImpossibleObservation);
}

TEST(BayesUpdate, SimplexPreservedOnRandomBatches) {
  auto g = make_investment();
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> p = {u(rng) + 0.01, u(rng) + 0.01, u(rng) + 0.01};
    const double z = p[0] + p[1] + p[2];
    for (double& v : p) v /= z;
    Belief b = Belief::from_probs(p);
    ObservationBatch batch;
    const int n = 1 + k % 20;
    for (int r = 0; r < n; ++r)
      batch.records.push_back(
          sample_observation(*g, 1, StrategyProfile({{u(rng)}, {u(rng)}}), rng));
    Belief post = bayes_update(b, batch, *g);
    double sum = 0.0;
    for (double p : post.probs()) {
      ASSERT_GE(p, 0.0);
      sum += p;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(MapUpdate, UniformPriorGivesMaximumLikelihood) {
  auto g = make_investment();
  StrategyProfile q({{0.2}, {0.3}});
  // unit return 2.5 sits at the mean of s=2
  ObservationBatch batch = batch_of(q, {2.5});
  std::vector<double> ll(3);
  for (std::size_t s = 0; s < 3; ++s) ll[s] = log_likelihood(*g, s, q, batch.records[0].observed);
  std::size_t best = 0;
  for (std::size_t s = 1; s < 3; ++s)
    if (ll[s] > ll[best]) best = s;
  EXPECT_EQ(map_update(g->space(), Belief::uniform(3), batch, *g), best);
}

TEST(MapUpdate, TiesResolveToLowestIndex) {
  auto g = make_cournot();
  StrategyProfile q({{0.5}, {0.5}});
  EXPECT_EQ(map_update(g->space(), Belief::uniform(2), batch_of(q, {1.3}), *g), 0u);
}

TEST(MapUpdate, LargeBatchFindsTruth) {
  auto g = make_investment();
  Rng rng(21);
  StrategyProfile q({{0.3}, {0.3}});
  ObservationBatch batch;
  for (int k = 0; k < 1000; ++k) batch.records.push_back(sample_observation(*g, 1, q, rng));
  EXPECT_EQ(map_update(g->space(), Belief::uniform(3), batch, *g), 1u);
}

TEST(Ols, IngestAccumulates) {
  OlsState st(2, 1);
  st.ingest(StrategyProfile({{1.0}, {0.0}}), std::vector<double>{1.0});
  EXPECT_EQ(st.rows(), 1u);
  const auto single = st.normal_matrix();
  st.ingest(StrategyProfile({{1.0}, {0.0}}), std::vector<double>{1.0});
  for (std::size_t k = 0; k < single.size(); ++k) EXPECT_EQ(st.normal_matrix()[k], 2 * single[k]);
}

TEST(Ols, GramMatrixByHand) {
  OlsState st(2, 1);
  st.ingest(StrategyProfile({{1.0}, {0.0}}), std::vector<double>{0.0});
  st.ingest(StrategyProfile({{0.0}, {1.0}}), std::vector<double>{0.0});
  // rows (1,0,1) and (0,1,1)
  const std::vector<double> expect = {1, 0, 1, 0, 1, 1, 1, 1, 2};
  EXPECT_EQ(st.normal_matrix(), expect);
  // functional form agrees
  OlsState f = ols_ingest(ols_ingest(OlsState(2, 1), StrategyProfile({{1.0}, {0.0}}),
                                     std::vector<double>{0.0}),
                          StrategyProfile({{0.0}, {1.0}}), std::vector<double>{0.0});
  EXPECT_EQ(f.normal_matrix(), expect);
}

TEST(Ols, NoiselessInterpolation) {
  const std::vector<std::vector<double>> coef = {{0.7, -1.3, 0.25}, {2.0, 0.5, -1.0}};
  OlsState st(2, 2);
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 12; ++k) {
    StrategyProfile q({{u(rng)}, {u(rng)}});
    std::vector<double> c(2);
    for (std::size_t i = 0; i < 2; ++i) c[i] = coef[i][0] * q[0][0] + coef[i][1] * q[1][0] + coef[i][2];
    st.ingest(q, c);
  }
  auto est = ols_solve(st);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(est[i][j], coef[i][j], 1e-10);
}

TEST(Ols, RankDeficientDesignIsUnidentifiable) {
  OlsState st(2, 1);
  for (int k = 0; k < 10; ++k) st.ingest(StrategyProfile({{0.4}, {0.6}}), std::vector<double>{k * 0.1});
  EXPECT_THROW(ols_solve(st), Unidentifiable);
}

TEST(Ols, NoisyThreeStrategies) {
  const std::vector<double> coef = {1.5, -0.5, 0.3};
  const std::vector<StrategyProfile> qs = {StrategyProfile({{0.0}, {0.0}}),
                                           StrategyProfile({{1.0}, {0.0}}),
                                           StrategyProfile({{0.0}, {1.0}})};
  OlsState st(2, 1);
  Rng rng(77);
  std::normal_distribution<double> eps(0.0, 0.5);
  for (int k = 0; k < 10000; ++k) {
    const auto& q = qs[k % 3];
    st.ingest(q, std::vector<double>{coef[0] * q[0][0] + coef[1] * q[1][0] + coef[2] + eps(rng)});
  }
  auto est = ols_solve(st);
  double err = 0.0;
  for (std::size_t j = 0; j < 3; ++j) err += (est[0][j] - coef[j]) * (est[0][j] - coef[j]);
  EXPECT_LT(std::sqrt(err), 0.1);
}

TEST(Schedule, Examples) {
  Rng rng(0);
  UpdateSchedule every = UpdateSchedule::every_stage();
  every.reset(4, 5);
  EXPECT_EQ(next_update_stage(every, rng), 6);
  UpdateSchedule batch = UpdateSchedule::fixed_batch(10);
  batch.reset(2, 5);
  EXPECT_EQ(next_update_stage(batch, rng), 15);
  UpdateSchedule two = UpdateSchedule::two_timescale(GapFunction::linear(1.0));
  two.reset(3, 7);
  EXPECT_EQ(next_update_stage(two, rng), 10);
}

TEST(Schedule, StagesStrictlyIncrease) {
  for (auto sched : {UpdateSchedule::every_stage(), UpdateSchedule::fixed_batch(3),
                     UpdateSchedule::geometric(0.2),
                     UpdateSchedule::two_timescale(GapFunction::power(0.5, 0.5))}) {
    Rng rng(8);
    long prev = sched.last();
    for (int k = 0; k < 500; ++k) {
      const long next = next_update_stage(sched, rng);
      ASSERT_GT(next, prev);
      prev = next;
    }
  }
}

TEST(Schedule, GeometricMeanGap) {
  UpdateSchedule g = UpdateSchedule::geometric(0.25);
  Rng rng(12);
  const long start = g.last();
  const int n = 20000;
  long last = start;
  for (int k = 0; k < n; ++k) last = next_update_stage(g, rng);
  EXPECT_NEAR(static_cast<double>(last - start) / n, 4.0, 0.1);
}

TEST(Schedule, RejectsBadParameters) {
  EXPECT_THROW(UpdateSchedule::fixed_batch(0), ContractError);
  EXPECT_THROW(UpdateSchedule::geometric(0.0), ContractError);
}

}  // namespace
}  // namespace beliefplay
