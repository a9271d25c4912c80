#ifndef BELIEFPLAY_ANALYSIS_H_
#define BELIEFPLAY_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefplay/belief.h"
#include "beliefplay/dynamics.h"
#include "beliefplay/game.h"

namespace beliefplay {

inline constexpr double kKlTolerance = 1e-9;
inline constexpr double kEqTolerance = 1e-6;

// D_KL(phi^{s_a} || phi^{s_b}) of the observed statistic at q. Mixed profiles
// of finite games average over the realized action profiles. +infinity when
// absolute continuity fails.
double kl_divergence(const GameModel& game, std::size_t s_a, std::size_t s_b,
                     const StrategyProfile& q);

// S*(q): parameters within `tol` KL of the truth. Always contains s*.
std::vector<std::size_t> payoff_equivalent_set(const GameModel& game,
                                               const StrategyProfile& q,
                                               double tol = kKlTolerance);
// Intersection over pure profiles with probability above support_tol.
std::vector<std::size_t> payoff_equivalent_set_mixed(const GameModel& game,
                                                     const StrategyProfile& q,
                                                     double tol = kKlTolerance,
                                                     double support_tol = 1e-12);

struct FixedPointCertificate {
  Belief belief;
  StrategyProfile strategy;
  std::vector<std::size_t> equivalence_set;
  bool support_in_equivalence = false;
  double eq_residual = 0.0;
  bool is_complete_info = false;
  bool valid = false;
};

// Euclidean distance between q and the canonical best responses to it.
double best_response_residual(const GameModel& game, const ParamMixture& mixture,
                              const StrategyProfile& q);

FixedPointCertificate certify_fixed_point(const GameModel& game,
                                          const Belief& belief,
                                          const StrategyProfile& q,
                                          double tol_kl = kKlTolerance,
                                          double tol_eq = kEqTolerance);

struct EnumerationOptions {
  std::size_t belief_grid = 51;    // points per simplex edge
  std::size_t strategy_grid = 51;  // points per axis of EQ(theta)
  double tol_kl = kKlTolerance;
  double tol_eq = kEqTolerance;
};

struct FixedPointCluster {
  std::string id;
  bool complete_info = false;
  std::vector<FixedPointCertificate> members;
  std::size_t representative = 0;
  std::vector<double> belief_min, belief_max;
  std::vector<double> q_min, q_max;

  const FixedPointCertificate& rep() const { return members[representative]; }
  // L-infinity distance from theta to the nearest member belief.
  double belief_distance(std::span<const double> theta) const;
};

struct FixedPointEnumeration {
  std::vector<FixedPointCluster> clusters;
  std::string family;              // symbolic description, when known
  std::size_t beliefs_scanned = 0;
  std::size_t candidates = 0;

  const FixedPointCluster* find(const std::string& id) const;
  // Nearest cluster by belief distance; nullptr when there are none.
  const FixedPointCluster* nearest(std::span<const double> theta,
                                   double* distance = nullptr) const;
};

std::vector<std::vector<double>> simplex_grid(std::size_t n, std::size_t resolution);

FixedPointEnumeration enumerate_fixed_points(const GameModel& game,
                                             const EnumerationOptions& options = {});

struct CompletenessCheck {
  bool all_complete = true;
  std::size_t beliefs_tested = 0;
  std::optional<FixedPointCertificate> counterexample;
};

// Tests that [theta] \ S*(q) is non-empty for every theta != theta* and
// q in EQ(theta), over a simplex grid plus Dirichlet(1,...,1) draws.
CompletenessCheck check_all_fixed_points_complete(const GameModel& game,
                                                  std::size_t grid_resolution = 51,
                                                  std::size_t n_dirichlet = 1000,
                                                  std::uint64_t seed = 0);

struct CompleteInfoConditions {
  bool local_equivalence = false;  // (i)
  bool concavity = false;          // (ii)
  bool eq_matches_complete = false;
  std::size_t probes = 0;
  std::optional<StrategyProfile> counterexample;
};

CompleteInfoConditions check_complete_info_equilibrium_conditions(
    const GameModel& game, const FixedPointCertificate& certificate, double xi,
    std::size_t n_probe, std::uint64_t seed = 0);

struct StabilityThresholds {
  double rho1 = 0.0, rho2 = 0.0, rho3 = 0.0;
  std::vector<double> theta_bar;
  double eps_hat = 0.0;
  double gamma = 0.0;
  std::size_t n_params = 0;
  std::size_t n_excluded = 0;
  bool degenerate = false;  // no excluded parameter: rho2 = eps_hat/|S|
};

StabilityThresholds stability_thresholds(const Belief& theta_bar, double eps_hat,
                                         double gamma, std::size_t n_params);
// Expected upcrossing bound (rho1/a)/(rho2 - rho1/a), a = theta_bar(s*) - rho1.
double doob_upcrossing_bound(const StabilityThresholds& th, double theta_true);

struct RateEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  bool truncated = false;  // theta hit an exact zero inside the range
};

RateEstimate estimate_convergence_rate(const Trajectory& traj, std::size_t s,
                                       long burn_in);
// Least-squares fit of ys against ts.
RateEstimate fit_line(std::span<const double> ts, std::span<const double> ys);

struct MartingaleStat {
  double expected_ratio = 0.0;  // theta(s)/theta(s*)
  double mean_ratio = 0.0;      // mean of theta'(s)/theta'(s*)
  double ratio_se = 0.0;
  double mean_log_gain = 0.0;   // mean of log theta'(s*) - log theta(s*)
  double log_gain_se = 0.0;
};

std::vector<MartingaleStat> martingale_diagnostic(const GameModel& game,
                                                  const Belief& theta,
                                                  const StrategyProfile& q,
                                                  std::size_t n_samples,
                                                  std::uint64_t seed);

int upcrossing_count(std::span<const double> series, double lo, double hi);

struct Interval {
  double lo = 0.0, hi = 0.0;
};
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.96);

// Uniform draw from the L-infinity ball around theta intersected with the
// simplex; strictly positive entries when full_support is set. Halves the
// radius after 1e5 rejections.
Belief sample_belief_ball(const Belief& center, double radius, bool full_support,
                          Rng& rng, bool* shrunk = nullptr);
// Draw from {q in Q : d(q, set) < radius}.
StrategyProfile sample_strategy_near(const GameModel& game,
                                     const EquilibriumSet& set,
                                     const StrategyProfile& anchor, double radius,
                                     Rng& rng);

struct LocalStabilityOptions {
  double eps1 = 0.02, delta1 = 0.02;
  double eps_bar = 0.1, eps_x = 0.1;
  std::size_t n_runs = 200;
  long horizon = 20000;
  std::uint64_t seed = 0;
  UpdateRule rule = UpdateRule::simultaneous();
  std::size_t threads = 1;
};

struct StabilityReport {
  std::size_t n_runs = 0;
  std::size_t stayed = 0;
  double stay_probability = 0.0;
  double escape_probability = 0.0;
  Interval stay_ci;
  Interval escape_ci;
  std::string verdict;  // locally_stable_evidence | unstable_evidence | inconclusive
  bool radius_shrunk = false;
};

StabilityReport monte_carlo_local_stability(const GameModel& game,
                                            const FixedPointCertificate& cert,
                                            const LocalStabilityOptions& options);

struct ConditionEvidence {
  std::string name;
  bool passed = true;
  std::size_t probes = 0;
  std::size_t violations = 0;
  std::string detail;
  std::optional<Belief> counter_belief;
  std::optional<StrategyProfile> counter_strategy;
  double largest_passing_radius = 0.0;  // (A2a) only
};

struct Assumption2Evidence {
  ConditionEvidence a2a, a2b, a2c;
  bool all_passed() const { return a2a.passed && a2b.passed && a2c.passed; }
};

Assumption2Evidence check_assumption2(const GameModel& game,
                                      const FixedPointCertificate& cert,
                                      double eps, double delta,
                                      std::size_t n_probe, std::uint64_t seed);

struct GlobalStabilityOptions {
  std::size_t n_runs = 50;
  long horizon = 20000;
  std::uint64_t seed = 0;
  UpdateRule rule = UpdateRule::simultaneous();
  double tol_theta = 0.05;
  double tol_q = 0.02;
  std::size_t threads = 1;
  EnumerationOptions enumeration;
};

struct GlobalStabilityVerdict {
  bool globally_stable = false;
  std::string verdict;
  std::size_t n_runs = 0;
  std::size_t converged = 0;
  std::optional<FixedPointCertificate> witness;
  std::string witness_cluster;
};

GlobalStabilityVerdict check_global_stability(const GameModel& game,
                                              const GlobalStabilityOptions& options);
GlobalStabilityVerdict check_global_stability(const GameModel& game,
                                              const FixedPointEnumeration& fps,
                                              const GlobalStabilityOptions& options);

}  // namespace beliefplay

#endif  // BELIEFPLAY_ANALYSIS_H_
