#ifndef BELIEFPLAY_DYNAMICS_H_
#define BELIEFPLAY_DYNAMICS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "beliefplay/belief.h"
#include "beliefplay/estimators.h"
#include "beliefplay/game.h"
#include "beliefplay/schedule.h"

namespace beliefplay {

struct UpdateRule {
  enum class Kind { kSimultaneous, kSequential, kLinear, kFictitiousPlay };

  Kind kind = Kind::kSimultaneous;
  std::optional<double> constant_alpha;  // linear rule; default 1/t

  static UpdateRule simultaneous() { return {Kind::kSimultaneous, std::nullopt}; }
  static UpdateRule sequential() { return {Kind::kSequential, std::nullopt}; }
  static UpdateRule linear(std::optional<double> alpha = std::nullopt);
  static UpdateRule fictitious_play() { return {Kind::kFictitiousPlay, std::nullopt}; }

  double alpha(long t) const;
  std::string name() const;
};

enum class Estimator { kBayes, kMap, kOls };

std::string estimator_name(Estimator e);

struct LearnerState {
  long t = 1;
  Belief belief;                 // full posterior (Bayes and MAP)
  StrategyProfile strategy;
  ObservationBatch pending;
  long next_k = 2;
  bool updated = true;           // whether stage t is an update stage
  UpdateSchedule schedule;       // carries the k_t counter
  Estimator estimator = Estimator::kBayes;
  OlsState ols;
  std::vector<double> estimate;  // current OLS parameter vector
  ParamMixture mixture;          // what players best-respond against
};

LearnerState make_initial_state(const GameModel& game, const Belief& belief,
                                const StrategyProfile& strategy,
                                UpdateSchedule schedule, Estimator estimator,
                                Rng& rng);

// The outcome of one stage, for recording.
struct StageOutcome {
  StrategyProfile played;        // q^t, or the action profile under FP
  std::vector<double> payoffs;   // c^t
};

// Advances `state` from stage t to t+1 and returns what happened at t.
StageOutcome step(LearnerState& state, const UpdateRule& rule,
                  const GameModel& game, Rng& rng);

struct RunOptions {
  Estimator estimator = Estimator::kBayes;
  std::size_t window = 500;
  double tol_q = 1e-5;
  double tol_theta = 1e-5;
  bool allow_zero_prior = false;  // analysis starts exactly at a fixed point
  bool record_eq_distance = false;
};

struct TrajectorySummary {
  bool converged = false;
  long t_converged = -1;       // first stage meeting the convergence test
  long t_stop = 0;             // last recorded stage
  std::vector<double> final_theta;
  StrategyProfile final_q;
  double eq_distance = 0.0;    // distance of final q to EQ(final belief)
  int cycle_period = 0;        // 2 when the tail alternates exactly
  // At each update stage k: distance of q^{k-1} to EQ of the belief it was
  // responding to (two-timescale diagnostics).
  std::vector<long> update_stages;
  std::vector<double> update_eq_distance;
};

// Stage-major flat storage of (t, theta^t, q^t, c^t, updated).
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::size_t n_params, std::vector<std::size_t> q_dims,
             std::size_t n_payoffs);

  void append(const Belief& belief, const StrategyProfile& q,
              const std::vector<double>& payoffs, bool updated);
  void set_payoffs(std::size_t k, const std::vector<double>& payoffs);
  // Pure action profiles actually played (fictitious play only).
  void set_played(std::size_t k, const StrategyProfile& played);
  bool has_played() const { return !played_.empty(); }
  StrategyProfile played(std::size_t k) const;

  std::size_t size() const { return updated_.size(); }
  std::size_t n_params() const { return n_params_; }
  std::size_t q_size() const { return q_size_; }
  std::size_t n_payoffs() const { return n_payoffs_; }
  const std::vector<std::size_t>& q_dims() const { return q_dims_; }

  long stage(std::size_t k) const { return static_cast<long>(k) + 1; }
  double log_theta(std::size_t k, std::size_t s) const {
    return log_theta_[k * n_params_ + s];
  }
  double theta(std::size_t k, std::size_t s) const;
  std::vector<double> theta_row(std::size_t k) const;
  std::vector<double> log_theta_row(std::size_t k) const;
  StrategyProfile q(std::size_t k) const;
  double q_flat(std::size_t k, std::size_t j) const { return q_[k * q_size_ + j]; }
  double payoff(std::size_t k, std::size_t i) const { return c_[k * n_payoffs_ + i]; }
  bool updated(std::size_t k) const { return updated_[k] != 0; }

  TrajectorySummary summary;

 private:
  std::size_t n_params_ = 0;
  std::vector<std::size_t> q_dims_;
  std::size_t q_size_ = 0;
  std::size_t n_payoffs_ = 0;
  std::vector<double> log_theta_;
  std::vector<double> q_;
  std::vector<double> c_;
  std::vector<char> updated_;
  std::vector<double> played_;
};

struct InitialState {
  Belief belief;
  StrategyProfile strategy;
};

Trajectory run(const GameModel& game, const UpdateRule& rule,
               const UpdateSchedule& schedule, const InitialState& init,
               long horizon, std::uint64_t seed, const RunOptions& options = {});

Trajectory run_two_timescale(const GameModel& game, const UpdateRule& rule,
                             const GapFunction& gap, const InitialState& init,
                             long horizon, std::uint64_t seed,
                             RunOptions options = {});

// Recomputes the convergence fields of the summary from the records.
void detect_convergence(Trajectory& traj, std::size_t window, double tol_q,
                        double tol_theta);
// Period-2 test over the last `window` stages: q^t == q^{t-2} and
// d(q^t, q^{t-1}) > min_gap.
int detect_cycle(const Trajectory& traj, std::size_t window, double min_gap = 1e-5);

// CSV with columns t, theta_*, q_*, c_*, updated. Optional leading comment
// lines carry provenance metadata.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out,
                          const std::vector<std::string>& comments = {});
std::string format_double(double v);

}  // namespace beliefplay

#endif  // BELIEFPLAY_DYNAMICS_H_
