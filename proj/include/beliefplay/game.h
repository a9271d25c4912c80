#ifndef BELIEFPLAY_GAME_H_
#define BELIEFPLAY_GAME_H_

#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefplay/belief.h"
#include "beliefplay/rng.h"
#include "beliefplay/strategy.h"

namespace beliefplay {

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;
};

// Weighted parameter vectors a player best-responds against: the support of
// a belief, a MAP point mass, or an OLS estimate.
struct ParamMixture {
  std::vector<double> weights;
  std::vector<std::vector<double>> params;
};

ParamMixture mixture_of(const ParameterSpace& space, const Belief& belief);
ParamMixture point_estimate(std::vector<double> param);

enum class ObservationMap { kSufficientStatistic, kFullPayoffs };

// Gaussian law of the observed statistic under one parameter at one profile.
// Inactive coordinates carry no information.
struct ObservationModel {
  std::vector<double> mean;
  std::vector<double> sigma;
  std::vector<bool> active;
};

struct Observation {
  StrategyProfile q;              // profile actually played
  std::vector<double> observed;   // statistic seen by the information system
  std::vector<double> payoffs;    // realized c^t
};

struct BestResponse {
  std::vector<double> strategy;                // canonical maximizer
  std::vector<double> lower;                   // argmax bounds per coordinate
  std::vector<double> upper;
  std::vector<std::size_t> tied_actions;       // finite games
  bool set_valued = false;
};

class EquilibriumSet {
 public:
  enum class Kind { kPoint, kBox, kLine, kFiniteList };

  static EquilibriumSet point(const StrategyProfile& q);
  static EquilibriumSet box(const StrategyProfile& lower,
                            const StrategyProfile& upper);
  static EquilibriumSet line(const StrategyProfile& start,
                             const StrategyProfile& end);
  static EquilibriumSet finite_list(std::vector<StrategyProfile> points);

  Kind kind() const { return kind_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  // point: {q}; box: {lower, upper}; line: {start, end}; list: members.
  const std::vector<StrategyProfile>& anchors() const { return anchors_; }
  bool convex() const { return kind_ != Kind::kFiniteList || anchors_.size() == 1; }

  StrategyProfile nearest(const StrategyProfile& q) const;
  double distance(const StrategyProfile& q) const;
  bool contains(const StrategyProfile& q, double tol) const {
    return distance(q) <= tol;
  }
  std::vector<StrategyProfile> extreme_points() const;
  std::vector<StrategyProfile> sample(std::size_t n, Rng& rng) const;
  std::vector<StrategyProfile> grid(std::size_t per_axis) const;
  std::string kind_name() const;

 private:
  Kind kind_ = Kind::kPoint;
  std::vector<std::size_t> dims_;
  std::vector<StrategyProfile> anchors_;
};

// sup over a of the distance to b. Exact through extreme points when b is
// convex; otherwise evaluated on `samples` members of a.
double excess(const EquilibriumSet& a, const EquilibriumSet& b,
              std::size_t samples, Rng& rng);
double hausdorff(const EquilibriumSet& a, const EquilibriumSet& b,
                 std::size_t samples, Rng& rng);

struct GameSpec {
  std::string id;
  ParameterSpace space;
  std::vector<Box> boxes;                    // continuous games
  std::vector<std::size_t> n_actions;        // finite games
  std::vector<std::vector<double>> sigma;    // [parameter][channel]
  std::vector<double> correlation;           // row-major; empty = independent
  ObservationMap observation = ObservationMap::kSufficientStatistic;
  double lipschitz = std::numeric_limits<double>::infinity();
};

class GameModel {
 public:
  explicit GameModel(GameSpec spec);
  virtual ~GameModel() = default;

  const std::string& id() const { return spec_.id; }
  const ParameterSpace& space() const { return spec_.space; }
  std::size_t n_players() const;
  bool is_finite() const { return !spec_.n_actions.empty(); }
  const Box& box(std::size_t i) const { return spec_.boxes[i]; }
  std::size_t n_actions(std::size_t i) const { return spec_.n_actions[i]; }
  std::vector<std::size_t> dims() const;
  std::size_t n_channels() const { return spec_.sigma.front().size(); }
  double sigma(std::size_t s, std::size_t channel) const {
    return spec_.sigma[s][channel];
  }
  bool channel_degenerate(std::size_t channel) const;
  const std::vector<double>& correlation() const { return spec_.correlation; }
  ObservationMap observation_map() const { return spec_.observation; }
  double lipschitz_bound() const { return spec_.lipschitz; }

  // u_i^s(q); for finite games q may be mixed and the value is an expectation.
  virtual double mean_payoff(std::span<const double> param,
                             const StrategyProfile& q, std::size_t i) const = 0;
  // Means of the noise channels; q must be pure for finite games.
  virtual std::vector<double> channel_means(std::span<const double> param,
                                            const StrategyProfile& q) const = 0;
  virtual std::vector<double> payoffs_from_channels(
      const StrategyProfile& q, std::span<const double> channels) const = 0;
  virtual std::vector<double> observed_statistic(
      const StrategyProfile& q, std::span<const double> channels,
      std::span<const double> payoffs) const;
  virtual ObservationModel observation_model(std::size_t s,
                                             const StrategyProfile& q) const;

  virtual std::optional<BestResponse> analytic_best_response(
      const ParamMixture& mixture, std::size_t i,
      const StrategyProfile& q) const;
  virtual std::optional<EquilibriumSet> analytic_equilibrium(
      const ParamMixture& mixture) const;
  // Symbolic description of non-complete fixed-point families, if known.
  virtual std::string fixed_point_family() const { return {}; }

  bool feasible(const StrategyProfile& q, double tol = 1e-12) const;
  StrategyProfile center() const;
  StrategyProfile random_profile(Rng& rng) const;
  StrategyProfile clamp(const StrategyProfile& q) const;

 protected:
  GameSpec spec_;

 private:
  friend Observation sample_observation(const GameModel&, std::size_t,
                                        const StrategyProfile&, Rng&);
  std::vector<double> cholesky_;  // lower factor of the correlation matrix
};

// Finite-action games: strategies are mixed over actions.
class FiniteGame : public GameModel {
 public:
  using GameModel::GameModel;

  virtual double action_payoff(std::span<const double> param,
                               std::span<const std::size_t> actions,
                               std::size_t i) const = 0;
  virtual std::vector<double> action_channel_means(
      std::span<const double> param,
      std::span<const std::size_t> actions) const = 0;

  double mean_payoff(std::span<const double> param, const StrategyProfile& q,
                     std::size_t i) const override;
  std::vector<double> channel_means(std::span<const double> param,
                                    const StrategyProfile& q) const override;

  StrategyProfile pure_profile(std::span<const std::size_t> actions) const;
  // Action indices of a pure profile; throws ContractError when mixed.
  std::vector<std::size_t> actions_of(const StrategyProfile& q) const;
  // Pure profiles with probability above support_tol, with their weights.
  std::vector<std::pair<std::vector<std::size_t>, double>> support_profiles(
      const StrategyProfile& q, double support_tol) const;
};

double expected_payoff(const GameModel& game, const Belief& belief,
                       const StrategyProfile& q, std::size_t i);
double expected_payoff(const GameModel& game, const ParamMixture& mixture,
                       const StrategyProfile& q, std::size_t i);

// Analytic when the game provides it; numeric otherwise. q carries the
// player's current strategy (used for the canonical selection) and the
// opponents' strategies.
BestResponse best_response(const GameModel& game, const Belief& belief,
                           std::size_t i, const StrategyProfile& q);
BestResponse best_response(const GameModel& game, const ParamMixture& mixture,
                           std::size_t i, const StrategyProfile& q);
// Golden-section / coordinate ascent for continuous games; action scan for
// finite games.
BestResponse numeric_best_response(const GameModel& game,
                                   const ParamMixture& mixture, std::size_t i,
                                   const StrategyProfile& q);

EquilibriumSet equilibrium_set(const GameModel& game, const Belief& belief);
EquilibriumSet equilibrium_set(const GameModel& game,
                               const ParamMixture& mixture);
// Damped iterated best response from random starts; clusters limit points.
EquilibriumSet iterated_equilibrium_set(const GameModel& game,
                                        const ParamMixture& mixture,
                                        std::uint64_t seed = 0);

Observation sample_observation(const GameModel& game, std::size_t s,
                               const StrategyProfile& q, Rng& rng);
std::vector<double> sample_payoffs(const GameModel& game, std::size_t s,
                                   const StrategyProfile& q, Rng& rng);

using GamePtr = std::shared_ptr<const GameModel>;

}  // namespace beliefplay

#endif  // BELIEFPLAY_GAME_H_
