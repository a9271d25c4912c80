#ifndef BELIEFPLAY_ESTIMATORS_H_
#define BELIEFPLAY_ESTIMATORS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "beliefplay/belief.h"
#include "beliefplay/game.h"

namespace beliefplay {

// Records collected between consecutive update stages.
struct ObservationBatch {
  std::vector<Observation> records;
};

// log phi^s(observed | q) under the game's noise model; -infinity when the
// density is exactly zero.
double log_likelihood(const GameModel& game, std::size_t s,
                      const StrategyProfile& q, std::span<const double> observed);
double log_likelihood(const ParameterSpace& space, std::size_t s,
                      const GameModel& game, const StrategyProfile& q,
                      std::span<const double> observed);

// Summed log-likelihood of the batch for every parameter in the support of
// `belief` (zero for excluded parameters).
std::vector<double> batch_log_likelihood(const Belief& belief,
                                         const ObservationBatch& batch,
                                         const GameModel& game);

Belief bayes_update(const Belief& belief, const ObservationBatch& batch,
                    const GameModel& game);

// argmax_s prior(s) * prod phi^s; lowest index on ties.
std::size_t map_update(const ParameterSpace& space, const Belief& prior,
                       const ObservationBatch& batch, const GameModel& game);

// Running least-squares accumulation on design rows (q, 1).
class OlsState {
 public:
  OlsState() = default;
  OlsState(std::size_t q_dim, std::size_t n_players);

  void ingest(const StrategyProfile& q, std::span<const double> c);

  std::size_t rows() const { return design_rows_.size(); }
  std::size_t width() const { return width_; }
  std::size_t n_players() const { return response_columns_.size(); }
  const std::vector<std::vector<double>>& design_rows() const { return design_rows_; }
  const std::vector<std::vector<double>>& response_columns() const {
    return response_columns_;
  }
  // Row-major width x width Gram matrix.
  const std::vector<double>& normal_matrix() const { return normal_; }
  const std::vector<std::vector<double>>& cross_vectors() const { return cross_; }

 private:
  std::size_t width_ = 0;
  std::vector<std::vector<double>> design_rows_;
  std::vector<std::vector<double>> response_columns_;
  std::vector<double> normal_;
  std::vector<std::vector<double>> cross_;
};

OlsState ols_ingest(OlsState state, const StrategyProfile& q,
                    std::span<const double> c);

// Per-player coefficient vectors (slopes on q, then intercept). Throws
// Unidentifiable when the reciprocal condition number is below 1e-10.
std::vector<std::vector<double>> ols_solve(const OlsState& state);

inline constexpr double kOlsRcondThreshold = 1e-10;

}  // namespace beliefplay

#endif  // BELIEFPLAY_ESTIMATORS_H_
