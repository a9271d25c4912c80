#ifndef BELIEFPLAY_GAMES_H_
#define BELIEFPLAY_GAMES_H_

#include <cstddef>
#include <optional>
#include <vector>

#include "beliefplay/game.h"

namespace beliefplay {

// Overrides shared by the concrete constructors. Empty fields keep defaults.
struct GameOptions {
  std::vector<double> sigma;        // per parameter, or one value for all
  std::vector<Box> bounds;          // per player
  std::size_t n_players = 0;
  std::optional<ObservationMap> observation;
};

// Duopoly with linear inverse demand; S = {(2,1), (4,3)}, s* = (2,1).
GamePtr make_cournot(const GameOptions& options = {});
// Zero-sum game on [0,6]^2 with S = {1,3,5}, s* = 3 and one shared channel.
GamePtr make_zerosum_example(const GameOptions& options = {});
// Investment game on [0,1]^2 with S = {0,1,2}, s* = 1.
GamePtr make_investment(const GameOptions& options = {});
// Coordination with increasing penalty; Q1 = [0,2], Q2 = [1,4], S = {2,4}.
GamePtr make_coordination_penalty(const GameOptions& options = {});
// Two parallel routes with edge cost s * load + 1; S = {1,2}, s* = 1.
GamePtr make_two_route_congestion(std::size_t n_players = 2,
                                  const GameOptions& options = {});
// c_i = alpha[s][i] . q + beta[s][i] + noise; scalar strategies in [0,1].
GamePtr make_affine_game(const std::vector<std::vector<std::vector<double>>>& alpha,
                         const std::vector<std::vector<double>>& beta,
                         const std::vector<double>& sigma,
                         std::size_t true_index,
                         const GameOptions& options = {});

// Splits an affine-game parameter vector into per-player (alpha_i, beta_i)
// blocks of length |q| + 1.
std::vector<std::vector<double>> affine_blocks(std::span<const double> param,
                                               std::size_t n_players);

}  // namespace beliefplay

#endif  // BELIEFPLAY_GAMES_H_
