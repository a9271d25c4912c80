#ifndef BELIEFPLAY_STRATEGY_H_
#define BELIEFPLAY_STRATEGY_H_

#include <cstddef>
#include <span>
#include <vector>

namespace beliefplay {

// Per-player strategy vectors: points in a box for continuous games, mixed
// strategies over actions for finite games.
class StrategyProfile {
 public:
  StrategyProfile() = default;
  explicit StrategyProfile(std::vector<std::vector<double>> per_player)
      : per_player_(std::move(per_player)) {}

  static StrategyProfile from_flat(std::span<const double> flat,
                                   std::span<const std::size_t> dims);

  std::size_t n_players() const { return per_player_.size(); }
  const std::vector<double>& operator[](std::size_t i) const {
    return per_player_[i];
  }
  std::vector<double>& operator[](std::size_t i) { return per_player_[i]; }
  const std::vector<std::vector<double>>& per_player() const {
    return per_player_;
  }

  std::vector<double> flat() const;
  std::size_t flat_size() const;
  std::vector<std::size_t> dims() const;

  bool operator==(const StrategyProfile& other) const = default;

 private:
  std::vector<std::vector<double>> per_player_;
};

// Euclidean distance over the flattened profiles.
double distance(const StrategyProfile& a, const StrategyProfile& b);
double distance(std::span<const double> a, std::span<const double> b);

}  // namespace beliefplay

#endif  // BELIEFPLAY_STRATEGY_H_
