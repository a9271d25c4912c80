#include "beliefplay/strategy.h"

#include <cmath>

#include "beliefplay/errors.h"

namespace beliefplay {

StrategyProfile StrategyProfile::from_flat(std::span<const double> flat,
                                           std::span<const std::size_t> dims) {
  std::vector<std::vector<double>> blocks;
  std::size_t offset = 0;
  for (std::size_t d : dims) {
    if (offset + d > flat.size())
      throw ContractError("flat strategy shorter than player dimensions");
    blocks.emplace_back(flat.begin() + offset, flat.begin() + offset + d);
    offset += d;
  }
  if (offset != flat.size())
    throw ContractError("flat strategy longer than player dimensions");
  return StrategyProfile(std::move(blocks));
}

std::vector<double> StrategyProfile::flat() const {
  std::vector<double> out;
  out.reserve(flat_size());
  for (const auto& block : per_player_) out.insert(out.end(), block.begin(), block.end());
  return out;
}

std::size_t StrategyProfile::flat_size() const {
  std::size_t n = 0;
  for (const auto& block : per_player_) n += block.size();
  return n;
}

std::vector<std::size_t> StrategyProfile::dims() const {
  std::vector<std::size_t> out;
  for (const auto& block : per_player_) out.push_back(block.size());
  return out;
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("strategy sizes differ");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(sum);
}

double distance(const StrategyProfile& a, const StrategyProfile& b) {
  if (a.n_players() != b.n_players())
    throw ContractError("strategy profiles have different player counts");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.n_players(); ++i) {
    if (a[i].size() != b[i].size())
      throw ContractError("strategy blocks have different dimensions");
    for (std::size_t k = 0; k < a[i].size(); ++k)
      sum += (a[i][k] - b[i][k]) * (a[i][k] - b[i][k]);
  }
  return std::sqrt(sum);
}

}  // namespace beliefplay
