#include "beliefplay/games.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "beliefplay/errors.h"

namespace beliefplay {

namespace {

std::vector<std::vector<double>> sigma_table(const GameOptions& options,
                                             std::vector<double> defaults,
                                             std::size_t channels) {
  std::vector<double> per_param = defaults;
  if (!options.sigma.empty()) {
    if (options.sigma.size() == 1) {
      per_param.assign(defaults.size(), options.sigma[0]);
    } else if (options.sigma.size() == defaults.size()) {
      per_param = options.sigma;
    } else {
      throw ContractError("sigma override needs one value or one per parameter");
    }
  }
  std::vector<std::vector<double>> table;
  for (double v : per_param) table.emplace_back(channels, v);
  return table;
}

std::vector<Box> box_table(const GameOptions& options, std::vector<Box> defaults) {
  if (options.bounds.empty()) return defaults;
  if (options.bounds.size() != defaults.size())
    throw ContractError("bounds override needs one box per player");
  return options.bounds;
}

std::vector<Box> scalar_boxes(std::size_t n, double lo, double hi) {
  return std::vector<Box>(n, Box{{lo}, {hi}});
}

double sum_others(const StrategyProfile& q, std::size_t i) {
  double total = 0.0;
  for (std::size_t j = 0; j < q.n_players(); ++j)
    if (j != i) total += q[j][0];
  return total;
}

double total(const StrategyProfile& q) {
  double t = 0.0;
  for (std::size_t j = 0; j < q.n_players(); ++j) t += q[j][0];
  return t;
}

BestResponse point_response(double x) {
  BestResponse br;
  br.strategy = {x};
  br.lower = {x};
  br.upper = {x};
  return br;
}

double mixture_mean(const ParamMixture& m, std::size_t coord) {
  double v = 0.0;
  for (std::size_t k = 0; k < m.weights.size(); ++k) v += m.weights[k] * m.params[k][coord];
  return v;
}

// Payoff-statistic likelihood for games whose payoff is q_i * y + known
// terms: only the first player with positive strategy is informative, the
// others are deterministic given it.
ObservationModel scaled_payoff_model(const GameModel& game, std::size_t s,
                                     const StrategyProfile& q,
                                     double channel_mean,
                                     const std::vector<double>& known_terms) {
  ObservationModel m;
  const std::size_t n = q.n_players();
  m.mean.resize(n);
  m.sigma.resize(n);
  m.active.assign(n, false);
  bool taken = false;
  for (std::size_t i = 0; i < n; ++i) {
    m.mean[i] = q[i][0] * channel_mean + known_terms[i];
    m.sigma[i] = q[i][0] * game.sigma(s, 0);
    if (!taken && q[i][0] > 0.0) {
      m.active[i] = true;
      taken = true;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

class Cournot : public GameModel {
 public:
  using GameModel::GameModel;

  double mean_payoff(std::span<const double> p, const StrategyProfile& q,
                     std::size_t i) const override {
    return q[i][0] * (p[0] - p[1] * total(q));
  }
  std::vector<double> channel_means(std::span<const double> p,
                                    const StrategyProfile& q) const override {
    return {p[0] - p[1] * total(q)};
  }
  std::vector<double> payoffs_from_channels(
      const StrategyProfile& q, std::span<const double> y) const override {
    std::vector<double> c(q.n_players());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = q[i][0] * y[0];
    return c;
  }
  std::vector<double> observed_statistic(
      const StrategyProfile& q, std::span<const double> y,
      std::span<const double> c) const override {
    if (observation_map() == ObservationMap::kFullPayoffs) return {c.begin(), c.end()};
    return GameModel::observed_statistic(q, y, c);
  }
  ObservationModel observation_model(std::size_t s,
                                     const StrategyProfile& q) const override {
    if (observation_map() == ObservationMap::kSufficientStatistic)
      return GameModel::observation_model(s, q);
    const auto& p = space().param(s);
    return scaled_payoff_model(*this, s, q, p[0] - p[1] * total(q),
                               std::vector<double>(q.n_players(), 0.0));
  }
  std::optional<BestResponse> analytic_best_response(
      const ParamMixture& m, std::size_t i, const StrategyProfile& q) const override {
    double a = mixture_mean(m, 0);
    double b = mixture_mean(m, 1);
    if (!(b > 0.0)) return std::nullopt;
    double x = a / (2.0 * b) - 0.5 * sum_others(q, i);
    return point_response(std::clamp(x, box(i).lower[0], box(i).upper[0]));
  }
  std::optional<EquilibriumSet> analytic_equilibrium(
      const ParamMixture& m) const override {
    double a = mixture_mean(m, 0);
    double b = mixture_mean(m, 1);
    if (!(b > 0.0)) return std::nullopt;
    const double n = static_cast<double>(n_players());
    double x = a / ((n + 1.0) * b);
    for (std::size_t i = 0; i < n_players(); ++i)
      if (x < box(i).lower[0] || x > box(i).upper[0]) return std::nullopt;
    return EquilibriumSet::point(
        StrategyProfile(std::vector<std::vector<double>>(n_players(), {x})));
  }
};

class ZeroSum : public GameModel {
 public:
  using GameModel::GameModel;

  static double value(double s, const StrategyProfile& q) {
    double gap = std::max(std::abs(q[0][0] - q[1][0]), s) - s;
    return gap * gap - 2.0 * q[0][0] * q[0][0];
  }
  double mean_payoff(std::span<const double> p, const StrategyProfile& q,
                     std::size_t i) const override {
    double v = value(p[0], q);
    return i == 0 ? v : -v;
  }
  std::vector<double> channel_means(std::span<const double> p,
                                    const StrategyProfile& q) const override {
    return {value(p[0], q)};
  }
  std::vector<double> payoffs_from_channels(
      const StrategyProfile&, std::span<const double> y) const override {
    return {y[0], -y[0]};
  }
  static double min_support(const ParamMixture& m) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& p : m.params) lo = std::min(lo, p[0]);
    return lo;
  }
  std::optional<BestResponse> analytic_best_response(
      const ParamMixture& m, std::size_t i, const StrategyProfile& q) const override {
    if (box(0).lower[0] < 0.0) return std::nullopt;
    if (i == 0) return point_response(box(0).lower[0]);
    double radius = min_support(m);
    if (!(radius > 0.0)) return std::nullopt;
    double lo = std::max(box(1).lower[0], q[0][0] - radius);
    double hi = std::min(box(1).upper[0], q[0][0] + radius);
    if (lo > hi) return std::nullopt;
    BestResponse br;
    br.strategy = {std::clamp(q[1][0], lo, hi)};
    br.lower = {lo};
    br.upper = {hi};
    br.set_valued = hi > lo;
    return br;
  }
  std::optional<EquilibriumSet> analytic_equilibrium(
      const ParamMixture& m) const override {
    if (box(0).lower[0] < 0.0) return std::nullopt;
    double q1 = box(0).lower[0];
    double radius = min_support(m);
    double lo = std::max(box(1).lower[0], q1 - radius);
    double hi = std::min(box(1).upper[0], q1 + radius);
    if (!(radius > 0.0) || lo > hi) return std::nullopt;
    return EquilibriumSet::box(StrategyProfile({{q1}, {lo}}),
                               StrategyProfile({{q1}, {hi}}));
  }
  std::string fixed_point_family() const override {
    return "q1 = 0, q2 <= min(min[theta], 3) for every belief theta";
  }
};

class Investment : public GameModel {
 public:
  using GameModel::GameModel;

  double mean_payoff(std::span<const double> p, const StrategyProfile& q,
                     std::size_t i) const override {
    double qi = q[i][0];
    return qi * (p[0] + total(q)) - 3.0 * qi * qi;
  }
  std::vector<double> channel_means(std::span<const double> p,
                                    const StrategyProfile& q) const override {
    return {p[0] + total(q)};
  }
  std::vector<double> payoffs_from_channels(
      const StrategyProfile& q, std::span<const double> y) const override {
    std::vector<double> c(q.n_players());
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] = q[i][0] * y[0] - 3.0 * q[i][0] * q[i][0];
    return c;
  }
  std::vector<double> observed_statistic(
      const StrategyProfile& q, std::span<const double> y,
      std::span<const double> c) const override {
    if (observation_map() == ObservationMap::kFullPayoffs) return {c.begin(), c.end()};
    return GameModel::observed_statistic(q, y, c);
  }
  ObservationModel observation_model(std::size_t s,
                                     const StrategyProfile& q) const override {
    if (observation_map() == ObservationMap::kSufficientStatistic)
      return GameModel::observation_model(s, q);
    std::vector<double> known(q.n_players());
    for (std::size_t i = 0; i < known.size(); ++i) known[i] = -3.0 * q[i][0] * q[i][0];
    return scaled_payoff_model(*this, s, q, space().param(s)[0] + total(q), known);
  }
  std::optional<BestResponse> analytic_best_response(
      const ParamMixture& m, std::size_t i, const StrategyProfile& q) const override {
    double x = (mixture_mean(m, 0) + sum_others(q, i)) / 4.0;
    return point_response(std::clamp(x, box(i).lower[0], box(i).upper[0]));
  }
  std::optional<EquilibriumSet> analytic_equilibrium(
      const ParamMixture& m) const override {
    const double n = static_cast<double>(n_players());
    if (n >= 5.0) return std::nullopt;
    double x = mixture_mean(m, 0) / (5.0 - n);
    for (std::size_t i = 0; i < n_players(); ++i)
      if (x < box(i).lower[0] || x > box(i).upper[0]) return std::nullopt;
    return EquilibriumSet::point(
        StrategyProfile(std::vector<std::vector<double>>(n_players(), {x})));
  }
};

class CoordinationPenalty : public GameModel {
 public:
  using GameModel::GameModel;

  static double cost(double s, const StrategyProfile& q) {
    double d = std::abs(q[0][0] - q[1][0]);
    if (d <= 1.0) return d * d;
    double r = 1.0 + s * (d - 1.0);
    return r * r;
  }
  double mean_payoff(std::span<const double> p, const StrategyProfile& q,
                     std::size_t i) const override {
    double c = cost(p[0], q);
    return i == 0 ? -c - q[0][0] : -c + q[1][0];
  }
  std::vector<double> channel_means(std::span<const double> p,
                                    const StrategyProfile& q) const override {
    double c = cost(p[0], q);
    return {-c - q[0][0], -c + q[1][0]};
  }
  std::vector<double> payoffs_from_channels(
      const StrategyProfile&, std::span<const double> y) const override {
    return {y.begin(), y.end()};
  }
  std::optional<BestResponse> analytic_best_response(
      const ParamMixture&, std::size_t i, const StrategyProfile& q) const override {
    double x = i == 0 ? q[1][0] - 0.5 : q[0][0] + 0.5;
    return point_response(std::clamp(x, box(i).lower[0], box(i).upper[0]));
  }
  std::optional<EquilibriumSet> analytic_equilibrium(
      const ParamMixture&) const override {
    double lo = std::max(box(0).lower[0], box(1).lower[0] - 0.5);
    double hi = std::min(box(0).upper[0], box(1).upper[0] - 0.5);
    if (lo > hi) return std::nullopt;
    return EquilibriumSet::line(StrategyProfile({{lo}, {lo + 0.5}}),
                                StrategyProfile({{hi}, {hi + 0.5}}));
  }
  std::string fixed_point_family() const override {
    return "q2 - q1 = 1/2 for every belief theta";
  }
};

class TwoRoute : public FiniteGame {
 public:
  using FiniteGame::FiniteGame;

  static std::array<double, 2> loads(std::span<const std::size_t> a) {
    std::array<double, 2> x{0.0, 0.0};
    for (std::size_t e : a) x[e] += 1.0;
    return x;
  }
  double action_payoff(std::span<const double> p, std::span<const std::size_t> a,
                       std::size_t i) const override {
    auto x = loads(a);
    return -(p[0] * x[a[i]] + 1.0);
  }
  std::vector<double> action_channel_means(
      std::span<const double> p, std::span<const std::size_t> a) const override {
    auto x = loads(a);
    return {p[0] * x[0] + 1.0, p[0] * x[1] + 1.0};
  }
  std::vector<double> payoffs_from_channels(
      const StrategyProfile& q, std::span<const double> y) const override {
    auto a = actions_of(q);
    std::vector<double> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = -y[a[i]];
    return c;
  }
  ObservationModel observation_model(std::size_t s,
                                     const StrategyProfile& q) const override {
    ObservationModel m = GameModel::observation_model(s, q);
    auto x = loads(actions_of(q));
    for (std::size_t e = 0; e < 2; ++e) m.active[e] = x[e] > 0.0;
    return m;
  }
};

class Affine : public GameModel {
 public:
  using GameModel::GameModel;

  static double linear(std::span<const double> block, const StrategyProfile& q) {
    double v = block.back();
    std::size_t k = 0;
    for (std::size_t j = 0; j < q.n_players(); ++j)
      for (double x : q[j]) v += block[k++] * x;
    return v;
  }
  std::span<const double> block(std::span<const double> p, std::size_t i) const {
    const std::size_t len = p.size() / n_players();
    return p.subspan(i * len, len);
  }
  double mean_payoff(std::span<const double> p, const StrategyProfile& q,
                     std::size_t i) const override {
    return linear(block(p, i), q);
  }
  std::vector<double> channel_means(std::span<const double> p,
                                    const StrategyProfile& q) const override {
    std::vector<double> out(n_players());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = linear(block(p, i), q);
    return out;
  }
  std::vector<double> payoffs_from_channels(
      const StrategyProfile&, std::span<const double> y) const override {
    return {y.begin(), y.end()};
  }
  double own_slope(const ParamMixture& m, std::size_t i) const {
    double v = 0.0;
    for (std::size_t k = 0; k < m.weights.size(); ++k)
      v += m.weights[k] * block(m.params[k], i)[i];
    return v;
  }
  std::optional<BestResponse> analytic_best_response(
      const ParamMixture& m, std::size_t i, const StrategyProfile& q) const override {
    double slope = own_slope(m, i);
    double lo = box(i).lower[0], hi = box(i).upper[0];
    if (slope > 0.0) return point_response(hi);
    if (slope < 0.0) return point_response(lo);
    BestResponse br;
    br.strategy = {std::clamp(q[i][0], lo, hi)};
    br.lower = {lo};
    br.upper = {hi};
    br.set_valued = hi > lo;
    return br;
  }
  std::optional<EquilibriumSet> analytic_equilibrium(
      const ParamMixture& m) const override {
    std::vector<std::vector<double>> lo, hi;
    for (std::size_t i = 0; i < n_players(); ++i) {
      double slope = own_slope(m, i);
      double a = box(i).lower[0], b = box(i).upper[0];
      lo.push_back({slope > 0.0 ? b : a});
      hi.push_back({slope < 0.0 ? a : b});
    }
    return EquilibriumSet::box(StrategyProfile(lo), StrategyProfile(hi));
  }
};

}  // namespace

GamePtr make_cournot(const GameOptions& options) {
  std::size_t n = options.n_players ? options.n_players : 2;
  GameSpec spec;
  spec.id = "cournot";
  spec.space = ParameterSpace({{2.0, 1.0}, {4.0, 3.0}}, 0);
  spec.boxes = box_table(options, scalar_boxes(n, 0.0, 3.0));
  spec.sigma = sigma_table(options, {std::sqrt(0.5), std::sqrt(0.5)}, 1);
  spec.observation = options.observation.value_or(ObservationMap::kSufficientStatistic);
  spec.lipschitz = 4.0 + 2.0 * 3.0 * 3.0 * static_cast<double>(n);
  return std::make_shared<Cournot>(std::move(spec));
}

GamePtr make_zerosum_example(const GameOptions& options) {
  if (options.n_players && options.n_players != 2)
    throw ContractError("the zero-sum example has two players");
  GameSpec spec;
  spec.id = "zerosum";
  spec.space = ParameterSpace({{1.0}, {3.0}, {5.0}}, 1);
  spec.boxes = box_table(options, scalar_boxes(2, 0.0, 6.0));
  spec.sigma = sigma_table(options, {1.0, 1.0, 1.0}, 1);
  spec.lipschitz = 36.0;
  return std::make_shared<ZeroSum>(std::move(spec));
}

GamePtr make_investment(const GameOptions& options) {
  std::size_t n = options.n_players ? options.n_players : 2;
  GameSpec spec;
  spec.id = "investment";
  spec.space = ParameterSpace({{0.0}, {1.0}, {2.0}}, 1);
  spec.boxes = box_table(options, scalar_boxes(n, 0.0, 1.0));
  spec.sigma = sigma_table(options, {std::sqrt(3.0), std::sqrt(5.0), std::sqrt(10.0)}, 1);
  spec.observation = options.observation.value_or(ObservationMap::kSufficientStatistic);
  spec.lipschitz = 2.0 + 7.0 * static_cast<double>(n);
  return std::make_shared<Investment>(std::move(spec));
}

GamePtr make_coordination_penalty(const GameOptions& options) {
  if (options.n_players && options.n_players != 2)
    throw ContractError("the coordination game has two players");
  GameSpec spec;
  spec.id = "coordination_penalty";
  spec.space = ParameterSpace({{2.0}, {4.0}}, 0);
  spec.boxes = box_table(options, {Box{{0.0}, {2.0}}, Box{{1.0}, {4.0}}});
  spec.sigma = sigma_table(options, {1.0, 1.0}, 2);
  spec.lipschitz = 150.0;  // |grad| <= sqrt(105^2 + 104^2) at s = 4, d = 4
  return std::make_shared<CoordinationPenalty>(std::move(spec));
}

GamePtr make_two_route_congestion(std::size_t n_players, const GameOptions& options) {
  if (options.n_players) n_players = options.n_players;
  if (n_players == 0) throw ContractError("at least one player required");
  if (!options.bounds.empty())
    throw ContractError("bounds do not apply to a finite game");
  GameSpec spec;
  spec.id = "two_route_congestion";
  spec.space = ParameterSpace({{1.0}, {2.0}}, 0);
  spec.n_actions.assign(n_players, 2);
  spec.sigma = sigma_table(options, {1.0, 1.0}, 2);
  spec.lipschitz = 2.0 * static_cast<double>(n_players) + 1.0;
  return std::make_shared<TwoRoute>(std::move(spec));
}

std::vector<std::vector<double>> affine_blocks(std::span<const double> param,
                                               std::size_t n_players) {
  if (n_players == 0 || param.size() % n_players != 0)
    throw ContractError("parameter length is not a multiple of the player count");
  const std::size_t len = param.size() / n_players;
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < n_players; ++i)
    out.emplace_back(param.begin() + i * len, param.begin() + (i + 1) * len);
  return out;
}

GamePtr make_affine_game(const std::vector<std::vector<std::vector<double>>>& alpha,
                         const std::vector<std::vector<double>>& beta,
                         const std::vector<double>& sigma, std::size_t true_index,
                         const GameOptions& options) {
  if (alpha.empty() || alpha.size() != beta.size())
    throw ContractError("alpha and beta need one entry per parameter");
  const std::size_t n = beta.front().size();
  if (n == 0) throw ContractError("affine game needs at least one player");
  std::vector<std::vector<double>> params;
  for (std::size_t s = 0; s < alpha.size(); ++s) {
    if (alpha[s].size() != n || beta[s].size() != n)
      throw ContractError("alpha and beta need one block per player");
    std::vector<double> p;
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[s][i].size() != n)
        throw ContractError("alpha blocks need one slope per strategy coordinate");
      p.insert(p.end(), alpha[s][i].begin(), alpha[s][i].end());
      p.push_back(beta[s][i]);
    }
    params.push_back(std::move(p));
  }
  GameOptions opts = options;
  if (opts.sigma.empty()) opts.sigma = sigma;
  GameSpec spec;
  spec.id = "affine_game";
  spec.space = ParameterSpace(std::move(params), true_index);
  spec.boxes = box_table(opts, scalar_boxes(n, 0.0, 1.0));
  spec.sigma = sigma_table(opts, std::vector<double>(alpha.size(), 1.0), n);
  double slope = 0.0;
  for (const auto& a : alpha)
    for (const auto& row : a)
      for (double v : row) slope = std::max(slope, std::abs(v));
  spec.lipschitz = slope * static_cast<double>(n);
  return std::make_shared<Affine>(std::move(spec));
}

}  // namespace beliefplay
