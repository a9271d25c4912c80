#include "beliefplay/game.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "beliefplay/errors.h"

namespace beliefplay {

namespace {

constexpr int kGoldenIterations = 200;
constexpr double kBracketTol = 1e-10;
constexpr int kCoordinateSweeps = 50;
constexpr double kSetWidth = 1e-6;
constexpr int kFallbackStarts = 20;
constexpr int kFallbackIterations = 20000;
constexpr double kClusterTol = 1e-6;

// Recursively visits every pure action profile.
void for_each_profile(const std::vector<std::size_t>& n_actions,
                      const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> a(n_actions.size(), 0);
  for (;;) {
    fn(a);
    std::size_t k = 0;
    while (k < a.size()) {
      if (++a[k] < n_actions[k]) break;
      a[k] = 0;
      ++k;
    }
    if (k == a.size()) return;
  }
}

}  // namespace

ParamMixture mixture_of(const ParameterSpace& space, const Belief& belief) {
  if (belief.size() != space.size())
    throw ContractError("belief size differs from parameter count");
  ParamMixture m;
  for (std::size_t s : belief.support()) {
    m.weights.push_back(belief.prob(s));
    m.params.push_back(space.param(s));
  }
  return m;
}

ParamMixture point_estimate(std::vector<double> param) {
  ParamMixture m;
  m.weights.push_back(1.0);
  m.params.push_back(std::move(param));
  return m;
}

// ---------------------------------------------------------------------------
// EquilibriumSet

EquilibriumSet EquilibriumSet::point(const StrategyProfile& q) {
  EquilibriumSet e;
  e.kind_ = Kind::kPoint;
  e.dims_ = q.dims();
  e.anchors_ = {q};
  return e;
}

EquilibriumSet EquilibriumSet::box(const StrategyProfile& lower,
                                   const StrategyProfile& upper) {
  if (lower.dims() != upper.dims()) throw ContractError("box corners differ in shape");
  auto lo = lower.flat();
  auto hi = upper.flat();
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (lo[k] > hi[k]) throw ContractError("box lower corner exceeds upper");
  EquilibriumSet e;
  e.kind_ = Kind::kBox;
  e.dims_ = lower.dims();
  e.anchors_ = {lower, upper};
  return e;
}

EquilibriumSet EquilibriumSet::line(const StrategyProfile& start,
                                    const StrategyProfile& end) {
  if (start.dims() != end.dims()) throw ContractError("segment ends differ in shape");
  EquilibriumSet e;
  e.kind_ = Kind::kLine;
  e.dims_ = start.dims();
  e.anchors_ = {start, end};
  return e;
}

EquilibriumSet EquilibriumSet::finite_list(std::vector<StrategyProfile> points) {
  if (points.empty()) throw ContractError("finite list must be non-empty");
  EquilibriumSet e;
  e.kind_ = Kind::kFiniteList;
  e.dims_ = points.front().dims();
  e.anchors_ = std::move(points);
  return e;
}

StrategyProfile EquilibriumSet::nearest(const StrategyProfile& q) const {
  switch (kind_) {
    case Kind::kPoint:
      return anchors_[0];
    case Kind::kBox: {
      auto x = q.flat();
      auto lo = anchors_[0].flat();
      auto hi = anchors_[1].flat();
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
      return StrategyProfile::from_flat(x, dims_);
    }
    case Kind::kLine: {
      auto x = q.flat();
      auto a = anchors_[0].flat();
      auto b = anchors_[1].flat();
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        num += (x[k] - a[k]) * (b[k] - a[k]);
        den += (b[k] - a[k]) * (b[k] - a[k]);
      }
      double t = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = a[k] + t * (b[k] - a[k]);
      return StrategyProfile::from_flat(x, dims_);
    }
    case Kind::kFiniteList: {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < anchors_.size(); ++k) {
        double d = beliefplay::distance(q, anchors_[k]);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      return anchors_[best];
    }
  }
  return anchors_[0];
}

double EquilibriumSet::distance(const StrategyProfile& q) const {
  return beliefplay::distance(q, nearest(q));
}

std::vector<StrategyProfile> EquilibriumSet::extreme_points() const {
  if (kind_ != Kind::kBox) return anchors_;
  auto lo = anchors_[0].flat();
  auto hi = anchors_[1].flat();
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (hi[k] > lo[k]) free.push_back(k);
  std::vector<StrategyProfile> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << free.size()); ++mask) {
    auto x = lo;
    for (std::size_t j = 0; j < free.size(); ++j)
      if (mask & (std::size_t{1} << j)) x[free[j]] = hi[free[j]];
    out.push_back(StrategyProfile::from_flat(x, dims_));
  }
  return out;
}

std::vector<StrategyProfile> EquilibriumSet::sample(std::size_t n, Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<StrategyProfile> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    switch (kind_) {
      case Kind::kPoint:
        out.push_back(anchors_[0]);
        break;
      case Kind::kBox: {
        auto lo = anchors_[0].flat();
        auto hi = anchors_[1].flat();
        for (std::size_t j = 0; j < lo.size(); ++j) lo[j] += unit(rng) * (hi[j] - lo[j]);
        out.push_back(StrategyProfile::from_flat(lo, dims_));
        break;
      }
      case Kind::kLine: {
        auto a = anchors_[0].flat();
        auto b = anchors_[1].flat();
        double t = unit(rng);
        for (std::size_t j = 0; j < a.size(); ++j) a[j] += t * (b[j] - a[j]);
        out.push_back(StrategyProfile::from_flat(a, dims_));
        break;
      }
      case Kind::kFiniteList: {
        std::uniform_int_distribution<std::size_t> pick(0, anchors_.size() - 1);
        out.push_back(anchors_[pick(rng)]);
        break;
      }
    }
  }
  return out;
}

std::vector<StrategyProfile> EquilibriumSet::grid(std::size_t per_axis) const {
  if (per_axis < 1) per_axis = 1;
  auto frac = [per_axis](std::size_t j) {
    return per_axis == 1 ? 0.5 : static_cast<double>(j) / (per_axis - 1);
  };
  std::vector<StrategyProfile> out;
  switch (kind_) {
    case Kind::kPoint:
    case Kind::kFiniteList:
      return anchors_;
    case Kind::kLine: {
      auto a = anchors_[0].flat();
      auto b = anchors_[1].flat();
      for (std::size_t j = 0; j < per_axis; ++j) {
        auto x = a;
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += frac(j) * (b[k] - a[k]);
        out.push_back(StrategyProfile::from_flat(x, dims_));
      }
      return out;
    }
    case Kind::kBox: {
      auto lo = anchors_[0].flat();
      auto hi = anchors_[1].flat();
      std::vector<std::size_t> free, counts;
      for (std::size_t k = 0; k < lo.size(); ++k)
        if (hi[k] > lo[k]) {
          free.push_back(k);
          counts.push_back(per_axis);
        }
      if (free.empty()) return {anchors_[0]};
      for_each_profile(counts, [&](const std::vector<std::size_t>& idx) {
        auto x = lo;
        for (std::size_t j = 0; j < free.size(); ++j)
          x[free[j]] = lo[free[j]] + frac(idx[j]) * (hi[free[j]] - lo[free[j]]);
        out.push_back(StrategyProfile::from_flat(x, dims_));
      });
      return out;
    }
  }
  return out;
}

std::string EquilibriumSet::kind_name() const {
  switch (kind_) {
    case Kind::kPoint: return "point";
    case Kind::kBox: return "box";
    case Kind::kLine: return "line";
    case Kind::kFiniteList: return "finite_list";
  }
  return "point";
}

double excess(const EquilibriumSet& a, const EquilibriumSet& b,
              std::size_t samples, Rng& rng) {
  std::vector<StrategyProfile> probes = a.extreme_points();
  if (!b.convex() && a.kind() != EquilibriumSet::Kind::kFiniteList &&
      a.kind() != EquilibriumSet::Kind::kPoint) {
    auto extra = a.sample(samples, rng);
    probes.insert(probes.end(), extra.begin(), extra.end());
  }
  double worst = 0.0;
  for (const auto& x : probes) worst = std::max(worst, b.distance(x));
  return worst;
}

double hausdorff(const EquilibriumSet& a, const EquilibriumSet& b,
                 std::size_t samples, Rng& rng) {
  return std::max(excess(a, b, samples, rng), excess(b, a, samples, rng));
}

// ---------------------------------------------------------------------------
// GameModel

GameModel::GameModel(GameSpec spec) : spec_(std::move(spec)) {
  const std::size_t n_params = spec_.space.size();
  if (spec_.boxes.empty() == spec_.n_actions.empty())
    throw ContractError("game needs either strategy boxes or action counts");
  for (const auto& b : spec_.boxes) {
    if (b.lower.size() != b.upper.size() || b.lower.empty())
      throw ContractError("strategy box bounds must match and be non-empty");
    for (std::size_t k = 0; k < b.lower.size(); ++k)
      if (!(b.lower[k] <= b.upper[k]))
        throw ContractError("strategy box lower bound exceeds upper bound");
  }
  for (std::size_t n : spec_.n_actions)
    if (n == 0) throw ContractError("each player needs at least one action");
  if (spec_.sigma.size() != n_params)
    throw ContractError("noise sigma must be given for every parameter");
  const std::size_t channels = spec_.sigma.front().size();
  if (channels == 0) throw ContractError("at least one noise channel required");
  for (const auto& row : spec_.sigma) {
    if (row.size() != channels)
      throw ContractError("every parameter needs the same channel count");
    for (double v : row)
      if (!std::isfinite(v) || v < 0.0)
        throw ContractError("noise sigma must be finite and non-negative");
  }
  for (std::size_t c = 0; c < channels; ++c) {
    bool zero = spec_.sigma[0][c] == 0.0;
    for (const auto& row : spec_.sigma)
      if ((row[c] == 0.0) != zero)
        throw ContractError(
            "a channel must be degenerate for all parameters or for none");
  }
  if (!spec_.correlation.empty()) {
    for (std::size_t c = 0; c < channels; ++c)
      if (spec_.sigma[0][c] == 0.0)
        throw ContractError("correlated channels must not be degenerate");
    if (spec_.correlation.size() != channels * channels)
      throw ContractError("correlation must be a channels x channels matrix");
    Eigen::MatrixXd r(channels, channels);
    for (std::size_t a = 0; a < channels; ++a)
      for (std::size_t b = 0; b < channels; ++b) {
        r(a, b) = spec_.correlation[a * channels + b];
        if (a == b && r(a, b) != 1.0)
          throw ContractError("correlation diagonal must be 1");
      }
    if (!r.isApprox(r.transpose()))
      throw ContractError("correlation must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success)
      throw ContractError("correlation must be positive definite");
    Eigen::MatrixXd l = llt.matrixL();
    cholesky_.resize(channels * channels);
    for (std::size_t a = 0; a < channels; ++a)
      for (std::size_t b = 0; b < channels; ++b) cholesky_[a * channels + b] = l(a, b);
  }
}

std::size_t GameModel::n_players() const {
  return is_finite() ? spec_.n_actions.size() : spec_.boxes.size();
}

std::vector<std::size_t> GameModel::dims() const {
  std::vector<std::size_t> out;
  if (is_finite()) return spec_.n_actions;
  for (const auto& b : spec_.boxes) out.push_back(b.lower.size());
  return out;
}

bool GameModel::channel_degenerate(std::size_t channel) const {
  return spec_.sigma[0][channel] == 0.0;
}

std::vector<double> GameModel::observed_statistic(
    const StrategyProfile&, std::span<const double> channels,
    std::span<const double>) const {
  return {channels.begin(), channels.end()};
}

ObservationModel GameModel::observation_model(std::size_t s,
                                              const StrategyProfile& q) const {
  ObservationModel m;
  m.mean = channel_means(space().param(s), q);
  m.sigma = spec_.sigma[s];
  m.active.assign(m.mean.size(), true);
  return m;
}

std::optional<BestResponse> GameModel::analytic_best_response(
    const ParamMixture&, std::size_t, const StrategyProfile&) const {
  return std::nullopt;
}

std::optional<EquilibriumSet> GameModel::analytic_equilibrium(
    const ParamMixture&) const {
  return std::nullopt;
}

bool GameModel::feasible(const StrategyProfile& q, double tol) const {
  if (q.dims() != dims()) return false;
  for (std::size_t i = 0; i < n_players(); ++i) {
    if (is_finite()) {
      double sum = 0.0;
      for (double p : q[i]) {
        if (!(p >= -tol)) return false;
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol + 1e-12) return false;
    } else {
      for (std::size_t k = 0; k < q[i].size(); ++k)
        if (!(q[i][k] >= box(i).lower[k] - tol && q[i][k] <= box(i).upper[k] + tol))
          return false;
    }
  }
  return true;
}

StrategyProfile GameModel::center() const {
  std::vector<std::vector<double>> blocks;
  for (std::size_t i = 0; i < n_players(); ++i) {
    if (is_finite()) {
      blocks.emplace_back(n_actions(i), 1.0 / n_actions(i));
    } else {
      std::vector<double> mid(box(i).lower.size());
      for (std::size_t k = 0; k < mid.size(); ++k)
        mid[k] = 0.5 * (box(i).lower[k] + box(i).upper[k]);
      blocks.push_back(std::move(mid));
    }
  }
  return StrategyProfile(std::move(blocks));
}

StrategyProfile GameModel::random_profile(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> blocks;
  for (std::size_t i = 0; i < n_players(); ++i) {
    if (is_finite()) {
      std::exponential_distribution<double> expo(1.0);
      std::vector<double> p(n_actions(i));
      double sum = 0.0;
      for (double& v : p) sum += (v = expo(rng));
      for (double& v : p) v /= sum;
      blocks.push_back(std::move(p));
    } else {
      std::vector<double> x(box(i).lower.size());
      for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = box(i).lower[k] + unit(rng) * (box(i).upper[k] - box(i).lower[k]);
      blocks.push_back(std::move(x));
    }
  }
  return StrategyProfile(std::move(blocks));
}

StrategyProfile GameModel::clamp(const StrategyProfile& q) const {
  StrategyProfile out = q;
  for (std::size_t i = 0; i < n_players(); ++i) {
    if (is_finite()) {
      double sum = 0.0;
      for (double& p : out[i]) sum += (p = std::max(p, 0.0));
      for (double& p : out[i]) p /= sum;
    } else {
      for (std::size_t k = 0; k < out[i].size(); ++k)
        out[i][k] = std::clamp(out[i][k], box(i).lower[k], box(i).upper[k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// FiniteGame

double FiniteGame::mean_payoff(std::span<const double> param,
                               const StrategyProfile& q, std::size_t i) const {
  double total = 0.0;
  for_each_profile(spec_.n_actions, [&](const std::vector<std::size_t>& a) {
    double w = 1.0;
    for (std::size_t j = 0; j < a.size() && w > 0.0; ++j) w *= q[j][a[j]];
    if (w > 0.0) total += w * action_payoff(param, a, i);
  });
  return total;
}

std::vector<double> FiniteGame::channel_means(std::span<const double> param,
                                              const StrategyProfile& q) const {
  return action_channel_means(param, actions_of(q));
}

StrategyProfile FiniteGame::pure_profile(std::span<const std::size_t> actions) const {
  if (actions.size() != n_players()) throw ContractError("one action per player required");
  std::vector<std::vector<double>> blocks;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] >= n_actions(i)) throw ContractError("action index out of range");
    std::vector<double> e(n_actions(i), 0.0);
    e[actions[i]] = 1.0;
    blocks.push_back(std::move(e));
  }
  return StrategyProfile(std::move(blocks));
}

std::vector<std::size_t> FiniteGame::actions_of(const StrategyProfile& q) const {
  if (q.n_players() != n_players()) throw ContractError("profile player count mismatch");
  std::vector<std::size_t> a;
  for (std::size_t i = 0; i < n_players(); ++i) {
    if (q[i].size() != n_actions(i)) throw ContractError("mixed strategy size mismatch");
    auto it = std::max_element(q[i].begin(), q[i].end());
    if (*it < 1.0 - 1e-12) throw ContractError("profile is not pure");
    a.push_back(static_cast<std::size_t>(it - q[i].begin()));
  }
  return a;
}

std::vector<std::pair<std::vector<std::size_t>, double>>
FiniteGame::support_profiles(const StrategyProfile& q, double support_tol) const {
  std::vector<std::pair<std::vector<std::size_t>, double>> out;
  for_each_profile(spec_.n_actions, [&](const std::vector<std::size_t>& a) {
    double w = 1.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (!(q[j][a[j]] > support_tol)) return;
      w *= q[j][a[j]];
    }
    out.emplace_back(a, w);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Payoffs and best responses

double expected_payoff(const GameModel& game, const ParamMixture& mixture,
                       const StrategyProfile& q, std::size_t i) {
  double total = 0.0;
  for (std::size_t k = 0; k < mixture.weights.size(); ++k)
    total += mixture.weights[k] * game.mean_payoff(mixture.params[k], q, i);
  return total;
}

double expected_payoff(const GameModel& game, const Belief& belief,
                       const StrategyProfile& q, std::size_t i) {
  if (!game.feasible(q, 1e-9)) throw ContractError("strategy profile is infeasible");
  return expected_payoff(game, mixture_of(game.space(), belief), q, i);
}

namespace {

BestResponse finite_best_response(const GameModel& game,
                                  const ParamMixture& mixture, std::size_t i,
                                  const StrategyProfile& q) {
  const std::size_t n = game.n_actions(i);
  std::vector<double> values(n);
  StrategyProfile probe = q;
  for (std::size_t a = 0; a < n; ++a) {
    probe[i].assign(n, 0.0);
    probe[i][a] = 1.0;
    values[a] = expected_payoff(game, mixture, probe, i);
  }
  const double best = *std::max_element(values.begin(), values.end());
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  BestResponse br;
  br.lower.assign(n, 0.0);
  br.upper.assign(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (values[a] >= best - tol) {
      br.tied_actions.push_back(a);
      br.upper[a] = 1.0;
    }
  }
  std::size_t pick = br.tied_actions.front();
  for (std::size_t a : br.tied_actions)
    if (q[i][a] > q[i][pick]) pick = a;
  br.strategy.assign(n, 0.0);
  br.strategy[pick] = 1.0;
  br.set_valued = br.tied_actions.size() > 1;
  if (!br.set_valued) br.lower = br.strategy;
  return br;
}

struct Maximum {
  double x;
  double value;
};

// Golden-section maximization of a concave function on [lo, hi].
Maximum golden_section(const std::function<double(double)>& f, double lo,
                       double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  Maximum best{a, f(a)};
  auto consider = [&](double x, double v) {
    if (v > best.value) best = {x, v};
  };
  consider(b, f(b));
  if (hi - lo <= 0.0) return best;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  consider(c, fc);
  consider(d, fd);
  int iter = 0;
  for (; iter < kGoldenIterations && b - a > kBracketTol; ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }
  if (b - a > kBracketTol)
    throw SolverError("golden-section search did not converge", a, b);
  double mid = 0.5 * (a + b);
  consider(mid, f(mid));
  return best;
}

// Extent of {x : f(x) >= level} within [lo, hi] around a point x0 inside it.
std::pair<double, double> level_interval(const std::function<double(double)>& f,
                                         double level, double x0, double lo,
                                         double hi) {
  auto edge = [&](double inside, double outside) {
    if (f(outside) >= level) return outside;
    for (int k = 0; k < 200; ++k) {
      double m = 0.5 * (inside + outside);
      if (m == inside || m == outside) break;
      if (f(m) >= level) {
        inside = m;
      } else {
        outside = m;
      }
    }
    return inside;
  };
  return {edge(x0, lo), edge(x0, hi)};
}

}  // namespace

BestResponse numeric_best_response(const GameModel& game,
                                   const ParamMixture& mixture, std::size_t i,
                                   const StrategyProfile& q) {
  if (game.is_finite()) return finite_best_response(game, mixture, i, q);
  const Box& box = game.box(i);
  const std::size_t dim = box.lower.size();
  StrategyProfile probe = game.clamp(q);
  auto objective = [&](std::size_t k) {
    return [&, k](double x) {
      probe[i][k] = x;
      return expected_payoff(game, mixture, probe, i);
    };
  };
  std::vector<double> x = probe[i];
  const int sweeps = dim == 1 ? 1 : kCoordinateSweeps;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      probe[i] = x;
      Maximum m = golden_section(objective(k), box.lower[k], box.upper[k]);
      moved = std::max(moved, std::abs(m.x - x[k]));
      x[k] = m.x;
    }
    if (moved < kBracketTol) break;
  }
  BestResponse br;
  br.strategy = x;
  br.lower = x;
  br.upper = x;
  for (std::size_t k = 0; k < dim; ++k) {
    probe[i] = x;
    auto f = objective(k);
    double level = f(x[k]);
    auto [lo, hi] = level_interval(f, level, x[k], box.lower[k], box.upper[k]);
    if (hi - lo > kSetWidth) {
      br.set_valued = true;
      br.lower[k] = lo;
      br.upper[k] = hi;
      br.strategy[k] = std::clamp(q[i][k], lo, hi);
    }
  }
  return br;
}

BestResponse best_response(const GameModel& game, const ParamMixture& mixture,
                           std::size_t i, const StrategyProfile& q) {
  if (i >= game.n_players()) throw ContractError("player index out of range");
  if (game.is_finite()) return finite_best_response(game, mixture, i, q);
  if (auto br = game.analytic_best_response(mixture, i, q)) return *br;
  return numeric_best_response(game, mixture, i, q);
}

BestResponse best_response(const GameModel& game, const Belief& belief,
                           std::size_t i, const StrategyProfile& q) {
  if (!game.feasible(q, 1e-9)) throw ContractError("strategy profile is infeasible");
  return best_response(game, mixture_of(game.space(), belief), i, q);
}

// ---------------------------------------------------------------------------
// Equilibria

namespace {

double br_residual(const GameModel& game, const ParamMixture& mixture,
                   const StrategyProfile& q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < game.n_players(); ++i) {
    BestResponse br = best_response(game, mixture, i, q);
    for (std::size_t k = 0; k < q[i].size(); ++k) {
      double d = q[i][k] - br.strategy[k];
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

}  // namespace

EquilibriumSet iterated_equilibrium_set(const GameModel& game,
                                        const ParamMixture& mixture,
                                        std::uint64_t seed) {
  std::vector<StrategyProfile> found;
  auto add = [&](const StrategyProfile& q) {
    for (const auto& f : found)
      if (distance(f, q) <= kClusterTol) return;
    found.push_back(q);
  };
  if (game.is_finite()) {
    const auto& fg = static_cast<const FiniteGame&>(game);
    std::vector<std::size_t> counts = game.dims();
    for_each_profile(counts, [&](const std::vector<std::size_t>& a) {
      StrategyProfile q = fg.pure_profile(a);
      if (br_residual(game, mixture, q) == 0.0) add(q);
    });
    if (!found.empty()) return EquilibriumSet::finite_list(std::move(found));
  }
  Rng rng = make_rng(seed, 0);
  for (int start = 0; start < kFallbackStarts; ++start) {
    StrategyProfile q = game.random_profile(rng);
    for (int it = 0; it < kFallbackIterations; ++it) {
      StrategyProfile next = q;
      for (std::size_t i = 0; i < game.n_players(); ++i) {
        BestResponse br = best_response(game, mixture, i, q);
        for (std::size_t k = 0; k < q[i].size(); ++k)
          next[i][k] = 0.5 * q[i][k] + 0.5 * br.strategy[k];
      }
      double step = distance(next, q);
      q = std::move(next);
      if (step < 1e-13) break;
    }
    if (br_residual(game, mixture, q) <= 1e-8) add(q);
  }
  if (found.empty()) throw NoEquilibriumFound();
  return EquilibriumSet::finite_list(std::move(found));
}

EquilibriumSet equilibrium_set(const GameModel& game,
                               const ParamMixture& mixture) {
  if (auto eq = game.analytic_equilibrium(mixture)) return *eq;
  return iterated_equilibrium_set(game, mixture);
}

EquilibriumSet equilibrium_set(const GameModel& game, const Belief& belief) {
  return equilibrium_set(game, mixture_of(game.space(), belief));
}

// ---------------------------------------------------------------------------
// Sampling

Observation sample_observation(const GameModel& game, std::size_t s,
                               const StrategyProfile& q, Rng& rng) {
  if (s >= game.space().size()) throw ContractError("parameter index out of range");
  if (!game.feasible(q, 1e-9)) throw ContractError("strategy profile is infeasible");
  Observation obs;
  obs.q = q;
  if (game.is_finite()) {
    const auto& fg = static_cast<const FiniteGame&>(game);
    std::vector<std::size_t> actions;
    for (std::size_t i = 0; i < game.n_players(); ++i) {
      auto it = std::max_element(q[i].begin(), q[i].end());
      if (*it >= 1.0 - 1e-12) {
        actions.push_back(static_cast<std::size_t>(it - q[i].begin()));
      } else {
        std::discrete_distribution<std::size_t> pick(q[i].begin(), q[i].end());
        actions.push_back(pick(rng));
      }
    }
    obs.q = fg.pure_profile(actions);
  }
  const std::size_t k = game.n_channels();
  std::vector<double> y = game.channel_means(game.space().param(s), obs.q);
  std::vector<double> z(k);
  for (double& v : z) {
    std::normal_distribution<double> normal(0.0, 1.0);
    v = normal(rng);
  }
  if (!game.cholesky_.empty()) {
    std::vector<double> mixed(k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b) mixed[a] += game.cholesky_[a * k + b] * z[b];
    z = std::move(mixed);
  }
  for (std::size_t c = 0; c < k; ++c)
    if (!game.channel_degenerate(c)) y[c] += game.sigma(s, c) * z[c];
  obs.payoffs = game.payoffs_from_channels(obs.q, y);
  obs.observed = game.observed_statistic(obs.q, y, obs.payoffs);
  return obs;
}

std::vector<double> sample_payoffs(const GameModel& game, std::size_t s,
                                   const StrategyProfile& q, Rng& rng) {
  return sample_observation(game, s, q, rng).payoffs;
}

}  // namespace beliefplay
