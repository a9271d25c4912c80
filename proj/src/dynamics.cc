#include "beliefplay/dynamics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <ostream>

#include "beliefplay/errors.h"

namespace beliefplay {

UpdateRule UpdateRule::linear(std::optional<double> alpha) {
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0))
    throw ContractError("linear rule step size must lie in [0, 1]");
  return {Kind::kLinear, alpha};
}

double UpdateRule::alpha(long t) const {
  if (kind != Kind::kLinear) return 1.0;
  if (constant_alpha) return *constant_alpha;
  return 1.0 / static_cast<double>(std::max(1L, t));
}

std::string UpdateRule::name() const {
  switch (kind) {
    case Kind::kSimultaneous: return "simultaneous";
    case Kind::kSequential: return "sequential";
    case Kind::kLinear: return "linear";
    case Kind::kFictitiousPlay: return "fictitious_play";
  }
  return "unknown";
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::kBayes: return "bayes";
    case Estimator::kMap: return "map";
    case Estimator::kOls: return "ols";
  }
  return "unknown";
}

namespace {

void refresh_mixture(LearnerState& state, const GameModel& game) {
  switch (state.estimator) {
    case Estimator::kBayes:
      state.mixture = mixture_of(game.space(), state.belief);
      break;
    case Estimator::kMap:
      state.mixture = point_estimate(game.space().param(state.belief.argmax()));
      break;
    case Estimator::kOls:
      state.mixture = point_estimate(state.estimate);
      break;
  }
}

void apply_update(LearnerState& state, const GameModel& game) {
  if (state.estimator == Estimator::kOls) {
    for (const auto& r : state.pending.records) state.ols.ingest(r.q, r.payoffs);
    try {
      auto coef = ols_solve(state.ols);
      state.estimate.clear();
      for (const auto& block : coef)
        state.estimate.insert(state.estimate.end(), block.begin(), block.end());
    } catch (const Unidentifiable&) {
      // keep the previous estimate until the design identifies
    }
  } else {
    state.belief = bayes_update(state.belief, state.pending, game);
  }
  state.pending.records.clear();
}

}  // namespace

LearnerState make_initial_state(const GameModel& game, const Belief& belief,
                                const StrategyProfile& strategy,
                                UpdateSchedule schedule, Estimator estimator,
                                Rng& rng) {
  if (belief.size() != game.space().size())
    throw ContractError("initial belief size does not match the parameter set");
  if (strategy.dims() != game.dims())
    throw ContractError("initial strategy dimensions do not match the game");
  if (!game.feasible(strategy, 1e-9))
    throw ContractError("initial strategy profile is infeasible");
  LearnerState state;
  state.t = 1;
  state.belief = belief;
  state.strategy = strategy;
  state.updated = true;
  state.schedule = std::move(schedule);
  state.schedule.reset(1, 1);
  state.next_k = next_update_stage(state.schedule, rng);
  state.estimator = estimator;
  if (estimator == Estimator::kOls) {
    state.ols = OlsState(strategy.flat_size(), game.n_players());
    const std::size_t d = game.space().dim();
    state.estimate.assign(d, 0.0);
    for (std::size_t s = 0; s < game.space().size(); ++s)
      for (std::size_t j = 0; j < d; ++j)
        state.estimate[j] += belief.prob(s) * game.space().param(s)[j];
    if (d != game.n_players() * (strategy.flat_size() + 1))
      throw ContractError("ols estimator needs affine parameters (slopes, intercept)");
  }
  refresh_mixture(state, game);
  return state;
}

StageOutcome step(LearnerState& state, const UpdateRule& rule,
                  const GameModel& game, Rng& rng) {
  const std::size_t n = game.n_players();
  const bool fp = rule.kind == UpdateRule::Kind::kFictitiousPlay;
  if (fp && !game.is_finite())
    throw ContractError("fictitious play needs a finite game");

  StageOutcome out;
  out.played = state.strategy;
  if (fp) {
    for (std::size_t i = 0; i < n; ++i)
      out.played[i] = best_response(game, state.mixture, i, state.strategy).strategy;
  }
  Observation obs =
      sample_observation(game, game.space().true_index(), out.played, rng);
  out.payoffs = obs.payoffs;
  if (fp) out.played = obs.q;
  state.pending.records.push_back(std::move(obs));

  const long t = state.t;
  state.updated = false;
  if (t + 1 == state.next_k) {
    apply_update(state, game);
    refresh_mixture(state, game);
    state.next_k = next_update_stage(state.schedule, rng);
    state.updated = true;
  }

  const StrategyProfile& q = state.strategy;
  StrategyProfile next = q;
  switch (rule.kind) {
    case UpdateRule::Kind::kSimultaneous:
      for (std::size_t i = 0; i < n; ++i)
        next[i] = best_response(game, state.mixture, i, q).strategy;
      break;
    case UpdateRule::Kind::kSequential: {
      const std::size_t i = static_cast<std::size_t>((t - 1) % static_cast<long>(n));
      next[i] = best_response(game, state.mixture, i, q).strategy;
      break;
    }
    case UpdateRule::Kind::kLinear: {
      const double a = rule.alpha(t);
      for (std::size_t i = 0; i < n; ++i) {
        auto br = best_response(game, state.mixture, i, q).strategy;
        for (std::size_t k = 0; k < br.size(); ++k)
          next[i][k] = (1.0 - a) * q[i][k] + a * br[k];
      }
      break;
    }
    case UpdateRule::Kind::kFictitiousPlay: {
      const double td = static_cast<double>(t);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < next[i].size(); ++k)
          next[i][k] = (td * q[i][k] + out.played[i][k]) / (td + 1.0);
      break;
    }
  }
  if (!game.feasible(next, 1e-9))
    throw SolverError("strategy update left the feasible set", 0.0, 0.0);
  state.strategy = std::move(next);
  state.t = t + 1;
  return out;
}

Trajectory::Trajectory(std::size_t n_params, std::vector<std::size_t> q_dims,
                       std::size_t n_payoffs)
    : n_params_(n_params), q_dims_(std::move(q_dims)), n_payoffs_(n_payoffs) {
  for (std::size_t d : q_dims_) q_size_ += d;
}

void Trajectory::append(const Belief& belief, const StrategyProfile& q,
                        const std::vector<double>& payoffs, bool updated) {
  log_theta_.insert(log_theta_.end(), belief.log_probs().begin(),
                    belief.log_probs().end());
  for (std::size_t i = 0; i < q.n_players(); ++i)
    q_.insert(q_.end(), q[i].begin(), q[i].end());
  c_.insert(c_.end(), payoffs.begin(), payoffs.end());
  updated_.push_back(updated ? 1 : 0);
}

void Trajectory::set_played(std::size_t k, const StrategyProfile& played) {
  if (played_.size() < (k + 1) * q_size_) played_.resize((k + 1) * q_size_, 0.0);
  std::size_t j = k * q_size_;
  for (std::size_t i = 0; i < played.n_players(); ++i)
    for (double v : played[i]) played_[j++] = v;
}

double Trajectory::theta(std::size_t k, std::size_t s) const {
  return std::exp(log_theta(k, s));
}

std::vector<double> Trajectory::theta_row(std::size_t k) const {
  std::vector<double> row(n_params_);
  for (std::size_t s = 0; s < n_params_; ++s) row[s] = theta(k, s);
  return row;
}

std::vector<double> Trajectory::log_theta_row(std::size_t k) const {
  return {log_theta_.begin() + static_cast<std::ptrdiff_t>(k * n_params_),
          log_theta_.begin() + static_cast<std::ptrdiff_t>((k + 1) * n_params_)};
}

StrategyProfile Trajectory::q(std::size_t k) const {
  return StrategyProfile::from_flat(
      std::span<const double>(q_.data() + k * q_size_, q_size_), q_dims_);
}

StrategyProfile Trajectory::played(std::size_t k) const {
  return StrategyProfile::from_flat(
      std::span<const double>(played_.data() + k * q_size_, q_size_), q_dims_);
}

void detect_convergence(Trajectory& traj, std::size_t window, double tol_q,
                        double tol_theta) {
  auto& sum = traj.summary;
  sum.converged = false;
  sum.t_converged = -1;
  const std::size_t n = traj.size();
  if (n == 0 || window == 0 || n <= window) return;
  const std::size_t dq = traj.q_size();
  const std::size_t ns = traj.n_params();
  // last index k (>= 1) with a strategy step of at least tol_q
  long last_big = -1;
  for (std::size_t k = 1; k < n; ++k) {
    double sq = 0.0;
    for (std::size_t j = 0; j < dq; ++j) {
      const double d = traj.q_flat(k, j) - traj.q_flat(k - 1, j);
      sq += d * d;
    }
    if (std::sqrt(sq) >= tol_q) last_big = static_cast<long>(k);
    if (k < window) continue;
    bool ok = last_big <= static_cast<long>(k - window);
    if (ok) {
      double dtheta = 0.0;
      for (std::size_t s = 0; s < ns; ++s)
        dtheta = std::max(dtheta,
                          std::abs(traj.theta(k, s) - traj.theta(k - window, s)));
      ok = dtheta < tol_theta;
    }
    if (ok && sum.t_converged < 0) sum.t_converged = traj.stage(k);
    if (!ok) sum.t_converged = -1;
    if (k == n - 1) sum.converged = ok;
  }
  if (!sum.converged) sum.t_converged = -1;
}

int detect_cycle(const Trajectory& traj, std::size_t window, double min_gap) {
  const std::size_t n = traj.size();
  if (n < 3) return 0;
  const std::size_t from = n > window ? n - window : 0;
  const std::size_t start = std::max<std::size_t>(from, 2);
  bool alternates = false;
  for (std::size_t k = start; k < n; ++k) {
    for (std::size_t j = 0; j < traj.q_size(); ++j) {
      if (traj.q_flat(k, j) != traj.q_flat(k - 2, j)) return 0;
    }
    double gap = 0.0;
    for (std::size_t j = 0; j < traj.q_size(); ++j) {
      const double d = traj.q_flat(k, j) - traj.q_flat(k - 1, j);
      gap += d * d;
    }
    if (std::sqrt(gap) <= min_gap) return 0;
    alternates = true;
  }
  return alternates ? 2 : 0;
}

namespace {

void finish_summary(Trajectory& traj, const LearnerState& state,
                    const GameModel& game, const RunOptions& options) {
  detect_convergence(traj, options.window, options.tol_q, options.tol_theta);
  auto& sum = traj.summary;
  sum.t_stop = static_cast<long>(traj.size());
  sum.final_theta = traj.theta_row(traj.size() - 1);
  sum.final_q = traj.q(traj.size() - 1);
  sum.cycle_period = detect_cycle(traj, options.window, options.tol_q);
  sum.eq_distance = equilibrium_set(game, state.mixture).distance(sum.final_q);
}

Trajectory run_impl(const GameModel& game, const UpdateRule& rule,
                    const UpdateSchedule& schedule, const InitialState& init,
                    long horizon, std::uint64_t seed, const RunOptions& options,
                    bool record_eq) {
  if (horizon < 1) throw ContractError("horizon must be at least 1");
  if (!options.allow_zero_prior && !init.belief.has_full_support())
    throw ContractError("initial belief must have full support");
  if (rule.kind == UpdateRule::Kind::kFictitiousPlay && !game.is_finite())
    throw ContractError("fictitious play needs a finite game");
  Rng rng(seed);
  LearnerState state = make_initial_state(game, init.belief, init.strategy,
                                          schedule, options.estimator, rng);
  Trajectory traj(game.space().size(), game.dims(), game.n_players());
  const bool fp = rule.kind == UpdateRule::Kind::kFictitiousPlay;
  ParamMixture before = state.mixture;
  for (long t = 1; t <= horizon; ++t) {
    if (record_eq && state.updated && t > 1) {
      traj.summary.update_stages.push_back(t);
      traj.summary.update_eq_distance.push_back(
          equilibrium_set(game, before).distance(traj.q(traj.size() - 1)));
      before = state.mixture;
    }
    const bool updated = state.updated;
    const std::size_t k = traj.size();
    traj.append(state.belief, state.strategy, {}, updated);
    StageOutcome out = step(state, rule, game, rng);
    traj.set_payoffs(k, out.payoffs);
    if (fp) traj.set_played(k, out.played);
  }
  finish_summary(traj, state, game, options);
  return traj;
}

}  // namespace

void Trajectory::set_payoffs(std::size_t k, const std::vector<double>& payoffs) {
  if (c_.size() < (k + 1) * n_payoffs_) c_.resize((k + 1) * n_payoffs_, 0.0);
  std::copy(payoffs.begin(), payoffs.end(),
            c_.begin() + static_cast<std::ptrdiff_t>(k * n_payoffs_));
}

Trajectory run(const GameModel& game, const UpdateRule& rule,
               const UpdateSchedule& schedule, const InitialState& init,
               long horizon, std::uint64_t seed, const RunOptions& options) {
  return run_impl(game, rule, schedule, init, horizon, seed, options,
                  options.record_eq_distance);
}

Trajectory run_two_timescale(const GameModel& game, const UpdateRule& rule,
                             const GapFunction& gap, const InitialState& init,
                             long horizon, std::uint64_t seed,
                             RunOptions options) {
  if (!gap.nondecreasing()) throw ContractError("gap function must be nondecreasing");
  options.record_eq_distance = true;
  return run_impl(game, rule, UpdateSchedule::two_timescale(gap), init, horizon,
                  seed, options, true);
}

std::string format_double(double v) {
  if (v == 0.0) return std::signbit(v) ? "-0" : "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out,
                          const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << 't';
  for (std::size_t s = 0; s < traj.n_params(); ++s) out << ",theta_" << s;
  {
    std::size_t i = 0;
    for (std::size_t d : traj.q_dims()) {
      for (std::size_t j = 0; j < d; ++j) out << ",q_" << i << '_' << j;
      ++i;
    }
  }
  for (std::size_t i = 0; i < traj.n_payoffs(); ++i) out << ",c_" << i;
  out << ",updated\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << traj.stage(k);
    for (std::size_t s = 0; s < traj.n_params(); ++s)
      out << ',' << format_double(traj.theta(k, s));
    for (std::size_t j = 0; j < traj.q_size(); ++j)
      out << ',' << format_double(traj.q_flat(k, j));
    for (std::size_t i = 0; i < traj.n_payoffs(); ++i)
      out << ',' << format_double(traj.payoff(k, i));
    out << ',' << (traj.updated(k) ? 1 : 0) << '\n';
  }
}

}  // namespace beliefplay
