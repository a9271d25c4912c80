#include "beliefplay/analysis.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "beliefplay/errors.h"

namespace beliefplay {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double kl_correlated(const GameModel& game, const ObservationModel& a,
                     const ObservationModel& b) {
  const std::size_t k = a.mean.size();
  std::vector<std::size_t> idx;
  for (std::size_t c = 0; c < k; ++c)
    if (a.active[c]) idx.push_back(c);
  const std::size_t n = idx.size();
  if (n == 0) return 0.0;
  const auto& rho = game.correlation();
  Eigen::MatrixXd ca(n, n), cb(n, n);
  Eigen::VectorXd dm(n);
  for (std::size_t i = 0; i < n; ++i) {
    dm(i) = b.mean[idx[i]] - a.mean[idx[i]];
    for (std::size_t j = 0; j < n; ++j) {
      const double r = rho[idx[i] * k + idx[j]];
      ca(i, j) = r * a.sigma[idx[i]] * a.sigma[idx[j]];
      cb(i, j) = r * b.sigma[idx[i]] * b.sigma[idx[j]];
    }
  }
  Eigen::LLT<Eigen::MatrixXd> la(ca), lb(cb);
  double logdet_a = 0.0, logdet_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    logdet_a += 2.0 * std::log(la.matrixL()(i, i));
    logdet_b += 2.0 * std::log(lb.matrixL()(i, i));
  }
  const double trace = lb.solve(ca).trace();
  const double quad = dm.dot(lb.solve(dm));
  return 0.5 * (trace + quad - static_cast<double>(n) + logdet_b - logdet_a);
}

double kl_pure(const GameModel& game, std::size_t s_a, std::size_t s_b,
               const StrategyProfile& q) {
  ObservationModel a = game.observation_model(s_a, q);
  ObservationModel b = game.observation_model(s_b, q);
  if (!game.correlation().empty()) return kl_correlated(game, a, b);
  double total = 0.0;
  for (std::size_t c = 0; c < a.mean.size(); ++c) {
    if (!a.active[c]) continue;
    const double dm = a.mean[c] - b.mean[c];
    const double sa = a.sigma[c], sb = b.sigma[c];
    if (sb == 0.0 || sa == 0.0) {
      if (sa == sb && dm == 0.0) continue;
      return kInf;
    }
    total += std::log(sb / sa) + (sa * sa + dm * dm) / (2.0 * sb * sb) - 0.5;
  }
  return total;
}

bool is_pure(const StrategyProfile& q) {
  for (std::size_t i = 0; i < q.n_players(); ++i)
    for (double p : q[i])
      if (p != 0.0 && p != 1.0) return false;
  return true;
}

bool subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  for (std::size_t x : a)
    if (std::find(b.begin(), b.end(), x) == b.end()) return false;
  return true;
}

std::vector<double> dirichlet(std::size_t n, Rng& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> x(n);
  double sum = 0.0;
  for (double& v : x) {
    do v = g(rng);
    while (v <= 0.0);
    sum += v;
  }
  for (double& v : x) v /= sum;
  return x;
}

}  // namespace

double kl_divergence(const GameModel& game, std::size_t s_a, std::size_t s_b,
                     const StrategyProfile& q) {
  const std::size_t n = game.space().size();
  if (s_a >= n || s_b >= n) throw ContractError("parameter index out of range");
  if (s_a == s_b) return 0.0;
  if (!game.is_finite() || is_pure(q)) return kl_pure(game, s_a, s_b, q);
  const auto& fg = static_cast<const FiniteGame&>(game);
  double total = 0.0;
  for (const auto& [actions, w] : fg.support_profiles(q, 0.0)) {
    const double d = kl_pure(game, s_a, s_b, fg.pure_profile(actions));
    if (std::isinf(d)) return kInf;
    total += w * d;
  }
  return total;
}

std::vector<std::size_t> payoff_equivalent_set(const GameModel& game,
                                               const StrategyProfile& q,
                                               double tol) {
  if (game.is_finite() && !is_pure(q))
    return payoff_equivalent_set_mixed(game, q, tol);
  const std::size_t truth = game.space().true_index();
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < game.space().size(); ++s)
    if (s == truth || kl_divergence(game, truth, s, q) <= tol) out.push_back(s);
  return out;
}

std::vector<std::size_t> payoff_equivalent_set_mixed(const GameModel& game,
                                                     const StrategyProfile& q,
                                                     double tol,
                                                     double support_tol) {
  if (!game.is_finite()) throw ContractError("mixed equivalence needs a finite game");
  const auto& fg = static_cast<const FiniteGame&>(game);
  const std::size_t truth = game.space().true_index();
  std::vector<std::size_t> out;
  auto profiles = fg.support_profiles(q, support_tol);
  for (std::size_t s = 0; s < game.space().size(); ++s) {
    bool equivalent = true;
    if (s != truth) {
      for (const auto& pa : profiles) {
        if (kl_pure(game, truth, s, fg.pure_profile(pa.first)) > tol) {
          equivalent = false;
          break;
        }
      }
    }
    if (equivalent) out.push_back(s);
  }
  return out;
}

double best_response_residual(const GameModel& game, const ParamMixture& mixture,
                              const StrategyProfile& q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < game.n_players(); ++i) {
    BestResponse br = best_response(game, mixture, i, q);
    if (game.is_finite()) {
      double off = 0.0;
      for (std::size_t a = 0; a < q[i].size(); ++a)
        if (br.upper[a] == 0.0) off += q[i][a];
      sum += off * off;
      continue;
    }
    for (std::size_t k = 0; k < q[i].size(); ++k) {
      const double d = q[i][k] - br.strategy[k];
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

FixedPointCertificate certify_fixed_point(const GameModel& game,
                                          const Belief& belief,
                                          const StrategyProfile& q,
                                          double tol_kl, double tol_eq) {
  if (belief.size() != game.space().size())
    throw ContractError("belief size does not match the parameter set");
  FixedPointCertificate c;
  c.belief = belief;
  c.strategy = q;
  c.equivalence_set = payoff_equivalent_set(game, q, tol_kl);
  const auto support = belief.support();
  c.support_in_equivalence = subset(support, c.equivalence_set);
  c.eq_residual = best_response_residual(game, mixture_of(game.space(), belief), q);
  c.is_complete_info =
      support.size() == 1 && support.front() == game.space().true_index();
  c.valid = c.support_in_equivalence && c.eq_residual <= tol_eq &&
            game.feasible(q, 1e-9);
  return c;
}

std::vector<std::vector<double>> simplex_grid(std::size_t n, std::size_t resolution) {
  if (n == 0) throw ContractError("simplex needs at least one vertex");
  if (resolution < 2) throw ContractError("grid needs at least 2 points per edge");
  const std::size_t m = resolution - 1;
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> parts(n, 0);
  // compositions of m into n parts, lexicographic in the leading entries
  auto emit = [&] {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k)
      x[k] = static_cast<double>(parts[k]) / static_cast<double>(m);
    out.push_back(std::move(x));
  };
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t k,
                                                           std::size_t left) {
    if (k + 1 == n) {
      parts[k] = left;
      emit();
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      parts[k] = v;
      rec(k + 1, left - v);
    }
  };
  rec(0, m);
  return out;
}

double FixedPointCluster::belief_distance(std::span<const double> theta) const {
  double best = kInf;
  for (const auto& m : members) {
    double d = 0.0;
    for (std::size_t s = 0; s < theta.size(); ++s)
      d = std::max(d, std::abs(m.belief.prob(s) - theta[s]));
    best = std::min(best, d);
  }
  return best;
}

const FixedPointCluster* FixedPointEnumeration::find(const std::string& id) const {
  for (const auto& c : clusters)
    if (c.id == id) return &c;
  return nullptr;
}

const FixedPointCluster* FixedPointEnumeration::nearest(std::span<const double> theta,
                                                        double* distance) const {
  const FixedPointCluster* best = nullptr;
  double best_d = kInf;
  for (const auto& c : clusters) {
    const double d = c.belief_distance(theta);
    if (d < best_d) {
      best_d = d;
      best = &c;
    }
  }
  if (distance) *distance = best_d;
  return best;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

void finish_cluster(FixedPointCluster& c) {
  const auto& first = c.members.front();
  const std::size_t ns = first.belief.size();
  const std::size_t nq = first.strategy.flat_size();
  c.belief_min.assign(ns, kInf);
  c.belief_max.assign(ns, -kInf);
  c.q_min.assign(nq, kInf);
  c.q_max.assign(nq, -kInf);
  std::vector<double> theta_mean(ns, 0.0), q_mean(nq, 0.0);
  for (const auto& m : c.members) {
    auto qf = m.strategy.flat();
    for (std::size_t s = 0; s < ns; ++s) {
      c.belief_min[s] = std::min(c.belief_min[s], m.belief.prob(s));
      c.belief_max[s] = std::max(c.belief_max[s], m.belief.prob(s));
      theta_mean[s] += m.belief.prob(s);
    }
    for (std::size_t j = 0; j < nq; ++j) {
      c.q_min[j] = std::min(c.q_min[j], qf[j]);
      c.q_max[j] = std::max(c.q_max[j], qf[j]);
      q_mean[j] += qf[j];
    }
  }
  const double n = static_cast<double>(c.members.size());
  for (double& v : theta_mean) v /= n;
  for (double& v : q_mean) v /= n;
  double best = kInf;
  for (std::size_t k = 0; k < c.members.size(); ++k) {
    const auto& m = c.members[k];
    double d = 0.0;
    for (std::size_t s = 0; s < ns; ++s)
      d = std::max(d, std::abs(m.belief.prob(s) - theta_mean[s]));
    d += distance(m.strategy.flat(), q_mean);
    if (d < best) {
      best = d;
      c.representative = k;
    }
  }
}

}  // namespace

FixedPointEnumeration enumerate_fixed_points(const GameModel& game,
                                             const EnumerationOptions& options) {
  const std::size_t ns = game.space().size();
  const std::size_t res = options.belief_grid;
  const auto grid = simplex_grid(ns, res);
  FixedPointEnumeration out;
  out.beliefs_scanned = grid.size();

  std::vector<FixedPointCertificate> certs;
  std::vector<std::size_t> cert_belief;     // grid index per certificate
  std::vector<std::vector<std::size_t>> by_belief(grid.size());
  for (std::size_t b = 0; b < grid.size(); ++b) {
    Belief theta = Belief::from_probs(grid[b]);
    ParamMixture mix = mixture_of(game.space(), theta);
    std::optional<EquilibriumSet> eq;
    try {
      eq = equilibrium_set(game, mix);
    } catch (const NoEquilibriumFound&) {
      continue;
    }
    for (const auto& q : eq->grid(options.strategy_grid)) {
      ++out.candidates;
      auto c = certify_fixed_point(game, theta, q, options.tol_kl, options.tol_eq);
      if (!c.valid) continue;
      by_belief[b].push_back(certs.size());
      certs.push_back(std::move(c));
      cert_belief.push_back(b);
    }
  }

  // q link radius: 1.5 strategy-grid steps of the widest axis of Q
  double width = 1.0;
  if (!game.is_finite()) {
    width = 0.0;
    for (std::size_t i = 0; i < game.n_players(); ++i)
      for (std::size_t k = 0; k < game.box(i).lower.size(); ++k)
        width = std::max(width, game.box(i).upper[k] - game.box(i).lower[k]);
  }
  const double link_q =
      1.5 * width / static_cast<double>(std::max<std::size_t>(options.strategy_grid, 2) - 1) +
      1e-9;
  std::vector<std::vector<double>> flat(certs.size());
  for (std::size_t k = 0; k < certs.size(); ++k) flat[k] = certs[k].strategy.flat();

  // grid coordinates of each belief for neighbour lookup
  const double m = static_cast<double>(res - 1);
  std::map<std::vector<long>, std::size_t> index_of;
  std::vector<std::vector<long>> coords(grid.size());
  for (std::size_t b = 0; b < grid.size(); ++b) {
    coords[b].resize(ns);
    for (std::size_t s = 0; s < ns; ++s) coords[b][s] = std::lround(grid[b][s] * m);
    index_of[coords[b]] = b;
  }

  UnionFind uf(certs.size());
  auto link_cells = [&](std::size_t a, std::size_t b) {
    for (std::size_t x : by_belief[a])
      for (std::size_t y : by_belief[b])
        if (distance(flat[x], flat[y]) <= link_q) uf.unite(x, y);
  };
  for (std::size_t b = 0; b < grid.size(); ++b) {
    if (by_belief[b].empty()) continue;
    link_cells(b, b);
    for (std::size_t from = 0; from < ns; ++from) {
      if (coords[b][from] == 0) continue;
      for (std::size_t to = 0; to < ns; ++to) {
        if (to == from) continue;
        auto c = coords[b];
        --c[from];
        ++c[to];
        auto it = index_of.find(c);
        if (it != index_of.end() && it->second > b) link_cells(b, it->second);
      }
    }
  }

  FixedPointCluster complete;
  complete.id = "complete_info";
  complete.complete_info = true;
  std::map<std::size_t, std::size_t> root_to_cluster;
  std::vector<FixedPointCluster> others;
  for (std::size_t k = 0; k < certs.size(); ++k) {
    if (certs[k].is_complete_info) {
      complete.members.push_back(certs[k]);
      continue;
    }
    const std::size_t root = uf.find(k);
    auto [it, inserted] = root_to_cluster.emplace(root, others.size());
    if (inserted) {
      others.emplace_back();
      others.back().id = others.size() == 1
                             ? "theta_dagger"
                             : "theta_dagger_" + std::to_string(others.size());
    }
    others[it->second].members.push_back(certs[k]);
  }
  if (!complete.members.empty()) {
    finish_cluster(complete);
    out.clusters.push_back(std::move(complete));
  }
  for (auto& c : others) {
    finish_cluster(c);
    out.clusters.push_back(std::move(c));
  }
  if (!others.empty()) out.family = game.fixed_point_family();
  return out;
}

CompletenessCheck check_all_fixed_points_complete(const GameModel& game,
                                                  std::size_t grid_resolution,
                                                  std::size_t n_dirichlet,
                                                  std::uint64_t seed) {
  const std::size_t ns = game.space().size();
  const std::size_t truth = game.space().true_index();
  auto beliefs = simplex_grid(ns, grid_resolution);
  Rng rng = make_rng(seed, 0);
  for (std::size_t k = 0; k < n_dirichlet; ++k) beliefs.push_back(dirichlet(ns, rng));
  CompletenessCheck out;
  for (const auto& probs : beliefs) {
    Belief theta = Belief::from_probs(probs);
    const auto support = theta.support();
    if (support.size() == 1 && support.front() == truth) continue;
    ++out.beliefs_tested;
    EquilibriumSet eq = equilibrium_set(game, theta);
    auto candidates = eq.grid(51);
    for (const auto& q : eq.extreme_points()) candidates.push_back(q);
    for (const auto& q : candidates) {
      if (subset(support, payoff_equivalent_set(game, q))) {
        out.all_complete = false;
        out.counterexample = certify_fixed_point(game, theta, q);
        return out;
      }
    }
  }
  return out;
}

CompleteInfoConditions check_complete_info_equilibrium_conditions(
    const GameModel& game, const FixedPointCertificate& certificate, double xi,
    std::size_t n_probe, std::uint64_t seed) {
  if (!certificate.valid) throw ContractError("certificate is not valid");
  CompleteInfoConditions out;
  Rng rng = make_rng(seed, 0);
  const auto support = certificate.belief.support();
  const EquilibriumSet ball = EquilibriumSet::point(certificate.strategy);

  out.local_equivalence = true;
  std::vector<StrategyProfile> probes;
  for (std::size_t k = 0; k < n_probe; ++k) {
    StrategyProfile q = sample_strategy_near(game, ball, certificate.strategy, xi, rng);
    probes.push_back(q);
    ++out.probes;
    if (!subset(support, payoff_equivalent_set(game, q))) {
      out.local_equivalence = false;
      if (!out.counterexample) out.counterexample = q;
    }
  }

  out.concavity = true;
  if (!game.is_finite()) {
    std::vector<StrategyProfile> contexts{certificate.strategy};
    for (std::size_t k = 0; k < std::min<std::size_t>(probes.size(), 20); ++k)
      contexts.push_back(probes[k]);
    constexpr int kSteps = 40;
    for (std::size_t s : support) {
      const auto& param = game.space().param(s);
      for (std::size_t i = 0; i < game.n_players() && out.concavity; ++i) {
        const Box& box = game.box(i);
        for (std::size_t k = 0; k < box.lower.size() && out.concavity; ++k) {
          const double h = (box.upper[k] - box.lower[k]) / kSteps;
          if (h <= 0.0) continue;
          for (const auto& ctx : contexts) {
            StrategyProfile q = ctx;
            std::vector<double> u(kSteps + 1);
            for (int j = 0; j <= kSteps; ++j) {
              q[i][k] = box.lower[k] + j * h;
              if (j == kSteps) q[i][k] = box.upper[k];
              u[j] = game.mean_payoff(param, q, i);
            }
            for (int j = 1; j < kSteps; ++j) {
              const double d2 = u[j - 1] - 2.0 * u[j] + u[j + 1];
              const double scale = std::max({1.0, std::abs(u[j - 1]), std::abs(u[j]),
                                             std::abs(u[j + 1])});
              if (d2 > 1e-9 * scale) {
                out.concavity = false;
                break;
              }
            }
            if (!out.concavity) break;
          }
        }
      }
    }
  }

  const std::size_t ns = game.space().size();
  EquilibriumSet here = equilibrium_set(game, certificate.belief);
  EquilibriumSet truth =
      equilibrium_set(game, Belief::point_mass(ns, game.space().true_index()));
  out.eq_matches_complete = hausdorff(here, truth, 256, rng) <= kEqTolerance;
  return out;
}

StabilityThresholds stability_thresholds(const Belief& theta_bar, double eps_hat,
                                         double gamma, std::size_t n_params) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ContractError("gamma must lie in (0, 1)");
  if (!(eps_hat > 0.0)) throw ContractError("eps_hat must be positive");
  if (theta_bar.size() != n_params)
    throw ContractError("belief size does not match the parameter count");
  const auto support = theta_bar.support();
  if (support.empty()) throw ContractError("belief support is empty");
  StabilityThresholds th;
  th.theta_bar = theta_bar.probs();
  th.eps_hat = eps_hat;
  th.gamma = gamma;
  th.n_params = n_params;
  th.n_excluded = n_params - support.size();
  th.degenerate = th.n_excluded == 0;
  const double S = static_cast<double>(n_params);
  const double m = static_cast<double>(th.n_excluded);
  const double g = 1.0 - gamma;
  th.rho2 = eps_hat / ((m + 1.0) * S);
  th.rho1 = kInf;
  th.rho3 = kInf;
  for (std::size_t s : support) {
    const double t = theta_bar.prob(s);
    th.rho1 = std::min(th.rho1, g * t * eps_hat / ((g + m) * (m + 1.0) * S + g * eps_hat));
    const double a = (eps_hat - m * S * th.rho2 * t) / (S - m * S * th.rho2);
    const double b = eps_hat / (S + m * (t * S + eps_hat));
    th.rho3 = std::min({th.rho3, a, b, t});
  }
  return th;
}

double doob_upcrossing_bound(const StabilityThresholds& th, double theta_true) {
  const double alpha = theta_true - th.rho1;
  const double a = th.rho1 / alpha;
  return a / (th.rho2 - a);
}

RateEstimate fit_line(std::span<const double> ts, std::span<const double> ys) {
  if (ts.size() != ys.size() || ts.size() < 2)
    throw ContractError("line fit needs at least two paired points");
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k];
    my += ys[k];
  }
  mt /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double dt = ts[k] - mt, dy = ys[k] - my;
    sxx += dt * dt;
    sxy += dt * dy;
    syy += dy * dy;
  }
  RateEstimate r;
  r.points = ts.size();
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mt;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double e = ys[k] - (r.intercept + r.slope * ts[k]);
    ss_res += e * e;
  }
  r.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return r;
}

RateEstimate estimate_convergence_rate(const Trajectory& traj, std::size_t s,
                                       long burn_in) {
  if (s >= traj.n_params()) throw ContractError("parameter index out of range");
  std::vector<double> ts, ys;
  bool truncated = false;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const long t = traj.stage(k);
    if (t <= burn_in) continue;
    const double y = traj.log_theta(k, s);
    if (!std::isfinite(y)) {
      truncated = true;
      break;
    }
    ts.push_back(static_cast<double>(t));
    ys.push_back(y);
  }
  RateEstimate r = fit_line(ts, ys);
  r.truncated = truncated;
  return r;
}

std::vector<MartingaleStat> martingale_diagnostic(const GameModel& game,
                                                  const Belief& theta,
                                                  const StrategyProfile& q,
                                                  std::size_t n_samples,
                                                  std::uint64_t seed) {
  if (!theta.has_full_support()) throw ContractError("belief must have full support");
  if (n_samples < 2) throw ContractError("need at least two samples");
  const std::size_t ns = game.space().size();
  const std::size_t truth = game.space().true_index();
  Rng rng = make_rng(seed, 0);
  std::vector<double> mean(ns, 0.0), m2(ns, 0.0);
  double g_mean = 0.0, g_m2 = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    ObservationBatch batch;
    batch.records.push_back(sample_observation(game, truth, q, rng));
    Belief next = bayes_update(theta, batch, game);
    const double kk = static_cast<double>(k + 1);
    for (std::size_t s = 0; s < ns; ++s) {
      const double x = next.ratio(s, truth);
      const double d = x - mean[s];
      mean[s] += d / kk;
      m2[s] += d * (x - mean[s]);
    }
    const double g = next.log_prob(truth) - theta.log_prob(truth);
    const double d = g - g_mean;
    g_mean += d / kk;
    g_m2 += d * (g - g_mean);
  }
  const double n = static_cast<double>(n_samples);
  std::vector<MartingaleStat> out(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    out[s].expected_ratio = theta.ratio(s, truth);
    out[s].mean_ratio = mean[s];
    out[s].ratio_se = std::sqrt(m2[s] / (n - 1.0) / n);
    out[s].mean_log_gain = g_mean;
    out[s].log_gain_se = std::sqrt(g_m2 / (n - 1.0) / n);
  }
  return out;
}

int upcrossing_count(std::span<const double> series, double lo, double hi) {
  if (!(lo < hi)) throw ContractError("upcrossing interval needs lo < hi");
  int count = 0;
  bool below = false;
  for (double x : series) {
    if (!below) {
      if (x < lo) below = true;
    } else if (x > hi) {
      ++count;
      below = false;
    }
  }
  return count;
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Belief sample_belief_ball(const Belief& center, double radius, bool full_support,
                          Rng& rng, bool* shrunk) {
  if (radius <= 0.0) return center;
  const std::size_t n = center.size();
  if (n == 1) return center;
  const auto& c = center.probs();
  for (;;) {
    std::uniform_real_distribution<double> u(-radius, radius);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::vector<double> x(n);
      double sum = 0.0;
      bool ok = true;
      for (std::size_t s = 0; s + 1 < n; ++s) {
        x[s] = c[s] + u(rng);
        if (x[s] < 0.0 || (full_support && x[s] <= 0.0)) ok = false;
        sum += x[s];
      }
      if (!ok) continue;
      x[n - 1] = 1.0 - sum;
      if (x[n - 1] < 0.0 || (full_support && x[n - 1] <= 0.0)) continue;
      if (std::abs(x[n - 1] - c[n - 1]) >= radius) continue;
      return Belief::from_probs(x);
    }
    radius *= 0.5;
    if (shrunk) *shrunk = true;
  }
}

StrategyProfile sample_strategy_near(const GameModel& game,
                                     const EquilibriumSet& set,
                                     const StrategyProfile& anchor, double radius,
                                     Rng& rng) {
  if (radius <= 0.0) return anchor;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto dims = game.dims();
  if (game.is_finite()) {
    // random direction inside the product of simplices, shrunk toward the set
    StrategyProfile r = anchor;
    for (std::size_t i = 0; i < r.n_players(); ++i) r[i] = dirichlet(r[i].size(), rng);
    StrategyProfile base = set.nearest(r);
    const double d = distance(r, base);
    const double lambda = d > 0.0 ? unit(rng) * std::min(1.0, radius / d) : 0.0;
    StrategyProfile q = base;
    for (std::size_t i = 0; i < q.n_players(); ++i)
      for (std::size_t k = 0; k < q[i].size(); ++k)
        q[i][k] = (1.0 - lambda) * base[i][k] + lambda * r[i][k];
    return q;
  }
  std::vector<double> lo, hi;
  for (const auto& p : set.extreme_points()) {
    auto f = p.flat();
    if (lo.empty()) {
      lo = f;
      hi = f;
    }
    for (std::size_t j = 0; j < f.size(); ++j) {
      lo[j] = std::min(lo[j], f[j]);
      hi[j] = std::max(hi[j], f[j]);
    }
  }
  std::vector<double> blo, bhi;
  for (std::size_t i = 0; i < game.n_players(); ++i)
    for (std::size_t k = 0; k < game.box(i).lower.size(); ++k) {
      blo.push_back(game.box(i).lower[k]);
      bhi.push_back(game.box(i).upper[k]);
    }
  for (std::size_t j = 0; j < lo.size(); ++j) {
    lo[j] = std::max(lo[j] - radius, blo[j]);
    hi[j] = std::min(hi[j] + radius, bhi[j]);
  }
  std::vector<double> x(lo.size());
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = lo[j] + unit(rng) * (hi[j] - lo[j]);
    StrategyProfile q = StrategyProfile::from_flat(x, dims);
    if (set.distance(q) < radius) return q;
  }
  return anchor;
}

StabilityReport monte_carlo_local_stability(const GameModel& game,
                                            const FixedPointCertificate& cert,
                                            const LocalStabilityOptions& options) {
  if (!cert.valid) throw ContractError("certificate is not valid");
  const EquilibriumSet eq = equilibrium_set(game, cert.belief);
  const std::size_t n = options.n_runs;
  std::vector<char> stayed(n, 0), shrunk(n, 0);
  parallel_for(n, options.threads, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, r);
    bool sh = false;
    Belief theta = sample_belief_ball(cert.belief, options.eps1, true, rng, &sh);
    StrategyProfile q =
        sample_strategy_near(game, eq, cert.strategy, options.delta1, rng);
    RunOptions ro;
    ro.allow_zero_prior = options.eps1 <= 0.0;
    Trajectory traj =
        run(game, options.rule, UpdateSchedule::every_stage(), {theta, q},
            options.horizon, derive_seed(derive_seed(options.seed, r), 1), ro);
    const auto& sum = traj.summary;
    double dtheta = 0.0;
    for (std::size_t s = 0; s < sum.final_theta.size(); ++s)
      dtheta = std::max(dtheta, std::abs(sum.final_theta[s] - cert.belief.prob(s)));
    stayed[r] = dtheta < options.eps_bar && eq.distance(sum.final_q) < options.eps_x;
    shrunk[r] = sh;
  });
  StabilityReport rep;
  rep.n_runs = n;
  rep.stayed = static_cast<std::size_t>(std::count(stayed.begin(), stayed.end(), 1));
  rep.radius_shrunk = std::count(shrunk.begin(), shrunk.end(), 1) > 0;
  rep.stay_probability = n ? static_cast<double>(rep.stayed) / n : 0.0;
  rep.escape_probability = 1.0 - rep.stay_probability;
  rep.stay_ci = wilson_interval(rep.stayed, n);
  rep.escape_ci = wilson_interval(n - rep.stayed, n);
  if (rep.stay_ci.lo >= 0.9)
    rep.verdict = "locally_stable_evidence";
  else if (rep.escape_ci.lo >= 0.1)
    rep.verdict = "unstable_evidence";
  else
    rep.verdict = "inconclusive";
  return rep;
}

Assumption2Evidence check_assumption2(const GameModel& game,
                                      const FixedPointCertificate& cert,
                                      double eps, double delta,
                                      std::size_t n_probe, std::uint64_t seed) {
  if (!cert.valid) throw ContractError("certificate is not valid");
  Assumption2Evidence ev;
  ev.a2a.name = "A2a";
  ev.a2b.name = "A2b";
  ev.a2c.name = "A2c";
  const EquilibriumSet eq_bar = equilibrium_set(game, cert.belief);
  const auto support = cert.belief.support();

  // (A2a): excess of EQ(theta) over EQ(theta_bar) must shrink with the radius
  {
    Rng rng = make_rng(seed, 1);
    constexpr std::size_t kBins = 8;
    std::vector<double> radius(n_probe), excess_v(n_probe);
    std::vector<Belief> thetas;
    for (std::size_t k = 0; k < n_probe; ++k) {
      Belief th = sample_belief_ball(cert.belief, eps, false, rng);
      radius[k] = linf_distance(th, cert.belief);
      excess_v[k] = excess(equilibrium_set(game, th), eq_bar, 256, rng);
      thetas.push_back(std::move(th));
    }
    ev.a2a.probes = n_probe;
    std::vector<double> bin_max(kBins, -1.0);
    auto bin_of = [&](double r) {
      return std::min<std::size_t>(kBins - 1, static_cast<std::size_t>(r / eps * kBins));
    };
    for (std::size_t k = 0; k < n_probe; ++k)
      bin_max[bin_of(radius[k])] = std::max(bin_max[bin_of(radius[k])], excess_v[k]);
    std::vector<double> outer(kBins, -1.0);  // max over strictly outer bins
    for (std::size_t b = kBins - 1; b-- > 0;) outer[b] = std::max(outer[b + 1], bin_max[b + 1]);
    double first_bad = kInf;
    for (std::size_t k = 0; k < n_probe; ++k) {
      const double o = outer[bin_of(radius[k])];
      if (o >= 0.0 && excess_v[k] > o + 1e-9) {
        ++ev.a2a.violations;
        if (radius[k] < first_bad) {
          first_bad = radius[k];
          ev.a2a.counter_belief = thetas[k];
        }
      }
    }
    // limit probes very close to theta_bar
    double diam = 1.0;
    for (const auto& p : eq_bar.extreme_points())
      for (const auto& p2 : eq_bar.extreme_points()) diam = std::max(diam, distance(p, p2));
    for (int k = 0; k < 16; ++k) {
      Belief th = sample_belief_ball(cert.belief, eps * 1e-6, false, rng);
      ++ev.a2a.probes;
      if (excess(equilibrium_set(game, th), eq_bar, 256, rng) > 1e-4 * diam) {
        ++ev.a2a.violations;
        first_bad = 0.0;
        ev.a2a.counter_belief = th;
      }
    }
    double passing = 0.0;
    for (std::size_t k = 0; k < n_probe; ++k)
      if (radius[k] < first_bad) passing = std::max(passing, radius[k]);
    ev.a2a.largest_passing_radius = passing;
    ev.a2a.passed = ev.a2a.violations == 0;
    ev.a2a.detail = ev.a2a.passed
                        ? "no counterexample in " + std::to_string(ev.a2a.probes) + " probes"
                        : "excess does not shrink toward the fixed-point belief";
  }

  // (A2b): BR(theta, q) stays in N_delta(EQ(theta_bar))
  {
    Rng rng = make_rng(seed, 2);
    for (std::size_t k = 0; k < n_probe; ++k) {
      Belief th = sample_belief_ball(cert.belief, eps, false, rng);
      StrategyProfile q = sample_strategy_near(game, eq_bar, cert.strategy, delta, rng);
      ParamMixture mix = mixture_of(game.space(), th);
      StrategyProfile next = q;
      for (std::size_t i = 0; i < game.n_players(); ++i)
        next[i] = best_response(game, mix, i, q).strategy;
      ++ev.a2b.probes;
      if (!(eq_bar.distance(next) < delta)) {
        ++ev.a2b.violations;
        if (!ev.a2b.counter_belief) {
          ev.a2b.counter_belief = th;
          ev.a2b.counter_strategy = q;
        }
      }
    }
    ev.a2b.passed = ev.a2b.violations == 0;
    ev.a2b.detail = ev.a2b.passed
                        ? "no counterexample in " + std::to_string(ev.a2b.probes) + " probes"
                        : "best response leaves the strategy neighbourhood";
  }

  // (A2c): [theta_bar] within S*(q) near EQ(theta_bar)
  {
    Rng rng = make_rng(seed, 3);
    for (std::size_t k = 0; k < n_probe; ++k) {
      StrategyProfile q = sample_strategy_near(game, eq_bar, cert.strategy, delta, rng);
      ++ev.a2c.probes;
      if (!subset(support, payoff_equivalent_set(game, q))) {
        ++ev.a2c.violations;
        if (!ev.a2c.counter_strategy) ev.a2c.counter_strategy = q;
      }
    }
    ev.a2c.passed = ev.a2c.violations == 0;
    ev.a2c.detail = ev.a2c.passed
                        ? "no counterexample in " + std::to_string(ev.a2c.probes) + " probes"
                        : "a supported parameter is distinguished near the fixed point";
  }
  return ev;
}

GlobalStabilityVerdict check_global_stability(const GameModel& game,
                                              const GlobalStabilityOptions& options) {
  return check_global_stability(game, enumerate_fixed_points(game, options.enumeration),
                                options);
}

GlobalStabilityVerdict check_global_stability(const GameModel& game,
                                              const FixedPointEnumeration& fps,
                                              const GlobalStabilityOptions& options) {
  GlobalStabilityVerdict v;
  for (const auto& c : fps.clusters) {
    if (!c.complete_info) {
      v.verdict = "not_globally_stable";
      v.witness = c.rep();
      v.witness_cluster = c.id;
      return v;
    }
  }
  if (fps.find("complete_info") == nullptr) {
    v.verdict = "not_globally_stable";
    return v;
  }
  const std::size_t ns = game.space().size();
  const std::size_t truth = game.space().true_index();
  const EquilibriumSet eq_star = equilibrium_set(game, Belief::point_mass(ns, truth));
  std::vector<char> ok(options.n_runs, 0);
  parallel_for(options.n_runs, options.threads, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, r);
    Belief theta = Belief::from_probs(dirichlet(ns, rng));
    StrategyProfile q = game.random_profile(rng);
    Trajectory traj = run(game, options.rule, UpdateSchedule::every_stage(), {theta, q},
                          options.horizon, derive_seed(derive_seed(options.seed, r), 1));
    const auto& sum = traj.summary;
    double dtheta = 0.0;
    for (std::size_t s = 0; s < ns; ++s)
      dtheta = std::max(dtheta, std::abs(sum.final_theta[s] - (s == truth ? 1.0 : 0.0)));
    ok[r] = dtheta < options.tol_theta && eq_star.distance(sum.final_q) < options.tol_q;
  });
  v.n_runs = options.n_runs;
  v.converged = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  v.globally_stable = v.converged == v.n_runs;
  v.verdict = v.globally_stable ? "globally_stable" : "not_globally_stable";
  return v;
}

}  // namespace beliefplay
