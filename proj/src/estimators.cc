#include "beliefplay/estimators.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "beliefplay/errors.h"

namespace beliefplay {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double correlated_log_density(const GameModel& game, const ObservationModel& m,
                              std::span<const double> y) {
  const std::size_t k = m.mean.size();
  std::vector<std::size_t> idx;
  for (std::size_t c = 0; c < k; ++c)
    if (m.active[c]) idx.push_back(c);
  const std::size_t n = idx.size();
  if (n == 0) return 0.0;
  Eigen::MatrixXd cov(n, n);
  Eigen::VectorXd r(n);
  for (std::size_t a = 0; a < n; ++a) {
    r(a) = y[idx[a]] - m.mean[idx[a]];
    for (std::size_t b = 0; b < n; ++b)
      cov(a, b) = game.correlation()[idx[a] * k + idx[b]] * m.sigma[idx[a]] *
                  m.sigma[idx[b]];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  Eigen::VectorXd z = llt.matrixL().solve(r);
  double log_det = 0.0;
  for (std::size_t a = 0; a < n; ++a) log_det += 2.0 * std::log(llt.matrixL()(a, a));
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det +
                 z.squaredNorm());
}

}  // namespace

double log_likelihood(const GameModel& game, std::size_t s,
                      const StrategyProfile& q, std::span<const double> observed) {
  if (s >= game.space().size()) throw ContractError("parameter index out of range");
  ObservationModel m = game.observation_model(s, q);
  if (observed.size() != m.mean.size())
    throw ContractError("observation has " + std::to_string(observed.size()) +
                        " channels, expected " + std::to_string(m.mean.size()));
  if (!game.correlation().empty()) return correlated_log_density(game, m, observed);
  double total = 0.0;
  for (std::size_t c = 0; c < m.mean.size(); ++c) {
    if (!m.active[c]) continue;
    const double r = observed[c] - m.mean[c];
    const double sd = m.sigma[c];
    if (sd == 0.0) {
      if (r != 0.0) return kNegInf;
      continue;
    }
    total += -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - r * r / (2.0 * sd * sd);
  }
  return total;
}

double log_likelihood(const ParameterSpace& space, std::size_t s,
                      const GameModel& game, const StrategyProfile& q,
                      std::span<const double> observed) {
  if (space.size() != game.space().size())
    throw ContractError("parameter space does not belong to the game");
  return log_likelihood(game, s, q, observed);
}

std::vector<double> batch_log_likelihood(const Belief& belief,
                                         const ObservationBatch& batch,
                                         const GameModel& game) {
  if (batch.records.empty()) throw ContractError("observation batch is empty");
  if (belief.size() != game.space().size())
    throw ContractError("belief size differs from parameter count");
  std::vector<double> ll(belief.size(), 0.0);
  for (std::size_t s = 0; s < belief.size(); ++s) {
    if (!belief.in_support(s)) continue;
    for (const auto& rec : batch.records) {
      ll[s] += log_likelihood(game, s, rec.q, rec.observed);
      if (ll[s] == kNegInf) break;
    }
  }
  return ll;
}

Belief bayes_update(const Belief& belief, const ObservationBatch& batch,
                    const GameModel& game) {
  return belief.reweighted(batch_log_likelihood(belief, batch, game));
}

std::size_t map_update(const ParameterSpace& space, const Belief& prior,
                       const ObservationBatch& batch, const GameModel& game) {
  if (space.size() != prior.size())
    throw ContractError("prior size differs from parameter count");
  return bayes_update(prior, batch, game).argmax();
}

OlsState::OlsState(std::size_t q_dim, std::size_t n_players)
    : width_(q_dim + 1),
      response_columns_(n_players),
      normal_(width_ * width_, 0.0),
      cross_(n_players, std::vector<double>(width_, 0.0)) {
  if (n_players == 0) throw ContractError("OLS needs at least one player");
}

void OlsState::ingest(const StrategyProfile& q, std::span<const double> c) {
  std::vector<double> row = q.flat();
  if (row.size() + 1 != width_)
    throw ContractError("strategy dimension differs from the OLS design");
  if (c.size() != response_columns_.size())
    throw ContractError("payoff vector length differs from player count");
  row.push_back(1.0);
  for (std::size_t a = 0; a < width_; ++a)
    for (std::size_t b = 0; b < width_; ++b) normal_[a * width_ + b] += row[a] * row[b];
  for (std::size_t i = 0; i < c.size(); ++i) {
    response_columns_[i].push_back(c[i]);
    for (std::size_t a = 0; a < width_; ++a) cross_[i][a] += row[a] * c[i];
  }
  design_rows_.push_back(std::move(row));
}

OlsState ols_ingest(OlsState state, const StrategyProfile& q,
                    std::span<const double> c) {
  state.ingest(q, c);
  return state;
}

std::vector<std::vector<double>> ols_solve(const OlsState& state) {
  const std::size_t w = state.width();
  if (w == 0) throw ContractError("OLS state is uninitialized");
  Eigen::MatrixXd g(w, w);
  for (std::size_t a = 0; a < w; ++a)
    for (std::size_t b = 0; b < w; ++b) g(a, b) = state.normal_matrix()[a * w + b];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = lambda(w - 1);
  const double rcond = top > 0.0 ? lambda(0) / top : 0.0;
  if (!(rcond >= kOlsRcondThreshold)) {
    std::vector<std::vector<double>> null_dirs;
    for (std::size_t k = 0; k < w; ++k) {
      if (top > 0.0 && lambda(k) / top >= kOlsRcondThreshold) continue;
      Eigen::VectorXd v = eig.eigenvectors().col(k);
      null_dirs.emplace_back(v.data(), v.data() + w);
    }
    std::string what = "unidentifiable: design of " + std::to_string(state.rows()) +
                       " rows has rank below " + std::to_string(w) +
                       "; null directions:";
    for (const auto& v : null_dirs) {
      what += " (";
      for (std::size_t k = 0; k < v.size(); ++k)
        what += (k ? ", " : "") + std::to_string(v[k]);
      what += ")";
    }
    throw Unidentifiable(what, std::move(null_dirs));
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  std::vector<std::vector<double>> out;
  for (const auto& cross : state.cross_vectors()) {
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(cross.data(), w);
    Eigen::VectorXd x = ldlt.solve(b);
    out.emplace_back(x.data(), x.data() + w);
  }
  return out;
}

}  // namespace beliefplay
