#include "beliefplay/belief.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "beliefplay/errors.h"

namespace beliefplay {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaxLogMagnitude = 1e15;
}  // namespace

ParameterSpace::ParameterSpace(std::vector<std::vector<double>> params,
                               std::size_t true_index,
                               std::vector<std::string> labels)
    : params_(std::move(params)),
      true_index_(true_index),
      labels_(std::move(labels)) {
  if (params_.empty()) throw ContractError("parameter set must be non-empty");
  const std::size_t d = params_.front().size();
  if (d == 0) throw ContractError("parameter vectors must be non-empty");
  for (const auto& p : params_) {
    if (p.size() != d)
      throw ContractError("parameter vectors must share one dimension");
  }
  if (true_index_ >= params_.size())
    throw ContractError("true_index out of range");
  std::set<std::vector<double>> seen(params_.begin(), params_.end());
  if (seen.size() != params_.size())
    throw ContractError("parameter vectors must be distinct");
  if (labels_.empty()) {
    for (std::size_t s = 0; s < params_.size(); ++s)
      labels_.push_back("s" + std::to_string(s));
  } else if (labels_.size() != params_.size()) {
    throw ContractError("one label per parameter required");
  }
}

Belief::LogWeight Belief::to_weight(double log_value) {
  double clamped = std::clamp(log_value, -kMaxLogMagnitude, kMaxLogMagnitude);
  return static_cast<LogWeight>(std::ldexp(clamped, 64));
}

void Belief::finalize() {
  LogWeight top = kZero;
  for (LogWeight w : weights_) {
    if (w != kZero && (top == kZero || w > top)) top = w;
  }
  if (top == kZero) throw ImpossibleObservation();
  const std::size_t n = weights_.size();
  std::vector<double> offsets(n, kNegInf);
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (weights_[s] == kZero) continue;
    weights_[s] -= top;
    if (weights_[s] < kFloor) weights_[s] = kFloor;
    offsets[s] = std::ldexp(static_cast<double>(weights_[s]), -64);
    total += std::exp(offsets[s]);
  }
  const double log_total = std::log(total);
  log_probs_.assign(n, kNegInf);
  probs_.assign(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    if (weights_[s] == kZero) continue;
    log_probs_[s] = offsets[s] - log_total;
    probs_[s] = std::exp(log_probs_[s]);
  }
}

Belief Belief::from_probs(std::span<const double> probs) {
  if (probs.empty()) throw ContractError("belief must be non-empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0)
      throw ContractError("belief entries must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ContractError("belief entries must sum to 1");
  std::vector<double> logs(probs.size());
  for (std::size_t s = 0; s < probs.size(); ++s)
    logs[s] = probs[s] > 0.0 ? std::log(probs[s]) : kNegInf;
  return from_log_weights(logs);
}

Belief Belief::from_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) throw ContractError("belief must be non-empty");
  Belief b;
  b.weights_.resize(log_weights.size());
  for (std::size_t s = 0; s < log_weights.size(); ++s) {
    double w = log_weights[s];
    if (std::isnan(w) || w == std::numeric_limits<double>::infinity())
      throw ContractError("log-weights must be finite or -infinity");
    b.weights_[s] = w == kNegInf ? kZero : to_weight(w);
  }
  b.finalize();
  return b;
}

Belief Belief::uniform(std::size_t n) {
  return from_log_weights(std::vector<double>(n, 0.0));
}

Belief Belief::point_mass(std::size_t n, std::size_t s) {
  if (s >= n) throw ContractError("point mass index out of range");
  std::vector<double> w(n, kNegInf);
  w[s] = 0.0;
  return from_log_weights(w);
}

std::vector<std::size_t> Belief::support() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < weights_.size(); ++s)
    if (weights_[s] != kZero) out.push_back(s);
  return out;
}

bool Belief::has_full_support() const {
  return std::none_of(weights_.begin(), weights_.end(),
                      [](LogWeight w) { return w == kZero; });
}

std::size_t Belief::argmax() const {
  std::size_t best = 0;
  for (std::size_t s = 1; s < weights_.size(); ++s)
    if (weights_[s] > weights_[best]) best = s;
  return best;
}

double Belief::log_ratio(std::size_t a, std::size_t b) const {
  if (weights_[b] == kZero)
    throw ContractError("ratio denominator has zero probability");
  if (weights_[a] == kZero) return kNegInf;
  return std::ldexp(static_cast<double>(weights_[a] - weights_[b]), -64);
}

double Belief::ratio(std::size_t a, std::size_t b) const {
  return std::exp(log_ratio(a, b));
}

Belief Belief::reweighted(std::span<const double> log_likelihood) const {
  if (log_likelihood.size() != weights_.size())
    throw ContractError("log-likelihood length differs from belief size");
  Belief b;
  b.weights_ = weights_;
  for (std::size_t s = 0; s < weights_.size(); ++s) {
    if (b.weights_[s] == kZero) continue;
    double ll = log_likelihood[s];
    if (std::isnan(ll) || ll == std::numeric_limits<double>::infinity())
      throw ContractError("log-likelihood must be finite or -infinity");
    if (ll == kNegInf) {
      b.weights_[s] = kZero;
    } else {
      b.weights_[s] += to_weight(ll);
    }
  }
  b.finalize();
  return b;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("belief sizes differ");
  double d = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s)
    d = std::max(d, std::abs(a[s] - b[s]));
  return d;
}

double linf_distance(const Belief& a, const Belief& b) {
  return linf_distance(a.probs(), b.probs());
}

}  // namespace beliefplay
