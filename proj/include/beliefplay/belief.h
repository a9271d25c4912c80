#ifndef BELIEFPLAY_BELIEF_H_
#define BELIEFPLAY_BELIEF_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace beliefplay {

// Finite parameter set S with the index of the true parameter s*.
class ParameterSpace {
 public:
  ParameterSpace() = default;
  ParameterSpace(std::vector<std::vector<double>> params,
                 std::size_t true_index,
                 std::vector<std::string> labels = {});

  std::size_t size() const { return params_.size(); }
  std::size_t dim() const { return params_.front().size(); }
  const std::vector<double>& param(std::size_t s) const { return params_[s]; }
  const std::vector<std::vector<double>>& params() const { return params_; }
  std::size_t true_index() const { return true_index_; }
  const std::string& label(std::size_t s) const { return labels_[s]; }

 private:
  std::vector<std::vector<double>> params_;
  std::size_t true_index_ = 0;
  std::vector<std::string> labels_;
};

// Probability vector on S. Log-weights are accumulated exactly in 128-bit
// fixed point (scale 2^64) so that identical likelihood increments leave
// ratios between parameters bit-identical. Exact zeros use a sentinel.
class Belief {
 public:
  using LogWeight = __int128;

  Belief() = default;

  static Belief from_probs(std::span<const double> probs);
  // Unnormalized log-weights; -infinity marks an excluded parameter.
  static Belief from_log_weights(std::span<const double> log_weights);
  static Belief uniform(std::size_t n);
  static Belief point_mass(std::size_t n, std::size_t s);

  std::size_t size() const { return log_probs_.size(); }
  double prob(std::size_t s) const { return probs_[s]; }
  double log_prob(std::size_t s) const { return log_probs_[s]; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& log_probs() const { return log_probs_; }
  bool in_support(std::size_t s) const { return weights_[s] != kZero; }
  std::vector<std::size_t> support() const;
  bool has_full_support() const;
  // Index of the largest weight; ties resolved to the lowest index.
  std::size_t argmax() const;

  // log(θ(a)/θ(b)) computed from the exact weight difference.
  double log_ratio(std::size_t a, std::size_t b) const;
  double ratio(std::size_t a, std::size_t b) const;

  // Multiplies by exp(log_likelihood[s]) and renormalizes. Throws
  // ImpossibleObservation when no supported parameter keeps finite weight.
  Belief reweighted(std::span<const double> log_likelihood) const;

  bool operator==(const Belief& other) const {
    return weights_ == other.weights_;
  }

 private:
  static constexpr LogWeight kZero = -(static_cast<LogWeight>(1) << 126);
  static constexpr LogWeight kFloor = -(static_cast<LogWeight>(1) << 125);
  static LogWeight to_weight(double log_value);
  void finalize();

  std::vector<LogWeight> weights_;
  std::vector<double> log_probs_;
  std::vector<double> probs_;
};

double linf_distance(const Belief& a, const Belief& b);
double linf_distance(std::span<const double> a, std::span<const double> b);

}  // namespace beliefplay

#endif  // BELIEFPLAY_BELIEF_H_
