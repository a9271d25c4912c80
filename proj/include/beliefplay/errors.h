#ifndef BELIEFPLAY_ERRORS_H_
#define BELIEFPLAY_ERRORS_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace beliefplay {

// Violated precondition or dimension mismatch.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Every parameter assigns zero density to the observed data.
class ImpossibleObservation : public std::runtime_error {
 public:
  ImpossibleObservation()
      : std::runtime_error(
            "impossible observation: every parameter has zero likelihood") {}
};

// The OLS design does not identify the coefficients.
class Unidentifiable : public std::runtime_error {
 public:
  Unidentifiable(const std::string& what,
                 std::vector<std::vector<double>> null_directions)
      : std::runtime_error(what), null_directions_(std::move(null_directions)) {}
  const std::vector<std::vector<double>>& null_directions() const {
    return null_directions_;
  }

 private:
  std::vector<std::vector<double>> null_directions_;
};

// Numeric best-response search failed to shrink its bracket.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_;
  double hi_;
};

class NoEquilibriumFound : public std::runtime_error {
 public:
  NoEquilibriumFound()
      : std::runtime_error("no equilibrium found from any starting point") {}
};

}  // namespace beliefplay

#endif  // BELIEFPLAY_ERRORS_H_
