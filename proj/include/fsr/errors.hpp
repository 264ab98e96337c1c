#ifndef FSR_ERRORS_HPP
#define FSR_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fsr {

/// Precondition violated (bad sizes, out-of-range counts, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A Gram-type matrix failed the relative conditioning check.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed serialized input. `field()` names the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field, const std::string& what)
      : std::runtime_error("parse error in '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// No start of a local optimizer converged. Carries the best iterate seen.
class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, std::vector<double> best_point, double best_cost)
      : std::runtime_error(what), best_point_(std::move(best_point)), best_cost_(best_cost) {}
  const std::vector<double>& best_point() const noexcept { return best_point_; }
  double best_cost() const noexcept { return best_cost_; }

 private:
  std::vector<double> best_point_;
  double best_cost_;
};

}  // namespace fsr

#endif  // FSR_ERRORS_HPP
