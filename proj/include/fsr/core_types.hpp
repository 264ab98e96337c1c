#ifndef FSR_CORE_TYPES_HPP
#define FSR_CORE_TYPES_HPP

/** @file
 * Shared domain types for perturbed-dataset hypothesis tests.
 *
 * Index conventions: inside the library every permutation, ordering and
 * dataset index is 0-based. The JSON/CSV boundary (serialization.hpp)
 * converts to the 1-based arrays used in files. Ranks are counts and stay
 * 1-based everywhere.
 */

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fsr/errors.hpp"

namespace fsr {

/// Permutation of 0..k-1. Applying p to a vector v gives w[i] = v[p[i]].
using Permutation = std::vector<std::size_t>;

/// The m performance values Z_1..Z_m of one candidate parameter.
using PerformanceVector = std::vector<double>;

/// Minimum accepted ratio of smallest to largest eigenvalue of a Gram matrix.
inline constexpr double kConditioningTolerance = 1e-10;

inline bool is_permutation_of_range(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (std::size_t v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

inline Permutation identity_permutation(std::size_t k) {
  Permutation p(k);
  for (std::size_t i = 0; i < k; ++i) p[i] = i;
  return p;
}

/// Eigen-decomposed symmetric positive (semi)definite matrix with a
/// relative conditioning verdict.
class GramFactor {
 public:
  GramFactor() = default;
  explicit GramFactor(const Eigen::MatrixXd& gram) : gram_(gram) {
    if (gram.rows() == 0) {
      ratio_ = 0.0;
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    ratio_ = hi > 0.0 ? lo / hi : 0.0;
    if (well_conditioned()) llt_.compute(gram);
  }

  const Eigen::MatrixXd& matrix() const { return gram_; }
  double condition_ratio() const { return ratio_; }
  bool well_conditioned() const { return ratio_ >= kConditioningTolerance; }

  /// gram^{-1} * rhs. Throws ConditioningError when the check failed.
  template <typename Derived>
  Eigen::MatrixXd solve(const Eigen::MatrixBase<Derived>& rhs) const {
    require();
    return llt_.solve(rhs);
  }

  Eigen::MatrixXd inverse() const {
    require();
    return llt_.solve(Eigen::MatrixXd::Identity(gram_.rows(), gram_.cols()));
  }

  void require() const {
    if (!well_conditioned()) {
      throw ConditioningError("Gram matrix is ill-conditioned (eigenvalue ratio " +
                              std::to_string(ratio_) + " < 1e-10)");
    }
  }

 private:
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double ratio_ = 0.0;
};

/// Linear regression data Y = X^T theta + N with X stored n_theta x n.
class RegressionDataset {
 public:
  RegressionDataset(Eigen::MatrixXd regressors, Eigen::VectorXd outputs)
      : regressors_(std::move(regressors)), outputs_(std::move(outputs)) {
    if (regressors_.rows() < 1) throw DomainError("regressors must have at least one row");
    if (regressors_.cols() != outputs_.size()) {
      throw DomainError("regressor column count " + std::to_string(regressors_.cols()) +
                        " != output length " + std::to_string(outputs_.size()));
    }
    if (regressors_.cols() < regressors_.rows()) {
      throw DomainError("need n >= n_theta samples");
    }
    gram_ = GramFactor(regressors_ * regressors_.transpose());
  }

  const Eigen::MatrixXd& regressors() const { return regressors_; }
  const Eigen::VectorXd& outputs() const { return outputs_; }
  std::size_t n() const { return static_cast<std::size_t>(outputs_.size()); }
  std::size_t n_theta() const { return static_cast<std::size_t>(regressors_.rows()); }
  const GramFactor& gram() const { return gram_; }

  Eigen::VectorXd residual(const Eigen::VectorXd& theta) const {
    if (static_cast<std::size_t>(theta.size()) != n_theta()) {
      throw DomainError("theta has length " + std::to_string(theta.size()) + ", expected " +
                        std::to_string(n_theta()));
    }
    return outputs_ - regressors_.transpose() * theta;
  }

 private:
  Eigen::MatrixXd regressors_;
  Eigen::VectorXd outputs_;
  GramFactor gram_;
};

/// Input/output time series of a single-input single-output system.
class IoDataset {
 public:
  IoDataset(Eigen::VectorXd inputs, Eigen::VectorXd outputs)
      : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    if (inputs_.size() != outputs_.size()) throw DomainError("input and output lengths differ");
    if (inputs_.size() < 1) throw DomainError("IoDataset needs n >= 1");
  }

  const Eigen::VectorXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& outputs() const { return outputs_; }
  std::size_t n() const { return static_cast<std::size_t>(outputs_.size()); }

 private:
  Eigen::VectorXd inputs_;
  Eigen::VectorXd outputs_;
};

enum class Method { SignFlip, Permute };

inline const char* to_string(Method m) { return m == Method::SignFlip ? "sign_flip" : "permute"; }

/// The frozen random object shared by every parameter tested against one
/// dataset. Realized signs/permutations are stored, not only the seed.
struct PerturbationSetup {
  Method method = Method::SignFlip;
  std::size_t m = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string rng = "mt19937_64";
  std::vector<std::vector<int>> sign_matrix;  // m x n, SignFlip only
  std::vector<Permutation> permutations;      // m of length n, Permute only
  Permutation tie_perm;                       // permutation of 0..m-1

  bool operator==(const PerturbationSetup&) const = default;
};

/// Accept iff Z_1 is not among the q largest values; level 1 - q/m.
class RankRule {
 public:
  RankRule(std::size_t q, std::size_t m) : q_(q), m_(m) {
    if (m < 2) throw DomainError("rank rule needs m >= 2");
    if (q < 1 || q > m - 1) {
      throw DomainError("rank rule needs 1 <= q <= m-1, got q=" + std::to_string(q) +
                        ", m=" + std::to_string(m));
    }
  }
  std::size_t q() const { return q_; }
  std::size_t m() const { return m_; }
  double confidence() const { return 1.0 - static_cast<double>(q_) / static_cast<double>(m_); }
  bool accepts(std::size_t rank_of_one) const { return rank_of_one > q_; }

 private:
  std::size_t q_;
  std::size_t m_;
};

struct TestVerdict {
  bool accepted = false;
  std::size_t rank_of_one = 0;  // 1-based position of dataset 1 in the decreasing ordering
  PerformanceVector z_values;
  std::optional<std::string> diagnostic;
};

struct ValidationReport {
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

/// Checks every PerturbationSetup invariant and lists each violation.
inline ValidationReport validate_setup(const PerturbationSetup& s) {
  ValidationReport r;
  auto fail = [&](std::string msg) { r.errors.push_back(std::move(msg)); };

  if (s.m < 2) fail("m must be >= 2");
  if (s.n < 1) fail("n must be >= 1");
  if (s.tie_perm.size() != s.m) {
    fail("tie_perm must have length m");
  } else if (!is_permutation_of_range(s.tie_perm)) {
    fail("tie_perm is not a permutation of 1..m");
  }

  if (s.method == Method::SignFlip) {
    if (!s.permutations.empty()) fail("sign_flip setup must not carry permutations");
    if (s.sign_matrix.size() != s.m) fail("sign_matrix must have m rows");
    for (std::size_t i = 0; i < s.sign_matrix.size(); ++i) {
      const auto& row = s.sign_matrix[i];
      if (row.size() != s.n) fail("sign_matrix row " + std::to_string(i + 1) + " must have length n");
      for (int v : row) {
        if (v != 1 && v != -1) {
          fail("sign_matrix row " + std::to_string(i + 1) + " has an entry outside {-1,+1}");
          break;
        }
      }
    }
    if (!s.sign_matrix.empty()) {
      for (int v : s.sign_matrix.front()) {
        if (v != 1) {
          fail("first sequence must be all-one");
          break;
        }
      }
    }
  } else {
    if (!s.sign_matrix.empty()) fail("permute setup must not carry a sign_matrix");
    if (s.permutations.size() != s.m) fail("permutations must hold m entries");
    for (std::size_t i = 0; i < s.permutations.size(); ++i) {
      const auto& p = s.permutations[i];
      if (p.size() != s.n) {
        fail("permutation " + std::to_string(i + 1) + " must have length n");
      } else if (!is_permutation_of_range(p)) {
        fail("permutation " + std::to_string(i + 1) + " is not a permutation of 1..n");
      }
    }
    if (!s.permutations.empty() && s.permutations.front() != identity_permutation(s.n)) {
      fail("first permutation must be the identity");
    }
  }
  return r;
}

}  // namespace fsr

#endif  // FSR_CORE_TYPES_HPP
