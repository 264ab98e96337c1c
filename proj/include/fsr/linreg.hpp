#ifndef FSR_LINREG_HPP
#define FSR_LINREG_HPP

/** @file
 * Performance measures and membership tests for linear regression
 * Y = X^T theta + N.
 *
 * Two perturbation families are supported:
 *  - sign flips (symmetric noise): Z_i is the squared S-norm of the gradient
 *    of the quadratic cost on the sign-perturbed dataset;
 *  - permutations (exchangeable noise): Z_i is the X X^T weighted distance
 *    between theta and the least squares estimate of the permuted dataset.
 */

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "fsr/core_types.hpp"
#include "fsr/perturbation.hpp"

namespace fsr {

enum class Weighting { Identity, CovarianceEstimate };

inline const char* to_string(Weighting w) {
  return w == Weighting::Identity ? "identity" : "covariance";
}

/// theta -> theta^T A theta + 2 b^T theta + c, with A symmetric.
struct QuadraticForm {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double c = 0.0;

  QuadraticForm() = default;
  QuadraticForm(Eigen::MatrixXd a, Eigen::VectorXd b_, double c_) : A(std::move(a)), b(std::move(b_)), c(c_) {
    if (A.rows() != A.cols() || A.rows() != b.size()) throw DomainError("quadratic form dimension mismatch");
    const double scale = std::max(1.0, A.norm());
    if ((A - A.transpose()).norm() > 1e-12 * scale) throw DomainError("quadratic form matrix is not symmetric");
    A = 0.5 * (A + A.transpose()).eval();
  }

  double operator()(const Eigen::VectorXd& theta) const {
    return theta.dot(A * theta) + 2.0 * b.dot(theta) + c;
  }
};

/// [X X^T]^{-1} X Y.
inline Eigen::VectorXd ls_estimate(const RegressionDataset& ds) {
  return ds.gram().solve(ds.regressors() * ds.outputs());
}

/// Z = g^T S g with g = -(2/n) X W (Y - X^T theta), W = diag(sign_row) and
/// S = I or ([X X^T]/n)^{-1}. Cost normalized by 1/n.
inline double sps_sign_z(const RegressionDataset& ds, const Eigen::VectorXd& theta, std::span<const int> sign_row,
                         Weighting weighting) {
  if (sign_row.size() != ds.n()) throw DomainError("sign row length does not match sample count");
  const Eigen::VectorXd e = ds.residual(theta);
  Eigen::VectorXd we(e.size());
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    const int s = sign_row[static_cast<std::size_t>(k)];
    if (s != 1 && s != -1) throw DomainError("sign row entries must be +1 or -1");
    we(k) = s * e(k);
  }
  const double n = static_cast<double>(ds.n());
  const Eigen::VectorXd g = -(2.0 / n) * (ds.regressors() * we);
  if (weighting == Weighting::Identity) return g.squaredNorm();
  // ([XX^T]/n)^{-1} = n [XX^T]^{-1}
  return std::max(0.0, n * g.dot(ds.gram().solve(g).col(0)));
}

/// Least squares estimate of the dataset whose noise is permuted by `perm`:
/// theta + [X X^T]^{-1} X P (Y - X^T theta).
inline Eigen::VectorXd perturbed_ls_estimate(const RegressionDataset& ds, const Eigen::VectorXd& theta,
                                             const Permutation& perm) {
  const Eigen::VectorXd pr = apply_permutation(perm, ds.residual(theta));
  return theta + ds.gram().solve(ds.regressors() * pr).col(0);
}

/// Z = r^T P^T X^T [X X^T]^{-1} X P r with r = Y - X^T theta.
inline double perm_z(const RegressionDataset& ds, const Eigen::VectorXd& theta, const Permutation& perm) {
  if (perm.size() != ds.n()) throw DomainError("permutation length does not match sample count");
  const Eigen::VectorXd v = ds.regressors() * apply_permutation(perm, ds.residual(theta));
  return std::max(0.0, v.dot(ds.gram().solve(v).col(0)));
}

namespace detail {

/// X P X^T, where (P X^T) has row i equal to column perm[i] of X.
inline Eigen::MatrixXd permuted_cross_gram(const RegressionDataset& ds, const Permutation& perm) {
  if (perm.size() != ds.n()) throw DomainError("permutation length does not match sample count");
  if (!is_permutation_of_range(perm)) throw DomainError("not a permutation of 1..n");
  const auto& X = ds.regressors();
  Eigen::MatrixXd px(X.rows(), X.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    px.col(static_cast<Eigen::Index>(i)) = X.col(static_cast<Eigen::Index>(perm[i]));
  }
  return X * px.transpose();
}

}  // namespace detail

/// Q = X X^T - X P^T X^T [X X^T]^{-1} X P X^T (positive semidefinite).
inline Eigen::MatrixXd excitation_matrix(const RegressionDataset& ds, const Permutation& perm) {
  const Eigen::MatrixXd M = detail::permuted_cross_gram(ds, perm);
  const Eigen::MatrixXd q = ds.gram().matrix() - M.transpose() * ds.gram().solve(M);
  return 0.5 * (q + q.transpose());
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

inline double max_abs_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

/// Q > 0 judged as lambda_min(Q) > tol * max(1, ||Q||).
inline bool is_sufficiently_exciting(const RegressionDataset& ds, const Permutation& perm, double tol = 1e-8) {
  const Eigen::MatrixXd q = excitation_matrix(ds, perm);
  return min_eigenvalue(q) > tol * std::max(1.0, q.norm());
}

/// Form f with {theta : Z_1(theta) <= Z_i(theta)} = {theta : f(theta) <= 0}
/// and f = Z_1 - Z_i; its quadratic part is the excitation matrix of perm_i.
inline QuadraticForm half_set_form(const RegressionDataset& ds, const Permutation& perm_i) {
  const Eigen::MatrixXd M = detail::permuted_cross_gram(ds, perm_i);
  const Eigen::VectorXd a1 = ds.regressors() * ds.outputs();
  const Eigen::VectorXd ai = ds.regressors() * apply_permutation(perm_i, ds.outputs());
  const Eigen::VectorXd ginv_a1 = ds.gram().solve(a1).col(0);
  const Eigen::VectorXd ginv_ai = ds.gram().solve(ai).col(0);

  // Z_i(theta) = (a_i - M theta)^T G^{-1} (a_i - M theta); Z_1 has M = G.
  Eigen::VectorXd b = M.transpose() * ginv_ai - a1;
  const double c = a1.dot(ginv_a1) - ai.dot(ginv_ai);
  return QuadraticForm(excitation_matrix(ds, perm_i), std::move(b), c);
}

/// One hypothesis test of theta against a frozen setup.
inline TestVerdict test_membership(const RegressionDataset& ds, const Eigen::VectorXd& theta,
                                   const PerturbationSetup& setup, const RankRule& rule,
                                   Weighting weighting = Weighting::Identity) {
  if (setup.n != ds.n()) throw DomainError("setup n does not match dataset sample count");
  if (rule.m() != setup.m) throw DomainError("rank rule m does not match setup m");
  PerformanceVector z(setup.m);
  if (setup.method == Method::SignFlip) {
    for (std::size_t i = 0; i < setup.m; ++i) z[i] = sps_sign_z(ds, theta, setup.sign_matrix[i], weighting);
  } else {
    for (std::size_t i = 0; i < setup.m; ++i) z[i] = perm_z(ds, theta, setup.permutations[i]);
  }
  return verdict_from(std::move(z), setup.tie_perm, rule);
}

}  // namespace fsr

#endif  // FSR_LINREG_HPP
