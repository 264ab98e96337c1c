#ifndef FSR_OE_MODEL_HPP
#define FSR_OE_MODEL_HPP

/** @file
 * First-order output-error model
 *
 *     y_t = theta1 q^{-1} / (1 + theta2 q^{-1}) u_t + n_t
 *
 * Time convention: inputs u_0..u_{n-1} drive outputs y_1..y_n from the
 * zero initial state x_0 = 0, i.e. x_t = -theta2 x_{t-1} + theta1 u_{t-1}.
 * Vectors store y_1..y_n at indices 0..n-1, so outputs(k) pairs with
 * inputs(k).
 */

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "fsr/core_types.hpp"
#include "fsr/linreg.hpp"
#include "fsr/perturbation.hpp"

namespace fsr {

struct OeTheta {
  double numerator = 0.0;    // theta1, gain of the delayed input
  double denominator = 0.0;  // theta2, feedback coefficient

  Eigen::Vector2d vec() const { return {numerator, denominator}; }
  static OeTheta from(const Eigen::Vector2d& v) { return {v(0), v(1)}; }
  bool operator==(const OeTheta&) const = default;
};

/// Row t holds (dx_t/dtheta1, dx_t/dtheta2).
using SensitivityMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

inline Eigen::VectorXd simulate(const OeTheta& theta, const Eigen::VectorXd& u) {
  Eigen::VectorXd x(u.size());
  double prev = 0.0;
  for (Eigen::Index t = 0; t < u.size(); ++t) {
    prev = -theta.denominator * prev + theta.numerator * u(t);
    x(t) = prev;
  }
  return x;
}

/// The noise realization implied by theta: y - simulate(theta, u).
inline Eigen::VectorXd invert_noise(const OeTheta& theta, const IoDataset& ds) {
  return ds.outputs() - simulate(theta, ds.inputs());
}

inline SensitivityMatrix sensitivity(const OeTheta& theta, const Eigen::VectorXd& u) {
  SensitivityMatrix psi(u.size(), 2);
  double x = 0.0, d1 = 0.0, d2 = 0.0;
  for (Eigen::Index t = 0; t < u.size(); ++t) {
    d1 = -theta.denominator * d1 + u(t);
    d2 = -theta.denominator * d2 - x;
    x = -theta.denominator * x + theta.numerator * u(t);
    psi(t, 0) = d1;
    psi(t, 1) = d2;
  }
  return psi;
}

/// J(theta) = (1/n) ||y - simulate(theta, u)||^2.
inline double oe_cost(const OeTheta& theta, const IoDataset& ds) {
  return invert_noise(theta, ds).squaredNorm() / static_cast<double>(ds.n());
}

inline Eigen::Vector2d oe_cost_gradient(const OeTheta& theta, const IoDataset& ds) {
  const Eigen::VectorXd e = invert_noise(theta, ds);
  return -(2.0 / static_cast<double>(ds.n())) * (sensitivity(theta, ds.inputs()).transpose() * e);
}

/// Exact Hessian of J from second-order sensitivities.
///
/// d2x/dtheta1^2 vanishes; the mixed and theta2 terms obey
///   s12_t = -theta2 s12_{t-1} - s1_{t-1}
///   s22_t = -theta2 s22_{t-1} - 2 s2_{t-1}
inline Eigen::Matrix2d oe_cost_hessian(const OeTheta& theta, const IoDataset& ds) {
  const auto& u = ds.inputs();
  const double a = theta.denominator;
  double x = 0.0, s1 = 0.0, s2 = 0.0, s12 = 0.0, s22 = 0.0;
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (Eigen::Index t = 0; t < u.size(); ++t) {
    const double n12 = -a * s12 - s1;
    const double n22 = -a * s22 - 2.0 * s2;
    const double n1 = -a * s1 + u(t);
    const double n2 = -a * s2 - x;
    x = -a * x + theta.numerator * u(t);
    s1 = n1;
    s2 = n2;
    s12 = n12;
    s22 = n22;
    const double e = ds.outputs()(t) - x;
    h(0, 0) += s1 * s1;
    h(0, 1) += s1 * s2 - e * s12;
    h(1, 1) += s2 * s2 - e * s22;
  }
  h(1, 0) = h(0, 1);
  return (2.0 / static_cast<double>(ds.n())) * h;
}

/// Z = g^T S g with g = -(2/n) psi^T (sign_row .* e) and S = I or
/// (psi^T psi / n)^{-1}.
inline double sps_z_oe(const OeTheta& theta, const IoDataset& ds, std::span<const int> sign_row,
                       Weighting weighting) {
  if (sign_row.size() != ds.n()) throw DomainError("sign row length does not match sample count");
  const Eigen::VectorXd e = invert_noise(theta, ds);
  const SensitivityMatrix psi = sensitivity(theta, ds.inputs());
  Eigen::VectorXd we(e.size());
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    const int s = sign_row[static_cast<std::size_t>(k)];
    if (s != 1 && s != -1) throw DomainError("sign row entries must be +1 or -1");
    we(k) = s * e(k);
  }
  const double n = static_cast<double>(ds.n());
  const Eigen::Vector2d g = -(2.0 / n) * (psi.transpose() * we);
  if (weighting == Weighting::Identity) return g.squaredNorm();
  const GramFactor info(psi.transpose() * psi / n);
  return std::max(0.0, g.dot(info.solve(g).col(0)));
}

/// SPS test of an OE parameter. Only sign-flip setups apply.
inline TestVerdict test_membership_oe(const IoDataset& ds, const OeTheta& theta, const PerturbationSetup& setup,
                                      const RankRule& rule, Weighting weighting = Weighting::Identity) {
  if (setup.method != Method::SignFlip) throw DomainError("output-error membership test needs a sign_flip setup");
  if (setup.n != ds.n()) throw DomainError("setup n does not match dataset sample count");
  if (rule.m() != setup.m) throw DomainError("rank rule m does not match setup m");

  // Shared pieces of every Z_i.
  const Eigen::VectorXd e = invert_noise(theta, ds);
  const SensitivityMatrix psi = sensitivity(theta, ds.inputs());
  const double n = static_cast<double>(ds.n());
  PerformanceVector z(setup.m);
  std::optional<GramFactor> info;
  if (weighting == Weighting::CovarianceEstimate) info.emplace(psi.transpose() * psi / n);
  for (std::size_t i = 0; i < setup.m; ++i) {
    Eigen::VectorXd we(e.size());
    for (Eigen::Index k = 0; k < e.size(); ++k) we(k) = setup.sign_matrix[i][static_cast<std::size_t>(k)] * e(k);
    const Eigen::Vector2d g = -(2.0 / n) * (psi.transpose() * we);
    z[i] = info ? std::max(0.0, g.dot(info->solve(g).col(0))) : g.squaredNorm();
  }
  return verdict_from(std::move(z), setup.tie_perm, rule);
}

struct Box2 {
  Eigen::Vector2d lower;
  Eigen::Vector2d upper;
};

struct PemOptions {
  std::size_t starts_per_dim = 5;  // >= 5 gives the required 25 starts
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-9;
};

struct PemResult {
  OeTheta theta;
  double cost = 0.0;
  double gradient_norm = 0.0;
  std::size_t converged_starts = 0;
};

namespace detail {

struct LocalRun {
  Eigen::Vector2d theta;
  double cost;
  double grad_norm;
  bool converged;
};

/// Gauss-Newton with backtracking from one start.
inline LocalRun gauss_newton(const IoDataset& ds, Eigen::Vector2d theta, const PemOptions& opt) {
  const double n = static_cast<double>(ds.n());
  double cost = oe_cost(OeTheta::from(theta), ds);
  for (std::size_t it = 0; it < opt.max_iterations && std::isfinite(cost); ++it) {
    const OeTheta th = OeTheta::from(theta);
    const Eigen::VectorXd e = invert_noise(th, ds);
    const SensitivityMatrix psi = sensitivity(th, ds.inputs());
    const Eigen::Vector2d grad = -(2.0 / n) * (psi.transpose() * e);
    if (grad.norm() < opt.gradient_tolerance) return {theta, cost, grad.norm(), true};

    Eigen::Matrix2d h = psi.transpose() * psi;
    h.diagonal().array() += 1e-12 * std::max(1.0, h.trace());
    const Eigen::Vector2d step = h.ldlt().solve(psi.transpose() * e);

    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Eigen::Vector2d cand = theta + t * step;
      const double c = oe_cost(OeTheta::from(cand), ds);
      if (std::isfinite(c) && c <= cost + 1e-4 * t * grad.dot(step)) {
        moved = cand != theta;
        theta = cand;
        cost = c;
        break;
      }
    }
    if (!moved) break;
  }
  const double g = oe_cost_gradient(OeTheta::from(theta), ds).norm();
  return {theta, cost, g, g < opt.gradient_tolerance};
}

}  // namespace detail

/// Best local minimizer of J over a grid of starts in `init_box`.
inline PemResult pem_estimate(const IoDataset& ds, const Box2& init_box, const PemOptions& opt = {}) {
  if (opt.starts_per_dim < 2) throw DomainError("pem_estimate needs at least 2 starts per dimension");
  const auto k = static_cast<double>(opt.starts_per_dim - 1);
  PemResult best;
  best.cost = std::numeric_limits<double>::infinity();
  detail::LocalRun best_any{init_box.lower, std::numeric_limits<double>::infinity(), 0.0, false};
  for (std::size_t i = 0; i < opt.starts_per_dim; ++i) {
    for (std::size_t j = 0; j < opt.starts_per_dim; ++j) {
      const Eigen::Vector2d start(
          init_box.lower(0) + (init_box.upper(0) - init_box.lower(0)) * static_cast<double>(i) / k,
          init_box.lower(1) + (init_box.upper(1) - init_box.lower(1)) * static_cast<double>(j) / k);
      const auto run = detail::gauss_newton(ds, start, opt);
      if (run.cost < best_any.cost) best_any = run;
      if (!run.converged) continue;
      ++best.converged_starts;
      if (run.cost < best.cost) {
        best.theta = OeTheta::from(run.theta);
        best.cost = run.cost;
        best.gradient_norm = run.grad_norm;
      }
    }
  }
  if (best.converged_starts == 0) {
    throw OptimizationError("no Gauss-Newton start converged", {best_any.theta(0), best_any.theta(1)},
                            best_any.cost);
  }
  return best;
}

/// Unit step starting at t = 0.
inline Eigen::VectorXd step_input(std::size_t n) { return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)); }

/// The seven-sample step-response example with a disconnected SPS region.
struct OeFixture {
  IoDataset data;
  PerturbationSetup setup;
  RankRule rule;
  OeTheta nominal;
  Eigen::VectorXd noise;
};

inline OeFixture counterexample_fixture() {
  constexpr std::size_t n = 7;
  const OeTheta nominal{0.9, -0.1};
  Eigen::VectorXd noise(n);
  noise << -2.1, -0.8, -0.3, -0.4, 1.0, 0.7, 1.5;
  noise *= 1e-2;
  const Eigen::VectorXd u = step_input(n);

  PerturbationSetup setup;
  setup.method = Method::SignFlip;
  setup.m = 2;
  setup.n = n;
  setup.seed = 0;
  setup.rng = "fixed";
  setup.sign_matrix = {std::vector<int>(n, 1), {1, -1, 1, -1, 1, 1, -1}};
  setup.tie_perm = {0, 1};

  return OeFixture{IoDataset(u, simulate(nominal, u) + noise), std::move(setup), RankRule(1, 2), nominal, noise};
}

}  // namespace fsr

#endif  // FSR_OE_MODEL_HPP
