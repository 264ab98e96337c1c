#ifndef FSR_COVERAGE_HPP
#define FSR_COVERAGE_HPP

// Monte-Carlo coverage of the perturbed-dataset tests at the true parameter,
// and of the Gaussian (chi-square) confidence ellipsoid for comparison.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "fsr/core_types.hpp"
#include "fsr/linreg.hpp"
#include "fsr/oe_model.hpp"
#include "fsr/perturbation.hpp"
#include "fsr/serialization.hpp"

namespace fsr {

enum class Problem { LinRegSign, LinRegPerm, OeSign };

inline const char* to_string(Problem p) {
  switch (p) {
    case Problem::LinRegSign: return "linreg-sign";
    case Problem::LinRegPerm: return "linreg-perm";
    case Problem::OeSign: return "oe-sign";
  }
  return "?";
}

inline Problem parse_problem(const std::string& s) {
  if (s == "linreg-sign") return Problem::LinRegSign;
  if (s == "linreg-perm") return Problem::LinRegPerm;
  if (s == "oe-sign") return Problem::OeSign;
  throw DomainError("unknown problem '" + s + "' (linreg-sign, linreg-perm, oe-sign)");
}

enum class NoiseFamily { Gaussian, Laplace, ShiftedExponential, StudentT3 };

/// Noise law. `scale` is the standard deviation (gaussian), the Laplace
/// scale b, or the multiplier of a standard t_3 draw. Shifted exponential
/// is Exp(rate) - shift; shift defaults to the mean 1/rate.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Gaussian;
  double scale = 1.0;
  double rate = 1.0;
  double shift = std::numeric_limits<double>::quiet_NaN();

  double effective_shift() const { return std::isnan(shift) ? 1.0 / rate : shift; }
  bool symmetric() const { return family != NoiseFamily::ShiftedExponential; }

  static NoiseSpec gaussian(double sigma) { return {NoiseFamily::Gaussian, sigma}; }
  static NoiseSpec laplace(double b) { return {NoiseFamily::Laplace, b}; }
  static NoiseSpec student_t3(double scale) { return {NoiseFamily::StudentT3, scale}; }
  static NoiseSpec shifted_exponential(double rate, double shift = std::numeric_limits<double>::quiet_NaN()) {
    return {NoiseFamily::ShiftedExponential, 1.0, rate, shift};
  }
};

inline std::string to_string(const NoiseSpec& s) {
  std::ostringstream os;
  switch (s.family) {
    case NoiseFamily::Gaussian: os << "gaussian:" << s.scale; break;
    case NoiseFamily::Laplace: os << "laplace:" << s.scale; break;
    case NoiseFamily::StudentT3: os << "student_t3:" << s.scale; break;
    case NoiseFamily::ShiftedExponential: os << "shifted_exponential:" << s.rate << ":" << s.effective_shift(); break;
  }
  return os.str();
}

/// Parses `family[:p1[:p2]]`, e.g. `laplace:1`, `shifted_exponential:2:0`.
inline NoiseSpec parse_noise(const std::string& text) {
  const auto parts = detail::split(text, ':');
  const std::string family(parts[0]);
  auto param = [&](std::size_t k, double fallback) {
    return parts.size() > k ? detail::parse_double(parts[k], "noise") : fallback;
  };
  if (parts.size() > 3) throw DomainError("too many noise parameters in '" + text + "'");
  NoiseSpec s;
  if (family == "gaussian") {
    s = NoiseSpec::gaussian(param(1, 1.0));
  } else if (family == "laplace") {
    s = NoiseSpec::laplace(param(1, 1.0));
  } else if (family == "student_t3") {
    s = NoiseSpec::student_t3(param(1, 1.0));
  } else if (family == "shifted_exponential") {
    s = NoiseSpec::shifted_exponential(param(1, 1.0), param(2, std::numeric_limits<double>::quiet_NaN()));
  } else {
    throw DomainError("unknown noise family '" + family + "' (gaussian, laplace, shifted_exponential, student_t3)");
  }
  if (family != "shifted_exponential" && parts.size() > 2) throw DomainError("too many noise parameters");
  if (!(s.scale >= 0.0) || !(s.rate > 0.0)) throw DomainError("noise parameters out of range in '" + text + "'");
  return s;
}

inline Eigen::VectorXd sample_noise(const NoiseSpec& s, std::mt19937_64& rng, std::size_t n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  switch (s.family) {
    case NoiseFamily::Gaussian: {
      std::normal_distribution<double> d(0.0, 1.0);
      for (auto& x : v) x = s.scale * d(rng);
      break;
    }
    case NoiseFamily::Laplace: {
      std::exponential_distribution<double> d(1.0);
      for (auto& x : v) {
        const double a = d(rng);
        x = s.scale * (a - d(rng));
      }
      break;
    }
    case NoiseFamily::StudentT3: {
      std::student_t_distribution<double> d(3.0);
      for (auto& x : v) x = s.scale * d(rng);
      break;
    }
    case NoiseFamily::ShiftedExponential: {
      std::exponential_distribution<double> d(s.rate);
      const double shift = s.effective_shift();
      for (auto& x : v) x = d(rng) - shift;
      break;
    }
  }
  return v;
}

struct CoverageReport {
  std::size_t trials = 0;
  std::size_t accepted = 0;
  double empirical = 0.0;
  double nominal = 0.0;
  double std_err = 0.0;
  double z_score = 0.0;
  std::vector<std::uint8_t> per_trial;  // filled when requested

  static CoverageReport from_counts(std::size_t trials, std::size_t accepted, double nominal) {
    CoverageReport r;
    r.trials = trials;
    r.accepted = accepted;
    r.empirical = static_cast<double>(accepted) / static_cast<double>(trials);
    r.nominal = nominal;
    r.std_err = std::sqrt(nominal * (1.0 - nominal) / static_cast<double>(trials));
    r.z_score = r.std_err > 0.0 ? (r.empirical - nominal) / r.std_err
                                : (r.empirical == nominal ? 0.0 : std::numeric_limits<double>::infinity());
    return r;
  }

  bool within_sigmas(double k) const { return std::abs(empirical - nominal) <= k * std_err; }
};

inline nlohmann::json to_json(const CoverageReport& r) {
  return {{"schema_version", kSchemaVersion}, {"trials", r.trials},   {"accepted", r.accepted},
          {"empirical", r.empirical},         {"nominal", r.nominal}, {"std_err", r.std_err},
          {"z_score", r.z_score}};
}

/// Aligned two-column table of the report.
inline std::string to_table(const CoverageReport& r, const std::string& title = "coverage") {
  std::ostringstream os;
  os << title << "\n";
  auto row = [&](const char* k, const std::string& v) { os << "  " << std::left << std::setw(10) << k << std::right << std::setw(14) << v << "\n"; };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(5) << v;
    return s.str();
  };
  row("trials", std::to_string(r.trials));
  row("accepted", std::to_string(r.accepted));
  row("empirical", num(r.empirical));
  row("nominal", num(r.nominal));
  row("std_err", num(r.std_err));
  row("z_score", num(r.z_score));
  return os.str();
}

struct CoverageConfig {
  Problem problem = Problem::LinRegSign;
  NoiseSpec noise;
  std::size_t n = 10;
  std::size_t m = 8;
  std::size_t q = 1;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  double noise_scale = 1.0;  // multiplies every noise draw
  Weighting weighting = Weighting::Identity;
  std::size_t jobs = 1;
  bool keep_trials = false;
};

namespace detail {

/// Independent stream per (seed, stream index).
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

inline constexpr std::uint64_t kDesignStream = ~std::uint64_t{0};

/// Fixed regressors for linear-regression studies: an intercept row and
/// one standard normal row.
inline Eigen::MatrixXd regression_design(std::uint64_t seed, std::size_t n) {
  auto rng = stream(seed, kDesignStream);
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::MatrixXd x(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    x(0, t) = 1.0;
    x(1, t) = d(rng);
  }
  return x;
}

inline Eigen::VectorXd binary_input(std::uint64_t seed, std::size_t n) {
  auto rng = stream(seed, kDesignStream);
  Eigen::VectorXd u(static_cast<Eigen::Index>(n));
  for (auto& v : u) v = (rng() >> 63) ? 1.0 : -1.0;
  return u;
}

template <typename Trial>
std::vector<std::uint8_t> run_trials(std::size_t trials, std::size_t jobs, const Trial& trial) {
  std::vector<std::uint8_t> out(trials, 0);
  jobs = std::max<std::size_t>(1, std::min(jobs, trials));
  auto work = [&](std::size_t w) {
    for (std::size_t t = w; t < trials; t += jobs) out[t] = trial(t) ? 1 : 0;
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace detail

inline const Eigen::Vector2d kRegressionTheta{1.0, -0.5};
inline const OeTheta kOeTheta{0.9, -0.1};

/// Fraction of trials in which the test accepts the true parameter. Each
/// trial draws fresh noise and a fresh setup. Method/noise compatibility is
/// not enforced.
inline CoverageReport empirical_coverage(const CoverageConfig& cfg) {
  if (cfg.trials < 1000) throw DomainError("coverage study needs trials >= 1000");
  if (cfg.n < 2) throw DomainError("coverage study needs n >= 2");
  const RankRule rule(cfg.q, cfg.m);
  if (!(cfg.noise_scale >= 0.0)) throw DomainError("noise scale must be non-negative");

  const Eigen::MatrixXd x = detail::regression_design(cfg.seed, cfg.n);
  const Eigen::VectorXd u = detail::binary_input(cfg.seed, cfg.n);
  const Eigen::VectorXd x_clean = cfg.problem == Problem::OeSign ? simulate(kOeTheta, u) : Eigen::VectorXd();
  const Method method = cfg.problem == Problem::LinRegPerm ? Method::Permute : Method::SignFlip;

  auto trial = [&](std::size_t t) {
    auto rng = detail::stream(cfg.seed, t);
    const Eigen::VectorXd noise = cfg.noise_scale * sample_noise(cfg.noise, rng, cfg.n);
    const PerturbationSetup setup = gen_setup(method, cfg.m, cfg.n, rng());
    if (cfg.problem == Problem::OeSign) {
      const IoDataset ds(u, x_clean + noise);
      return test_membership_oe(ds, kOeTheta, setup, rule, cfg.weighting).accepted;
    }
    const RegressionDataset ds(x, x.transpose() * kRegressionTheta + noise);
    return test_membership(ds, kRegressionTheta, setup, rule, cfg.weighting).accepted;
  };
  auto per_trial = detail::run_trials(cfg.trials, cfg.jobs, trial);
  std::size_t accepted = 0;
  for (auto a : per_trial) accepted += a;
  auto report = CoverageReport::from_counts(cfg.trials, accepted, rule.confidence());
  if (cfg.keep_trials) report.per_trial = std::move(per_trial);
  return report;
}

/// Chi-square quantile with two degrees of freedom; +inf at level 1.
inline double chi_square2_quantile(double level) {
  if (!(level > 0.0 && level <= 1.0)) throw DomainError("level must lie in (0, 1]");
  if (level == 1.0) return std::numeric_limits<double>::infinity();
  return -2.0 * std::log1p(-level);
}

struct EllipsoidConfig {
  NoiseSpec noise;
  std::size_t n = 100;
  double level = 0.875;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Coverage of {theta : (th_LS - theta)^T X X^T (th_LS - theta) / s^2 <= chi2_2(level)}
/// with s^2 = ||residual||^2 / (n - 2), on the same two-parameter regression.
inline CoverageReport asymptotic_ellipsoid_coverage(const EllipsoidConfig& cfg) {
  constexpr std::size_t n_theta = 2;
  if (cfg.n <= n_theta) throw DomainError("ellipsoid coverage needs n > n_theta");
  if (cfg.trials < 1000) throw DomainError("coverage study needs trials >= 1000");
  const double radius = chi_square2_quantile(cfg.level);
  const Eigen::MatrixXd x = detail::regression_design(cfg.seed, cfg.n);

  auto trial = [&](std::size_t t) {
    if (std::isinf(radius)) return true;
    auto rng = detail::stream(cfg.seed, t);
    const RegressionDataset ds(x, x.transpose() * kRegressionTheta + sample_noise(cfg.noise, rng, cfg.n));
    const Eigen::VectorXd est = ls_estimate(ds);
    const double s2 = ds.residual(est).squaredNorm() / static_cast<double>(cfg.n - n_theta);
    const Eigen::VectorXd d = est - kRegressionTheta;
    return d.dot(ds.gram().matrix() * d) <= radius * s2;
  };
  const auto per_trial = detail::run_trials(cfg.trials, cfg.jobs, trial);
  std::size_t accepted = 0;
  for (auto a : per_trial) accepted += a;
  return CoverageReport::from_counts(cfg.trials, accepted, cfg.level);
}

}  // namespace fsr

#endif  // FSR_COVERAGE_HPP
