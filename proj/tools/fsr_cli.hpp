#ifndef FSR_TOOLS_FSR_CLI_HPP
#define FSR_TOOLS_FSR_CLI_HPP

// Command-line front end: gen, test, scan, coverage, repro-oe, excitation.
//
// Exit codes: 0 success / accept, 1 reject / failed assertion, 2 usage or
// runtime error.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsr/fsr.hpp"

namespace fsr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitReject = 1;
inline constexpr int kExitError = 2;

/// JSON config files for CLI11: {"scan": {"q": 2, "box": [0, 2, -1, 1]}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return resolved(app, default_also).dump(1);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> out;
    collect(j, "", {}, out);
    return out;
  }

  /// Numbers and booleans are emitted typed, everything else as text.
  static nlohmann::json typed(const std::string& s) {
    if (s == "true" || s == "false") return s == "true";
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i); ec == std::errc{} && p == s.data() + s.size()) {
      return i;
    }
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d); ec == std::errc{} && p == s.data() + s.size()) {
      return d;
    }
    return s;
  }

  static nlohmann::json typed(const std::vector<std::string>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : v) a.push_back(typed(s));
    return a;
  }

  /// Option values of `app` (and its selected subcommands) as JSON.
  static nlohmann::json resolved(const CLI::App* app, bool default_also = true) {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (name == "help" || name == "config") continue;
      if (opt->get_type_size() != 0) {
        const auto& r = opt->results();
        if (!r.empty()) {
          j[name] = r.size() == 1 && opt->get_expected_max() <= 1 ? typed(r[0]) : typed(r);
        } else if (default_also && !opt->get_default_str().empty()) {
          j[name] = typed(opt->get_default_str());
        }
      } else if (opt->count() > 0) {
        j[name] = true;
      } else if (default_also) {
        j[name] = false;
      }
    }
    for (const CLI::App* sub : app->get_subcommands()) j[sub->get_name()] = resolved(sub, default_also);
    return j;
  }

 private:
  static void collect(const nlohmann::json& j, const std::string& name, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& out) {
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) collect(*it, it.key(), parents, out);
      return;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = std::move(parents);
    auto scalar = [](const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (v.is_number()) return v.dump();
      throw CLI::ConversionError("unsupported JSON value in config: " + v.dump());
    };
    if (j.is_array()) {
      for (const auto& v : j) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(j));
    }
    out.push_back(std::move(item));
  }
};

namespace detail {

inline Weighting parse_weighting(const std::string& s) {
  if (s == "identity") return Weighting::Identity;
  if (s == "covariance") return Weighting::CovarianceEstimate;
  throw DomainError("weighting must be 'identity' or 'covariance'");
}

inline Method parse_method(const std::string& s) {
  if (s == "sign" || s == "sign_flip") return Method::SignFlip;
  if (s == "permute") return Method::Permute;
  throw DomainError("method must be 'sign' or 'permute'");
}

inline Connectivity parse_connectivity(int c) {
  if (c == 4) return Connectivity::Orthogonal;
  if (c == 8) return Connectivity::Full;
  throw DomainError("connectivity must be 4 or 8");
}

inline nlohmann::json verdict_json(const TestVerdict& v, const RankRule& rule) {
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"accepted", v.accepted},
                   {"rank_of_one", v.rank_of_one},
                   {"z_values", v.z_values},
                   {"confidence", rule.confidence()},
                   {"m", rule.m()},
                   {"q", rule.q()}};
  if (v.diagnostic) j["diagnostic"] = *v.diagnostic;
  return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  fsr::detail::write_file(path, j.dump(1) + "\n");
}

/// Setup source shared by test/scan/excitation.
struct SetupArgs {
  std::string setup_path;
  std::string method = "sign";
  std::size_t m = 2;
  std::optional<std::uint64_t> seed;
  std::string save_setup;

  void add_to(CLI::App* app) {
    app->add_option("--setup", setup_path, "perturbation setup JSON file");
    app->add_option("--method", method, "sign | permute (when no --setup)")->capture_default_str();
    app->add_option("--m", m, "number of datasets (when no --setup)")->capture_default_str();
    app->add_option("--seed", seed, "seed for a fresh setup (when no --setup)")->envname("FSR_SEED");
    app->add_option("--save-setup", save_setup, "write the setup used to this file");
  }

  PerturbationSetup resolve(std::size_t n) const {
    PerturbationSetup s;
    if (!setup_path.empty()) {
      s = load_setup(setup_path);
    } else {
      if (!seed) throw DomainError("--seed (or FSR_SEED) is required when no --setup file is given");
      s = gen_setup(parse_method(method), m, n, *seed);
    }
    const auto report = validate_setup(s);
    if (!report.ok()) {
      std::string msg = "invalid setup:";
      for (const auto& e : report.errors) msg += " " + e + ";";
      throw DomainError(msg);
    }
    if (s.n != n) {
      throw DomainError("setup has n=" + std::to_string(s.n) + " but dataset has " + std::to_string(n) + " samples");
    }
    if (!save_setup.empty()) save_setup_file(s);
    return s;
  }

  void save_setup_file(const PerturbationSetup& s) const { fsr::save_setup(s, save_setup); }
};

inline Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline GridSpec grid_from(const std::vector<double>& box, const std::vector<std::size_t>& resolution) {
  if (box.size() % 2 != 0 || box.empty()) throw DomainError("--box needs lo1,hi1[,lo2,hi2,...]");
  GridSpec g;
  for (std::size_t k = 0; k < box.size(); k += 2) {
    g.lower.push_back(box[k]);
    g.upper.push_back(box[k + 1]);
  }
  if (resolution.size() == 1) {
    g.resolution.assign(g.lower.size(), resolution[0]);
  } else {
    g.resolution = resolution;
  }
  g.validate();
  return g;
}

}  // namespace detail

/// Runs the CLI with the given arguments. Output goes to `out`, errors to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Finite-sample perturbed-dataset hypothesis tests and confidence-region scans", "fsr"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option overrides, nested per command");
  app.require_subcommand(1);

  // gen ----------------------------------------------------------------------
  struct {
    std::string model;
    std::vector<double> theta;
    std::size_t n = 0;
    std::string noise = "none";
    std::vector<double> noise_values;
    std::string input = "step";
    std::optional<std::uint64_t> seed;
    std::string out;
  } gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a dataset CSV and a JSON sidecar");
  gen_cmd->add_option("model", gen.model, "linreg | oe")->required()->check(CLI::IsMember({"linreg", "oe"}));
  gen_cmd->add_option("--theta", gen.theta, "true parameter, comma separated")->required()->delimiter(',');
  gen_cmd->add_option("--n", gen.n, "sample count")->required();
  gen_cmd->add_option("--noise", gen.noise, "none | gaussian:s | laplace:b | shifted_exponential:rate[:shift] | student_t3:s")
      ->capture_default_str();
  gen_cmd->add_option("--noise-values", gen.noise_values, "literal noise sequence, comma separated")->delimiter(',');
  gen_cmd->add_option("--input", gen.input, "oe input: step | binary")->capture_default_str()->check(
      CLI::IsMember({"step", "binary"}));
  gen_cmd->add_option("--seed", gen.seed, "random seed")->envname("FSR_SEED");
  gen_cmd->add_option("--out", gen.out, "output CSV path")->required();

  // test ---------------------------------------------------------------------
  struct {
    std::string data;
    std::vector<double> theta;
    std::size_t q = 1;
    std::string weighting = "identity";
    detail::SetupArgs setup;
  } test;
  auto* test_cmd = app.add_subcommand("test", "test one parameter; exit 0 accept, 1 reject");
  test_cmd->add_option("--data", test.data, "dataset CSV")->required();
  test_cmd->add_option("--theta", test.theta, "parameter to test, comma separated")->required()->delimiter(',');
  test_cmd->add_option("--q", test.q, "rank rule: reject if Z_1 is among the q largest")->capture_default_str();
  test_cmd->add_option("--weighting", test.weighting, "identity | covariance (sign method)")->capture_default_str();
  test.setup.add_to(test_cmd);

  // scan ---------------------------------------------------------------------
  struct {
    std::string data;
    std::size_t q = 1;
    std::string weighting = "identity";
    std::vector<double> box;
    std::vector<std::size_t> resolution{100};
    int connectivity = 4;
    std::size_t jobs = 1;
    std::string out;
    detail::SetupArgs setup;
  } scan_args;
  auto* scan_cmd = app.add_subcommand("scan", "grid-scan a box, label components, export CSV/JSON/SVG");
  scan_cmd->add_option("--data", scan_args.data, "dataset CSV")->required();
  scan_cmd->add_option("--q", scan_args.q, "rank rule q")->capture_default_str();
  scan_cmd->add_option("--weighting", scan_args.weighting, "identity | covariance")->capture_default_str();
  scan_cmd->add_option("--box", scan_args.box, "lo1,hi1,lo2,hi2,...")->required()->delimiter(',');
  scan_cmd->add_option("--resolution", scan_args.resolution, "cells per dimension (one value or one per dim)")
      ->delimiter(',')
      ->capture_default_str();
  scan_cmd->add_option("--connectivity", scan_args.connectivity, "4 or 8 (2-D naming)")->capture_default_str();
  scan_cmd->add_option("--jobs", scan_args.jobs, "worker threads")->capture_default_str();
  scan_cmd->add_option("--out", scan_args.out, "output prefix")->required();
  scan_args.setup.add_to(scan_cmd);

  // coverage -----------------------------------------------------------------
  struct {
    std::string problem = "linreg-sign";
    std::string noise = "gaussian:1";
    std::size_t n = 10;
    std::size_t m = 8;
    std::size_t q = 1;
    std::size_t trials = 10000;
    double level = 0.875;
    double scale = 1.0;
    std::string weighting = "identity";
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::string out;
  } cov;
  auto* cov_cmd = app.add_subcommand("coverage", "Monte-Carlo coverage study at the true parameter");
  cov_cmd->add_option("--problem", cov.problem, "linreg-sign | linreg-perm | oe-sign | ellipsoid")
      ->capture_default_str();
  cov_cmd->add_option("--noise", cov.noise, "noise law")->capture_default_str();
  cov_cmd->add_option("--n", cov.n, "sample count")->capture_default_str();
  cov_cmd->add_option("--m", cov.m, "number of datasets")->capture_default_str();
  cov_cmd->add_option("--q", cov.q, "rank rule q")->capture_default_str();
  cov_cmd->add_option("--trials", cov.trials, "Monte-Carlo trials (>= 1000)")->capture_default_str();
  cov_cmd->add_option("--level", cov.level, "ellipsoid confidence level")->capture_default_str();
  cov_cmd->add_option("--scale", cov.scale, "noise multiplier")->capture_default_str();
  cov_cmd->add_option("--weighting", cov.weighting, "identity | covariance")->capture_default_str();
  cov_cmd->add_option("--seed", cov.seed, "random seed")->envname("FSR_SEED");
  cov_cmd->add_option("--jobs", cov.jobs, "worker threads")->capture_default_str();
  cov_cmd->add_option("--out", cov.out, "output prefix for <prefix>.json and <prefix>.txt");

  // repro-oe -----------------------------------------------------------------
  struct {
    std::string out;
    std::size_t resolution = 400;
    std::string weighting = "covariance";
    int connectivity = 8;
    std::size_t jobs = 1;
    bool no_refine = false;
  } repro;
  auto* repro_cmd = app.add_subcommand("repro-oe", "reproduce the disconnected output-error confidence region");
  repro_cmd->add_option("--out", repro.out, "output directory")->required();
  repro_cmd->add_option("--resolution", repro.resolution, "cells per dimension")->capture_default_str();
  repro_cmd->add_option("--weighting", repro.weighting, "identity | covariance")->capture_default_str();
  repro_cmd->add_option("--connectivity", repro.connectivity, "4 or 8")->capture_default_str();
  repro_cmd->add_option("--jobs", repro.jobs, "worker threads")->capture_default_str();
  repro_cmd->add_flag("--no-refine", repro.no_refine, "skip the doubled-resolution check");

  // excitation ---------------------------------------------------------------
  struct {
    std::string data;
    double tol = 1e-8;
    detail::SetupArgs setup;
  } exc;
  auto* exc_cmd = app.add_subcommand("excitation", "minimum eigenvalue of Q for every permutation of a setup");
  exc_cmd->add_option("--data", exc.data, "linear regression CSV")->required();
  exc_cmd->add_option("--tol", exc.tol, "relative positivity tolerance")->capture_default_str();
  exc.setup.method = "permute";
  exc.setup.add_to(exc_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const nlohmann::json config = JsonConfig::resolved(chosen);

  try {
    if (*gen_cmd) {
      const bool literal = !gen.noise_values.empty();
      const bool random_noise = !literal && gen.noise != "none";
      const bool needs_seed = gen.model == "linreg" || random_noise || gen.input == "binary";
      if (needs_seed && !gen.seed) throw DomainError("--seed (or FSR_SEED) is required for this generator");
      const std::uint64_t seed = gen.seed.value_or(0);
      auto design_rng = fsr::detail::stream(seed, fsr::detail::kDesignStream);
      auto noise_rng = fsr::detail::stream(seed, 0);

      Eigen::VectorXd noise = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gen.n));
      if (literal) {
        if (gen.noise_values.size() != gen.n) throw DomainError("--noise-values must have exactly n entries");
        noise = detail::to_vector(gen.noise_values);
      } else if (random_noise) {
        noise = sample_noise(parse_noise(gen.noise), noise_rng, gen.n);
      }

      const Eigen::VectorXd theta = detail::to_vector(gen.theta);
      if (gen.model == "oe") {
        if (theta.size() != 2) throw DomainError("oe needs --theta theta1,theta2");
        Eigen::VectorXd u = step_input(gen.n);
        if (gen.input == "binary") {
          for (auto& v : u) v = (design_rng() >> 63) ? 1.0 : -1.0;
        }
        save_dataset(IoDataset(u, simulate(OeTheta::from(theta), u) + noise), gen.out);
      } else {
        Eigen::MatrixXd x(theta.size(), static_cast<Eigen::Index>(gen.n));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index t = 0; t < x.cols(); ++t) {
          x(0, t) = 1.0;
          for (Eigen::Index k = 1; k < x.rows(); ++k) x(k, t) = normal(design_rng);
        }
        save_dataset(RegressionDataset(x, x.transpose() * theta + noise), gen.out);
      }
      nlohmann::json meta{{"schema_version", kSchemaVersion}, {"command", "gen"},   {"model", gen.model},
                          {"theta", gen.theta},               {"n", gen.n},         {"noise", literal ? "literal" : gen.noise},
                          {"seed", gen.seed ? nlohmann::json(*gen.seed) : nlohmann::json(nullptr)},
                          {"config", config}};
      if (literal) meta["noise_values"] = gen.noise_values;
      detail::write_json(gen.out + ".json", meta);
      return kExitOk;
    }

    if (*test_cmd) {
      const Weighting w = detail::parse_weighting(test.weighting);
      const AnyDataset data = load_dataset(test.data);
      const std::size_t n = std::visit([](const auto& d) { return d.n(); }, data);
      const PerturbationSetup setup = test.setup.resolve(n);
      const RankRule rule(test.q, setup.m);
      const Eigen::VectorXd theta = detail::to_vector(test.theta);
      TestVerdict v;
      if (const auto* io = std::get_if<IoDataset>(&data)) {
        if (theta.size() != 2) throw DomainError("output-error data needs --theta theta1,theta2");
        v = test_membership_oe(*io, OeTheta::from(theta), setup, rule, w);
      } else {
        v = test_membership(std::get<RegressionDataset>(data), theta, setup, rule, w);
      }
      out << detail::verdict_json(v, rule).dump() << "\n";
      return v.accepted ? kExitOk : kExitReject;
    }

    if (*scan_cmd) {
      const Weighting w = detail::parse_weighting(scan_args.weighting);
      const Connectivity conn = detail::parse_connectivity(scan_args.connectivity);
      const GridSpec spec = detail::grid_from(scan_args.box, scan_args.resolution);
      const AnyDataset data = load_dataset(scan_args.data);
      const std::size_t n = std::visit([](const auto& d) { return d.n(); }, data);
      const PerturbationSetup setup = scan_args.setup.resolve(n);
      const RankRule rule(scan_args.q, setup.m);

      MembershipGrid grid;
      if (const auto* io = std::get_if<IoDataset>(&data)) {
        if (spec.dims() != 2) throw DomainError("output-error scans are 2-D");
        grid = fsr::scan([&](const Eigen::VectorXd& t) { return test_membership_oe(*io, OeTheta::from(t), setup, rule, w); },
                         spec, scan_args.jobs);
      } else {
        const auto& ds = std::get<RegressionDataset>(data);
        if (spec.dims() != ds.n_theta()) throw DomainError("box dimension does not match n_theta");
        grid = fsr::scan([&](const Eigen::VectorXd& t) { return test_membership(ds, t, setup, rule, w); }, spec,
                         scan_args.jobs);
      }
      const ComponentLabeling lab = label_components(grid, conn);
      const auto paths = export_grid(grid, lab, scan_args.out);
      if (spec.dims() == 2) fsr::detail::write_file(scan_args.out + ".svg", render_svg(grid, lab));
      detail::write_json(scan_args.out + "_config.json", {{"schema_version", kSchemaVersion}, {"command", "scan"}, {"config", config}});
      out << nlohmann::json{{"accepted_cells", grid.accepted_count()},
                            {"component_count", lab.component_count},
                            {"grid_csv", paths.grid_csv},
                            {"components_json", paths.components_json}}
                 .dump()
          << "\n";
      return kExitOk;
    }

    if (*cov_cmd) {
      if (!cov.seed) throw DomainError("--seed (or FSR_SEED) is required for coverage studies");
      const NoiseSpec noise = parse_noise(cov.noise);
      CoverageReport report;
      std::string title;
      if (cov.problem == "ellipsoid") {
        EllipsoidConfig c;
        c.noise = noise;
        c.n = cov.n;
        c.level = cov.level;
        c.trials = cov.trials;
        c.seed = *cov.seed;
        c.jobs = cov.jobs;
        report = asymptotic_ellipsoid_coverage(c);
        title = "ellipsoid coverage, noise " + to_string(noise) + ", n " + std::to_string(cov.n);
      } else {
        CoverageConfig c;
        c.problem = parse_problem(cov.problem);
        c.noise = noise;
        c.n = cov.n;
        c.m = cov.m;
        c.q = cov.q;
        c.trials = cov.trials;
        c.seed = *cov.seed;
        c.noise_scale = cov.scale;
        c.weighting = detail::parse_weighting(cov.weighting);
        c.jobs = cov.jobs;
        report = empirical_coverage(c);
        title = std::string(to_string(c.problem)) + " coverage, noise " + to_string(noise) + ", n " +
                std::to_string(cov.n) + ", m " + std::to_string(cov.m) + ", q " + std::to_string(cov.q);
      }
      const std::string table = to_table(report, title);
      out << table;
      if (!cov.out.empty()) {
        nlohmann::json j = to_json(report);
        j["problem"] = cov.problem;
        j["noise"] = to_string(noise);
        j["config"] = config;
        detail::write_json(cov.out + ".json", j);
        fsr::detail::write_file(cov.out + ".txt", table);
      }
      return kExitOk;
    }

    if (*repro_cmd) {
      namespace fs = std::filesystem;
      fs::create_directories(repro.out);
      const std::string dir = repro.out + "/";
      const Weighting w = detail::parse_weighting(repro.weighting);
      const Connectivity conn = detail::parse_connectivity(repro.connectivity);
      const OeFixture fx = counterexample_fixture();
      save_dataset(fx.data, dir + "dataset.csv");
      fsr::save_setup(fx.setup, dir + "setup.json");

      const GridSpec spec{{0.0, -1.0}, {2.0, 1.0}, {repro.resolution, repro.resolution}};
      const PemResult pem = pem_estimate(fx.data, {{0.0, -1.0}, {2.0, 1.0}});
      const auto stationary = find_stationary_points(fx.data, spec);
      auto tester = [&](const Eigen::VectorXd& t) {
        return test_membership_oe(fx.data, OeTheta::from(t), fx.setup, fx.rule, w);
      };

      struct Level {
        GridSpec spec;
        MembershipGrid grid;
        ComponentLabeling lab;
        int pem_label = 0;
        std::set<int> zero_row;
        bool separated = false;
      };
      auto analyse = [&](const GridSpec& s) {
        Level l{s, fsr::scan(tester, s, repro.jobs), {}, 0, {}, false};
        l.lab = label_components(l.grid, conn);
        const std::size_t pem_cell = cell_of(s, pem.theta.vec());
        if (pem_cell != static_cast<std::size_t>(-1)) l.pem_label = l.lab.labels[pem_cell];
        l.zero_row = labels_in_slab(l.lab, s, 1, nearest_index(s, 1, 0.0));
        l.separated = l.pem_label != 0 &&
                      std::any_of(l.zero_row.begin(), l.zero_row.end(), [&](int z) { return z != l.pem_label; });
        return l;
      };
      const Level coarse = analyse(spec);
      export_grid(coarse.grid, coarse.lab, dir + "scan");
      fsr::detail::write_file(dir + "scan.svg", render_svg(coarse.grid, coarse.lab));

      auto component_of = [&](const Level& l, const OeTheta& t) {
        const std::size_t c = cell_of(l.spec, t.vec());
        return c == static_cast<std::size_t>(-1) ? -1 : l.lab.labels[c];
      };
      auto level_json = [&](const Level& l) {
        return nlohmann::json{{"resolution", l.spec.resolution},
                              {"accepted_cells", l.grid.accepted_count()},
                              {"component_count", l.lab.component_count},
                              {"pem_component", l.pem_label},
                              {"zero_row_theta2", l.spec.center(1, nearest_index(l.spec, 1, 0.0))},
                              {"zero_row_components", l.zero_row},
                              {"pem_separated_from_zero_row_component", l.separated}};
      };

      nlohmann::json summary{{"schema_version", kSchemaVersion},
                             {"command", "repro-oe"},
                             {"config", config},
                             {"weighting", to_string(w)},
                             {"connectivity", to_string(conn)},
                             {"box", {{"lower", spec.lower}, {"upper", spec.upper}}},
                             {"disclaimer", kScanDisclaimer}};
      summary["pem_estimate"] = {{"theta", {pem.theta.numerator, pem.theta.denominator}},
                                 {"cost", pem.cost},
                                 {"gradient_norm", pem.gradient_norm},
                                 {"component", coarse.pem_label}};
      nlohmann::json sp = nlohmann::json::array();
      for (const auto& p : stationary) {
        sp.push_back({{"theta", {p.theta.numerator, p.theta.denominator}},
                      {"cost", p.cost},
                      {"gradient_norm", p.gradient_norm},
                      {"component", component_of(coarse, p.theta)}});
      }
      summary["stationary_points"] = sp;
      summary["component_count"] = coarse.lab.component_count;
      summary["scan"] = level_json(coarse);

      // Component whose bounding box holds the nominal parameter.
      int nominal_bbox_label = 0;
      for (const auto& c : coarse.lab.components) {
        bool inside = true;
        for (std::size_t k = 0; k < 2; ++k) {
          const double v = fx.nominal.vec()(static_cast<Eigen::Index>(k));
          const double half = (spec.upper[k] - spec.lower[k]) / static_cast<double>(spec.resolution[k]) / 2.0;
          inside = inside && v >= spec.center(k, c.bbox_lower_index[k]) - half &&
                   v <= spec.center(k, c.bbox_upper_index[k]) + half;
        }
        if (inside) nominal_bbox_label = c.label;
      }
      summary["nominal_bbox_component"] = nominal_bbox_label;

      bool passed = coarse.lab.component_count >= 2 && coarse.separated;
      nlohmann::json checks{{"component_count_at_least_2", coarse.lab.component_count >= 2},
                            {"pem_separated_from_zero_row_component", coarse.separated}};
      if (!repro.no_refine) {
        const Level fine = analyse(spec.refined(2));
        const auto merges = refinement_merges(coarse.lab, coarse.spec, fine.lab, fine.spec);
        summary["refined"] = level_json(fine);
        summary["refinement_merges"] = merges;
        const bool stable = fine.lab.component_count >= 2 && fine.separated && merges.empty();
        checks["refined_structure_holds"] = stable;
        checks["component_count_unchanged_by_refinement"] =
            fine.lab.component_count == coarse.lab.component_count;
        passed = passed && stable;
      }
      summary["checks"] = checks;
      summary["passed"] = passed;
      detail::write_json(dir + "summary.json", summary);
      out << summary.dump(1) << "\n";
      if (!passed) err << "repro-oe: structural assertion failed, evidence kept in " << repro.out << "\n";
      return passed ? kExitOk : kExitReject;
    }

    if (*exc_cmd) {
      const AnyDataset data = load_dataset(exc.data);
      const auto* ds = std::get_if<RegressionDataset>(&data);
      if (!ds) throw DomainError("excitation needs a linear regression dataset");
      const PerturbationSetup setup = exc.setup.resolve(ds->n());
      if (setup.method != Method::Permute) throw DomainError("excitation needs a permute setup");
      nlohmann::json rows = nlohmann::json::array();
      bool all = true;
      for (std::size_t i = 0; i < setup.m; ++i) {
        const Eigen::MatrixXd q = excitation_matrix(*ds, setup.permutations[i]);
        const bool ok = is_sufficiently_exciting(*ds, setup.permutations[i], exc.tol);
        if (i > 0) all = all && ok;
        rows.push_back({{"permutation", i + 1}, {"min_eigenvalue", min_eigenvalue(q)}, {"sufficiently_exciting", ok}});
      }
      out << nlohmann::json{{"schema_version", kSchemaVersion}, {"permutations", rows}, {"all_exciting", all}}.dump(1)
          << "\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace fsr::cli

#endif  // FSR_TOOLS_FSR_CLI_HPP
