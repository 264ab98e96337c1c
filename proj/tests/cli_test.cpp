#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>

#include "fsr/fsr.hpp"
#include "fsr_cli.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "fsr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = fsr::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return fsr::detail::read_file(p.string()); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("fsr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("FSR_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"test", "--theta", "1"}).code, 2);  // --data missing
}

TEST_F(Cli, GenOeStepNoiselessEqualsSimulation) {
  ASSERT_EQ(run({"gen", "oe", "--theta", "0.9,-0.1", "--input", "step", "--n", "7", "--noise", "none", "--out",
                 path("d.csv")})
                .code,
            0);
  const auto ds = std::get<fsr::IoDataset>(fsr::load_dataset(path("d.csv")));
  EXPECT_EQ(ds.outputs(), fsr::simulate({0.9, -0.1}, fsr::step_input(7)));
  const auto meta = nlohmann::json::parse(slurp(path("d.csv.json")));
  EXPECT_EQ(meta["theta"], nlohmann::json({0.9, -0.1}));
  EXPECT_EQ(meta["noise"], "none");
  EXPECT_EQ(meta["schema_version"], fsr::kSchemaVersion);
  EXPECT_EQ(meta["config"]["n"], 7);
}

TEST_F(Cli, GenLiteralNoiseReproducesFixture) {
  ASSERT_EQ(run({"gen", "oe", "--theta", "0.9,-0.1", "--n", "7", "--noise-values",
                 "-0.021,-0.008,-0.003,-0.004,0.01,0.007,0.015", "--out", path("fx.csv")})
                .code,
            0);
  const auto ds = std::get<fsr::IoDataset>(fsr::load_dataset(path("fx.csv")));
  const auto fx = fsr::counterexample_fixture();
  EXPECT_LT((ds.outputs() - fx.data.outputs()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(run({"gen", "oe", "--theta", "0.9,-0.1", "--n", "7", "--noise-values", "0.1,0.2", "--out", path("x.csv")})
                .code,
            2);
}

TEST_F(Cli, GenLinregIsDeterministicAndNeedsSeed) {
  const std::vector<std::string> args{"gen", "linreg", "--theta", "1,-0.5", "--n", "20", "--noise", "laplace:1",
                                      "--out", path("a.csv")};
  EXPECT_EQ(run(args).code, 2);
  auto seeded = args;
  seeded.insert(seeded.end(), {"--seed", "17"});
  ASSERT_EQ(run(seeded).code, 0);
  const auto first = slurp(path("a.csv")), first_meta = slurp(path("a.csv.json"));
  ASSERT_EQ(run(seeded).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), first);
  EXPECT_EQ(slurp(path("a.csv.json")), first_meta);
  setenv("FSR_SEED", "17", 1);
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), first);
  const auto ds = std::get<fsr::RegressionDataset>(fsr::load_dataset(path("a.csv")));
  EXPECT_EQ(ds.n_theta(), 2u);
  EXPECT_EQ(ds.n(), 20u);
}

TEST_F(Cli, TestAcceptsLsAndRejectsFarPoint) {
  std::mt19937_64 rng(3);
  fsr::save_dataset(oracle::random_regression(rng, 2, 12, 1.0, false), path("d.csv"));
  const auto ds = std::get<fsr::RegressionDataset>(fsr::load_dataset(path("d.csv")));
  const Eigen::VectorXd ls = fsr::ls_estimate(ds);
  const std::string ls_arg = fsr::detail::format_double(ls(0)) + "," + fsr::detail::format_double(ls(1));

  const auto accept = run({"test", "--data", path("d.csv"), "--theta=" + ls_arg, "--method", "permute", "--m", "5",
                           "--q", "2", "--seed", "9", "--save-setup", path("s.json")});
  ASSERT_EQ(accept.code, 0) << accept.err;
  const auto j = nlohmann::json::parse(accept.out);
  EXPECT_TRUE(j["accepted"].get<bool>());
  EXPECT_DOUBLE_EQ(j["confidence"].get<double>(), 0.6);
  EXPECT_EQ(j["z_values"].size(), 5u);
  EXPECT_EQ(j["rank_of_one"], 5);

  const auto setup = fsr::load_setup(path("s.json"));
  bool exciting = true;
  for (std::size_t i = 1; i < setup.m; ++i) exciting = exciting && fsr::is_sufficiently_exciting(ds, setup.permutations[i]);
  ASSERT_TRUE(exciting);
  const Eigen::VectorXd far = ls + 1e6 * Eigen::Vector2d(0.6, 0.8);
  const std::string far_arg = "--theta=" + fsr::detail::format_double(far(0)) + "," + fsr::detail::format_double(far(1));
  const auto reject = run({"test", "--data", path("d.csv"), far_arg, "--setup", path("s.json")});
  EXPECT_EQ(reject.code, 1);
  EXPECT_FALSE(nlohmann::json::parse(reject.out)["accepted"].get<bool>());

  const auto again = run({"test", "--data", path("d.csv"), far_arg, "--setup", path("s.json")});
  EXPECT_EQ(again.out, reject.out);
}

TEST_F(Cli, TestIncompatibleSetupIsError) {
  ASSERT_EQ(run({"gen", "linreg", "--theta", "1,2", "--n", "10", "--seed", "1", "--out", path("d.csv")}).code, 0);
  fsr::save_setup(fsr::gen_setup(fsr::Method::SignFlip, 3, 9, 1), path("s.json"));
  const auto r = run({"test", "--data", path("d.csv"), "--theta", "1,2", "--setup", path("s.json")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("n=9"), std::string::npos);
  EXPECT_EQ(run({"test", "--data", path("d.csv"), "--theta", "1,2"}).code, 2);  // no setup, no seed
  EXPECT_EQ(run({"test", "--data", path("missing.csv"), "--theta", "1,2", "--seed", "1"}).code, 2);
}

TEST_F(Cli, ConfigFileOverridesAndIsRecorded) {
  std::ofstream(path("cfg.json")) << R"({"gen": {"n": 9, "noise": "gaussian:0.5", "seed": 12345678901}})";
  ASSERT_EQ(run({"--config", path("cfg.json"), "gen", "linreg", "--theta", "1,1", "--out", path("d.csv")}).code, 0);
  const auto meta = nlohmann::json::parse(slurp(path("d.csv.json")));
  EXPECT_EQ(meta["config"]["n"], 9);
  EXPECT_EQ(meta["config"]["seed"], 12345678901ull);
  EXPECT_EQ(meta["noise"], "gaussian:0.5");
  EXPECT_EQ(std::get<fsr::RegressionDataset>(fsr::load_dataset(path("d.csv"))).n(), 9u);
  std::ofstream(path("bad.json")) << "{not json";
  EXPECT_EQ(run({"--config", path("bad.json"), "gen", "linreg", "--theta", "1", "--out", path("e.csv")}).code, 2);
}

TEST_F(Cli, ScanFixtureComponentsStableUnderRefinement) {
  const auto fx = fsr::counterexample_fixture();
  fsr::save_dataset(fx.data, path("fx.csv"));
  fsr::save_setup(fx.setup, path("fx.json"));
  std::vector<std::size_t> counts;
  for (const std::string res : {"400", "800"}) {
    const auto r = run({"scan", "--data", path("fx.csv"), "--setup", path("fx.json"), "--box", "0,2,-1,1",
                        "--resolution", res, "--weighting", "covariance", "--connectivity", "8", "--jobs", "4",
                        "--out", path("scan" + res)});
    ASSERT_EQ(r.code, 0) << r.err;
    counts.push_back(nlohmann::json::parse(r.out)["component_count"].get<std::size_t>());
    EXPECT_TRUE(fs::exists(path("scan" + res + "_grid.csv")));
    EXPECT_TRUE(fs::exists(path("scan" + res + ".svg")));
    EXPECT_TRUE(fs::exists(path("scan" + res + "_config.json")));
    const auto comps = nlohmann::json::parse(slurp(path("scan" + res + "_components.json")));
    EXPECT_GE(comps["components"].size(), 2u);
  }
  EXPECT_GE(counts[0], 2u);
  EXPECT_EQ(counts[0], counts[1]);
}

TEST_F(Cli, ScanLinearRegressionBox) {
  ASSERT_EQ(run({"gen", "linreg", "--theta", "1,-0.5", "--n", "15", "--noise", "gaussian:1", "--seed", "2", "--out",
                 path("d.csv")})
                .code,
            0);
  const auto r = run({"scan", "--data", path("d.csv"), "--method", "permute", "--m", "10", "--q", "9", "--seed", "4",
                      "--box=-3,5,-4,3", "--resolution", "50,40", "--out", path("lr")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["component_count"], 1);
}

TEST_F(Cli, CoverageWritesReport) {
  const auto r = run({"coverage", "--problem", "linreg-perm", "--noise", "shifted_exponential:1", "--m", "8", "--q",
                      "4", "--trials", "2000", "--seed", "5", "--jobs", "2", "--out", path("cov")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("empirical"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(path("cov.json")));
  EXPECT_EQ(j["trials"], 2000);
  EXPECT_DOUBLE_EQ(j["nominal"].get<double>(), 0.5);
  EXPECT_EQ(slurp(path("cov.txt")), r.out);
  EXPECT_EQ(run({"coverage", "--trials", "2000"}).code, 2);
  EXPECT_EQ(run({"coverage", "--trials", "10", "--seed", "1"}).code, 2);
  EXPECT_EQ(run({"coverage", "--problem", "ellipsoid", "--n", "50", "--trials", "1000", "--seed", "1"}).code, 0);
}

TEST_F(Cli, ReproOeSummaryAndDeterminism) {
  const auto r = run({"repro-oe", "--out", path("repro"), "--jobs", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = nlohmann::json::parse(slurp(path("repro/summary.json")));
  EXPECT_GE(summary["component_count"].get<std::size_t>(), 2u);
  EXPECT_TRUE(summary["passed"].get<bool>());
  EXPECT_TRUE(summary.contains("disclaimer"));
  EXPECT_EQ(summary["schema_version"], fsr::kSchemaVersion);
  const int pem = summary["pem_estimate"]["component"].get<int>();
  EXPECT_NE(pem, 0);
  bool other = false;
  for (const auto& l : summary["scan"]["zero_row_components"]) other = other || l.get<int>() != pem;
  EXPECT_TRUE(other);
  EXPECT_EQ(summary["refined"]["component_count"], summary["component_count"]);
  EXPECT_TRUE(summary["refinement_merges"].empty());

  const auto fx = fsr::counterexample_fixture();
  EXPECT_EQ(fsr::load_setup(path("repro/setup.json")), fx.setup);
  EXPECT_EQ(std::get<fsr::IoDataset>(fsr::load_dataset(path("repro/dataset.csv"))).outputs(), fx.data.outputs());

  std::map<std::string, std::string> before;
  for (const auto& e : fs::directory_iterator(path("repro"))) before[e.path().filename().string()] = slurp(e.path());
  ASSERT_EQ(run({"repro-oe", "--out", path("repro"), "--jobs", "4"}).code, 0);
  for (const auto& [name, bytes] : before) EXPECT_EQ(slurp(dir_ / "repro" / name), bytes) << name;
}

TEST_F(Cli, ExcitationReportsEigenvalues) {
  ASSERT_EQ(run({"gen", "linreg", "--theta", "1,2", "--n", "10", "--seed", "6", "--out", path("d.csv")}).code, 0);
  const auto r = run({"excitation", "--data", path("d.csv"), "--m", "4", "--seed", "8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["permutations"].size(), 4u);
  EXPECT_LT(std::abs(j["permutations"][0]["min_eigenvalue"].get<double>()), 1e-10);
  EXPECT_FALSE(j["permutations"][0]["sufficiently_exciting"].get<bool>());
  fsr::save_setup(fsr::gen_setup(fsr::Method::SignFlip, 3, 10, 1), path("s.json"));
  EXPECT_EQ(run({"excitation", "--data", path("d.csv"), "--setup", path("s.json")}).code, 2);
}

}  // namespace
