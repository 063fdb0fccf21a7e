#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ffprep/commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = fs::path(FFPREP_SOURCE_DIR) / "configs";

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
  json summary() const { return json::parse(out); }
  json error() const { return json::parse(err.substr(0, err.find('\n'))); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ffprep_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  /// Runs the CLI with the given argument string and environment prefix.
  Outcome run(const std::string& args, const std::string& env = "") const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "env -u FFPREP_OUT -u FFPREP_THREADS " + env + " '" + std::string(FFPREP_CLI_PATH) +
                            "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(out);
    o.err = slurp(err);
    return o;
  }

  fs::path write_config(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  std::string out_flag(const std::string& sub = "out") const { return " --out '" + (dir_ / sub).string() + "'"; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, StateOnThermalIsing) {
  const auto o = run("state --config " + (kConfigs / "thermal_ising2.yaml").string() + out_flag());
  ASSERT_EQ(o.code, 0) << o.err;
  const json s = o.summary();
  EXPECT_EQ(s["command"], "state");
  EXPECT_LE(s["trace_distance"].get<double>(), 1e-10);
  EXPECT_LE(s["ff_residual"].get<double>(), 1e-10);
  EXPECT_EQ(s["config_hash"].get<std::string>().size(), 16u);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "state.json"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "reduced_density.json"));
  EXPECT_EQ(json::parse(slurp(dir_ / "out" / "state.json")), s);
}

TEST_F(Cli, StateAtInfiniteTemperatureIsMaximallyMixed) {
  const auto cfg = write_config("hot.yaml",
                                "lattice: {kind: chain, sites: 3}\n"
                                "model: {mode: thermal, beta: 0.0, interaction: {pauli: {ZZ: 1.0}}}\n");
  const auto o = run("state --config " + cfg.string() + out_flag());
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(o.summary()["maximally_mixed"].get<bool>());
  EXPECT_LE(o.summary()["maximally_mixed_distance"].get<double>(), 1e-12);
}

TEST_F(Cli, MalformedConfigExitsWithSchemaError) {
  const auto cfg = write_config("bad.yaml", "model: {mode: thermal, beta: 1.0}\nfoo: 1\n");
  const auto o = run("state --config " + cfg.string() + out_flag());
  EXPECT_EQ(o.code, 2);
  const json e = o.error();
  EXPECT_EQ(e["error"]["kind"], "config");
  EXPECT_EQ(e["exit_code"], 2);
  EXPECT_TRUE(o.out.empty());
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("state").code, 2);
  EXPECT_EQ(run("--config " + (kConfigs / "thermal_ising2.yaml").string()).code, 2);
  EXPECT_EQ(run("bogus --config " + (kConfigs / "thermal_ising2.yaml").string()).code, 2);
  EXPECT_EQ(run("state --config /nonexistent.yaml").code, 2);
  EXPECT_EQ(run("state --threads 0 --config " + (kConfigs / "thermal_ising2.yaml").string()).code, 2);
  const auto bad_env = run("state --config " + (kConfigs / "thermal_ising2.yaml").string() + out_flag(),
                           "FFPREP_THREADS=many");
  EXPECT_EQ(bad_env.code, 2);
  EXPECT_EQ(bad_env.error()["error"]["kind"], "config");
}

TEST_F(Cli, MismatchedCommandIsAConfigError) {
  const auto o = run("state --config " + (kConfigs / "mcmc_ising3.yaml").string() + out_flag());
  EXPECT_EQ(o.code, 2);
  const auto t = run("mcmc --config " + (kConfigs / "thermal_ising2.yaml").string() + out_flag());
  EXPECT_EQ(t.code, 2);
}

TEST_F(Cli, OutputDirectoryPrecedence) {
  const std::string cfg = (kConfigs / "thermal_ising2.yaml").string();
  const fs::path env_dir = dir_ / "from_env";
  ASSERT_EQ(run("state --config " + cfg, "FFPREP_OUT='" + env_dir.string() + "'").code, 0);
  EXPECT_TRUE(fs::exists(env_dir / "state.json"));
  ASSERT_EQ(run("state --config " + cfg + out_flag("from_flag"), "FFPREP_OUT='" + env_dir.string() + "'").code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "from_flag" / "state.json"));
}

TEST_F(Cli, SeedChangesTheConfigHash) {
  const std::string cfg = (kConfigs / "thermal_ising2.yaml").string();
  const auto a = run("state --config " + cfg + out_flag("a"));
  const auto b = run("state --config " + cfg + " --seed 8" + out_flag("b"));
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.summary()["seed"], 7);
  EXPECT_EQ(b.summary()["seed"], 8);
  EXPECT_NE(a.summary()["config_hash"], b.summary()["config_hash"]);
}

TEST_F(Cli, SweepIsMonotoneAndByteIdentical) {
  const std::string cfg = (kConfigs / "sweep_2qubit.yaml").string();
  const auto a = run("sweep --config " + cfg + out_flag("a"));
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run("sweep --config " + cfg + " --threads 3" + out_flag("b"));
  ASSERT_EQ(b.code, 0) << b.err;
  const std::string csv = slurp(dir_ / "a" / "sweep.csv");
  EXPECT_EQ(csv, slurp(dir_ / "b" / "sweep.csv"));
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "tau,error,bound_estimate,min_gap,norm_drift,certified");
  double prev = 2.0;
  int rows = 0;
  while (std::getline(lines, line)) {
    const auto c1 = line.find(',');
    const double err = std::stod(line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1));
    EXPECT_LT(err, prev);
    prev = err;
    ++rows;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_TRUE(a.summary()["monotone"].get<bool>());
  ASSERT_FALSE(a.summary()["constants"].empty());
  EXPECT_GT(a.summary()["constants"][0]["K_estimate"].get<double>(), 0.0);
}

TEST_F(Cli, SweepSingleRuntimeGivesSingleRow) {
  const auto cfg = write_config("one.yaml",
                                "lattice: {kind: chain, sites: 1, onsite: [0]}\n"
                                "model: {mode: thermal, beta: 1.0, interaction: {pauli: {X: 0.6, Z: 0.8}}}\n"
                                "run: {taus: [10]}\n");
  const auto o = run("sweep --config " + cfg.string() + out_flag());
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.summary()["rows"].size(), 1u);
  const auto empty = write_config("none.yaml",
                                  "lattice: {kind: chain, sites: 1, onsite: [0]}\n"
                                  "model: {mode: thermal, beta: 1.0, interaction: {pauli: {Z: 1.0}}}\n");
  EXPECT_EQ(run("sweep --config " + empty.string() + out_flag("none")).code, 2);
}

TEST_F(Cli, ClusterCertificatesAndInventory) {
  const auto cfg = write_config("tfi.yaml",
                                "lattice: {kind: chain, sites: 3}\n"
                                "model:\n  mode: thermal\n  beta: 0.05\n"
                                "  interaction: {pauli: {ZZ: 0.5, XI: 0.25, IX: 0.25}}\n"
                                "run: {r: [1, 2], betas: [0.0, 0.05], prepare: false}\n");
  const auto o = run("cluster --config " + cfg.string() + out_flag());
  ASSERT_EQ(o.code, 0) << o.err;
  const json s = o.summary();
  ASSERT_FALSE(s["certificates"].empty());
  for (const auto& c : s["certificates"]) {
    ASSERT_FALSE(c["bound"].is_null());
    EXPECT_TRUE(c["valid"].get<bool>());
    EXPECT_LE(c["measured"].get<double>(), c["bound"].get<double>() + 1e-9);
  }
  EXPECT_TRUE(s["norm_lemma_holds"].get<bool>());
  const std::string inv = slurp(dir_ / "out" / "cluster_inventory.csv");
  EXPECT_EQ(inv.substr(0, inv.find('\n')), "r,anchor,omega,size,inside_lambda,norm,lemma_bound");
  EXPECT_TRUE(fs::exists(dir_ / "out" / "gap_vs_beta.csv"));
}

TEST_F(Cli, ClusterAtZeroBetaHasOnlyTrivialTerms) {
  const auto cfg = write_config("zero.yaml",
                                "lattice: {kind: chain, sites: 3}\n"
                                "model: {mode: thermal, beta: 0.0, interaction: {pauli: {ZZ: 0.5, XX: 0.5}}}\n"
                                "run: {r: [2], prepare: false}\n");
  const auto o = run("cluster --config " + cfg.string() + out_flag());
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_LE(o.summary()["max_norm_nonempty"].get<double>(), 1e-14);
}

TEST_F(Cli, ClusterCommutingTermsStayInsideLambda) {
  const auto cfg = write_config("ising.yaml",
                                "lattice: {kind: chain, sites: 4}\n"
                                "model: {mode: thermal, beta: 0.3, interaction: {pauli: {ZZ: 0.8}}}\n"
                                "run: {r: [3], prepare: false}\n");
  const auto o = run("cluster --config " + cfg.string() + out_flag());
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_LE(o.summary()["max_norm_outside_lambda"].get<double>(), 1e-10);
}

TEST_F(Cli, McmcInvariants) {
  const auto o = run("mcmc --config " + (kConfigs / "mcmc_ising3.yaml").string() + out_flag());
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_LE(o.summary()["mismatch"].get<double>(), 1e-9);
  EXPECT_GE(o.summary()["fidelity"].get<double>(), 1.0 - 1e-10);

  const auto single = write_config("single.yaml", "model: {mode: classical, beta: 0.0, energies: [1.0, -1.0]}\n");
  const auto s = run("mcmc --config " + single.string() + out_flag("single"));
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_LE(s.summary()["mismatch"].get<double>(), 1e-15);

  const auto tri = write_config("triangle.yaml",
                                "model:\n  mode: classical\n  beta: 1.0\n"
                                "  ising: {sites: 3, couplings: [[0, 1, 1.0], [1, 2, 1.0], [0, 2, 1.0]]}\n");
  const auto t = run("mcmc --config " + tri.string() + out_flag("tri"));
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_LE(t.summary()["mismatch"].get<double>(), 1e-9);
  EXPECT_GE(t.summary()["fidelity"].get<double>(), 1.0 - 1e-10);
}

TEST(CommandHelpers, FormattingAndErrors) {
  EXPECT_EQ(ffprep::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(ffprep::format_double(1.0), "1");
  const json e = ffprep::error_json("numerical", "boom", ffprep::kExitNumerical);
  EXPECT_EQ(e["error"]["kind"], "numerical");
  EXPECT_EQ(e["exit_code"], 3);
  EXPECT_THROW(ffprep::require_finite(json{{"x", std::numeric_limits<double>::quiet_NaN()}}, "x"),
               ffprep::NumericalError);
  EXPECT_NO_THROW(ffprep::require_finite(json{{"x", {1.0, nullptr}}}, "x"));
}
