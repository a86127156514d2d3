#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "a2dmrg/errors.hpp"
#include "a2dmrg/experiment.hpp"
#include "oracles.hpp"

using namespace a2dmrg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class Experiment : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("a2dmrg_exp_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& body) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << body;
    return p;
  }

  /// Runs the CLI and returns its exit status; stdout and stderr go to `log`.
  int cli(const std::string& args, std::string* log = nullptr) const {
    const char* exe = std::getenv("A2DMRG_CLI");
    if (exe == nullptr) return -1;
    const fs::path out = dir_ / "cli.log";
    const std::string cmd = std::string(exe) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (log != nullptr) *log = slurp(out);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

const char* kTfimConfig = R"({
  "model": {"kind": "tfim", "d": 6, "J": 1.0, "h": 1.0},
  "algorithm": "a2dmrg2",
  "ranks": {"max": 8},
  "tolerances": {"eig": 1e-8, "energy_rel": 1e-8},
  "max_iterations": 30,
  "seed": 3
})";

}  // namespace

TEST(ParseConfig, FullSchema) {
  const ExperimentConfig c = parse_config(R"({
    "model": {"kind": "random-symmetric", "d": 5, "n": 3, "R": 2, "seed": 9},
    "algorithm": "a2dmrg1",
    "ranks": {"initial": 3, "max": 12},
    "tolerances": {"eig": 1e-9, "svd": 1e-7, "energy_rel": 1e-5, "coarse_eps": 1e-11, "fit": 1e-6},
    "max_iterations": 17, "lanczos_max_iter": 40, "seed": 123, "workers": 4,
    "dmrg": {"environments": "rebuilt"},
    "a2dmrg": {"coarse_basis": "members", "coarse_solver": "krylov", "compression": "sum_round",
               "normalize_members": true, "max_fit_iters": 7},
    "output": {"dir": "out", "prefix": "p"}
  })");
  EXPECT_EQ(c.model.kind, ModelKind::random_symmetric);
  EXPECT_EQ(c.model.n, 3u);
  EXPECT_EQ(c.model.seed, 9u);
  EXPECT_EQ(c.algorithm, Algorithm::a2dmrg1);
  EXPECT_EQ(c.effective_initial_rank(), 3u);
  EXPECT_EQ(c.max_rank, 12u);
  EXPECT_DOUBLE_EQ(c.coarse_eps, 1e-11);
  EXPECT_EQ(c.lanczos_max_iter, 40u);
  EXPECT_EQ(c.workers, 4u);
  EXPECT_EQ(c.environments, EnvironmentPolicy::rebuilt);
  EXPECT_EQ(c.coarse_basis, CoarseBasis::members);
  EXPECT_EQ(c.coarse_solver, CoarseSolver::krylov);
  EXPECT_EQ(c.compression, TwoSiteCompression::sum_round);
  EXPECT_TRUE(c.normalize_members);
  EXPECT_EQ(c.max_fit_iters, 7u);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(c.output_prefix, "p");
}

TEST(ParseConfig, Defaults) {
  const ExperimentConfig c = parse_config(R"({"model": {"kind": "heisenberg", "d": 4}, "algorithm": "dmrg2"})");
  EXPECT_EQ(c.max_rank, 16u);
  EXPECT_EQ(c.effective_initial_rank(), 2u);
  EXPECT_EQ(c.workers, 1u);
  EXPECT_EQ(c.environments, EnvironmentPolicy::stored);
  const ExperimentConfig one = parse_config(R"({"model": {"kind": "tfim", "d": 4}, "algorithm": "dmrg1"})");
  EXPECT_EQ(one.effective_initial_rank(), one.max_rank);
}

TEST(ParseConfig, ErrorsNameTheProblem) {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_config(text);
    } catch (const ParseError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message(R"({"model": {"kind": "tfim"}, "algorithm": "dmrg3"})").find("dmrg3"), std::string::npos);
  EXPECT_NE(message(R"({"model": {"kind": "tfim"}, "algorithm": "dmrg2", "bogus": 1})").find("bogus"),
            std::string::npos);
  EXPECT_NE(message(R"({"model": {"kind": "tfim", "d": "ten"}, "algorithm": "dmrg2"})").find("model.d"),
            std::string::npos);
  EXPECT_NE(message(R"({"algorithm": "dmrg2"})").find("model"), std::string::npos);
  EXPECT_FALSE(message("{not json").empty());
  EXPECT_FALSE(message(R"({"model": {"kind": "tfim"}, "algorithm": "dmrg2", "workers": 0})").empty());
  EXPECT_FALSE(message(R"({"model": {"kind": "tfim"}, "algorithm": "dmrg2", "tolerances": {"eig": -1}})").empty());
  EXPECT_FALSE(message(R"({"model": {"kind": "tfim", "d": 1}, "algorithm": "dmrg2"})").empty());
  EXPECT_FALSE(message(R"({"model": {"kind": "tfim"}, "algorithm": "dmrg2", "dmrg": {"environments": "x"}})").empty());
}

TEST(InitialState, RanksAreFeasible) {
  ExperimentConfig c = parse_config(R"({"model": {"kind": "tfim", "d": 6}, "algorithm": "dmrg1",
                                       "ranks": {"max": 16}})");
  const TensorTrain x = initial_state(c, std::vector<std::size_t>(6, 2));
  EXPECT_EQ(x.ranks(), (std::vector<std::size_t>{1, 2, 4, 8, 4, 2, 1}));
  const TensorTrain y = initial_state(c, std::vector<std::size_t>(6, 2));
  EXPECT_EQ(x.core(2).values(), y.core(2).values());
}

TEST_F(Experiment, A2dmrgOnTfimMatchesOracle) {
  ExperimentConfig c = parse_config(R"({"model": {"kind": "tfim", "d": 10}, "algorithm": "a2dmrg2",
                                       "ranks": {"max": 16}})");
  const ExperimentResult r = run_experiment(c);
  ASSERT_TRUE(r.reference_energy.has_value());
  EXPECT_NEAR(*r.reference_energy, oracle::lowest_eigenvalue(oracle::tfim_dense(10, 1.0, 1.0)), 1e-10);
  EXPECT_LT(*r.relative_error(), 1e-6);
  EXPECT_GE(r.final_energy, *r.reference_energy - 1e-10);
}

TEST_F(Experiment, OutputsAreDeterministicAcrossRunsAndWorkerCounts) {
  ExperimentConfig c = load_config(write_config("a.json", kTfimConfig).string());
  c.output_dir = (dir_ / "one").string();
  const auto files_a = write_outputs(run_experiment(c));
  c.output_dir = (dir_ / "two").string();
  const auto files_b = write_outputs(run_experiment(c));
  c.output_dir = (dir_ / "three").string();
  c.workers = 4;
  const auto files_c = write_outputs(run_experiment(c));
  ASSERT_EQ(files_a.size(), 4u);
  for (std::size_t k = 0; k < files_a.size(); ++k) {
    const std::string a = slurp(files_a[k]);
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(files_b[k])) << files_a[k];
    if (files_a[k].find("_summary") == std::string::npos) EXPECT_EQ(a, slurp(files_c[k])) << files_a[k];
  }
  const std::string trace = slurp(files_a[0]);
  EXPECT_EQ(trace.rfind("global_iter,energy,energy_error_vs_reference,coarse_p,krylov_iters,lanczos_iters,", 0), 0u);
  const nlohmann::json summary = nlohmann::json::parse(slurp(dir_ / "one" / "run_summary.json"));
  EXPECT_TRUE(summary.contains("final_energy"));
  EXPECT_TRUE(summary.contains("iterations"));
  const nlohmann::json ledger = nlohmann::json::parse(slurp(dir_ / "one" / "run_ledger.json"));
  EXPECT_EQ(ledger.at("cost_per_processor").get<std::uint64_t>(),
            ledger.at("sequential_flops").get<std::uint64_t>() + ledger.at("max_worker_flops").get<std::uint64_t>());
}

TEST_F(Experiment, DmrgTraceHasOneRowPerMicroStep) {
  ExperimentConfig c = parse_config(R"({"model": {"kind": "heisenberg", "d": 6}, "algorithm": "dmrg2",
                                       "ranks": {"max": 8}, "max_iterations": 4})");
  c.output_dir = dir_.string();
  const ExperimentResult r = run_experiment(c);
  write_outputs(r);
  std::istringstream in(slurp(dir_ / "run_trace.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "half_sweep,site,energy,lanczos_iters,discarded_weight,flops_cum");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, r.dmrg_trace->steps.size());
  EXPECT_EQ(r.rows.size(), r.dmrg_trace->half_sweep_energies.size());
}

TEST_F(Experiment, CompareIdenticalConfigsGivesUnitSpeedup) {
  const ExperimentConfig c = load_config(write_config("a.json", kTfimConfig).string());
  const ExperimentResult a = run_experiment(c), b = run_experiment(c);
  const ComparisonResult cr = compare_runs(a, b);
  EXPECT_TRUE(cr.reference_is_oracle);
  ASSERT_TRUE(cr.matched_speedup.has_value());
  EXPECT_DOUBLE_EQ(*cr.matched_speedup, 1.0);
  EXPECT_EQ(cr.csv.rfind("iteration,error_A,error_B,cpp_A,cpp_B,speedup", 0), 0u);
}

TEST_F(Experiment, CompareRejectsModelMismatch) {
  ExperimentConfig a = load_config(write_config("a.json", kTfimConfig).string());
  ExperimentConfig b = a;
  b.model.h = 0.5;
  b.max_iterations = 2;
  a.max_iterations = 2;
  EXPECT_THROW(compare_runs(run_experiment(a), run_experiment(b)), ParseError);
}

TEST_F(Experiment, CompareFallsBackToBestEnergyBeyondCap) {
  ::setenv("A2DMRG_ORACLE_CAP", "16", 1);
  ExperimentConfig a = load_config(write_config("a.json", kTfimConfig).string());
  ExperimentConfig b = a;
  b.algorithm = Algorithm::dmrg2;
  const ExperimentResult ra = run_experiment(a), rb = run_experiment(b);
  ::unsetenv("A2DMRG_ORACLE_CAP");
  EXPECT_FALSE(ra.reference_energy.has_value());
  EXPECT_FALSE(ra.reference_note.empty());
  const ComparisonResult cr = compare_runs(ra, rb);
  EXPECT_FALSE(cr.reference_is_oracle);
  EXPECT_DOUBLE_EQ(cr.reference_energy, std::min(ra.final_energy, rb.final_energy));
  EXPECT_NE(cr.summary_json.find("reference_is_oracle"), std::string::npos);
}

TEST_F(Experiment, CliRunWritesOutputsAndReportsErrors) {
  if (std::getenv("A2DMRG_CLI") == nullptr) GTEST_SKIP() << "A2DMRG_CLI not set";
  const fs::path cfg = write_config("a.json", kTfimConfig);
  std::string log;
  EXPECT_EQ(cli("run " + cfg.string() + " --output-dir " + (dir_ / "out").string() + " --prefix t", &log), 0) << log;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "t_trace.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "t_ledger.json"));
  EXPECT_NE(log.find("relative error"), std::string::npos);

  EXPECT_EQ(cli("ledger-report " + (dir_ / "out" / "t_ledger.json").string(), &log), 0) << log;
  EXPECT_NE(log.find("cost per processor"), std::string::npos);

  EXPECT_NE(cli("run " + cfg.string() + " --algorithm dmrg7", &log), 0);
  EXPECT_NE(log.find("dmrg7"), std::string::npos);

  const fs::path bad = write_config("bad.json", R"({"model": {"kind": "tfim"}, "algorithm": "dmrg2", "x": 1})");
  EXPECT_EQ(cli("run " + bad.string(), &log), 2);

  EXPECT_EQ(cli("oracle --model heisenberg --sites 2", &log), 0);
  const auto at = log.find("energy ");
  ASSERT_NE(at, std::string::npos) << log;
  EXPECT_NEAR(std::stod(log.substr(at + 7)), -0.75, 1e-12);

  EXPECT_EQ(cli("oracle --model tfim --sites 30", &log), 3);
  EXPECT_NE(log.find("A2DMRG_ORACLE_CAP"), std::string::npos);
}

TEST_F(Experiment, CliCompareWritesAlignedCsv) {
  if (std::getenv("A2DMRG_CLI") == nullptr) GTEST_SKIP() << "A2DMRG_CLI not set";
  const fs::path a = write_config("a.json", kTfimConfig);
  std::string log;
  const std::string prefix = (dir_ / "cmp" / "x").string();
  EXPECT_EQ(cli("compare " + a.string() + " " + a.string() + " --output " + prefix, &log), 0) << log;
  const std::string csv = slurp(prefix + "_comparison.csv");
  EXPECT_EQ(csv.rfind("iteration,error_A,error_B,cpp_A,cpp_B,speedup", 0), 0u);
  const nlohmann::json j = nlohmann::json::parse(slurp(prefix + "_comparison.json"));
  EXPECT_DOUBLE_EQ(j.at("speedup_at_matched_error").get<double>(), 1.0);
}
