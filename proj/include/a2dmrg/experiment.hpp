#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "a2dmrg/a2dmrg.hpp"
#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/dmrg.hpp"
#include "a2dmrg/models.hpp"

namespace a2dmrg {

enum class Algorithm { dmrg1, dmrg2, a2dmrg1, a2dmrg2 };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct ExperimentConfig {
  ModelSpec model;
  Algorithm algorithm = Algorithm::dmrg2;
  std::size_t initial_rank = 0;  // 0: max_rank for one-site algorithms, 2 for two-site
  std::size_t max_rank = 16;
  double eig_tol = 1e-6;
  double svd_tol = 1e-6;
  double energy_rel_tol = 1e-6;
  double coarse_eps = 1e-10;
  double fit_tol = 1e-8;
  std::size_t max_fit_iters = 20;
  std::size_t max_iterations = 200;
  std::size_t lanczos_max_iter = 200;
  std::uint64_t seed = 7;
  std::size_t workers = 1;
  CoarseBasis coarse_basis = CoarseBasis::orthogonalized_updates;
  bool normalize_members = false;
  CoarseSolver coarse_solver = CoarseSolver::direct;
  TwoSiteCompression compression = TwoSiteCompression::fit;
  EnvironmentPolicy environments = EnvironmentPolicy::stored;  // classical sweeps only
  std::string output_dir = ".";
  std::string output_prefix = "run";

  void validate() const;
  std::size_t effective_initial_rank() const;
};

/// Parses the JSON configuration described in docs/config.md. Throws
/// ParseError with a message naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string model_to_json(const ModelSpec& m);

/// One row per global iteration (DMRG half-sweep or A2DMRG iteration).
struct IterationRow {
  std::size_t iteration = 0;
  double energy = 0.0;
  std::uint64_t flops_seq = 0;
  std::uint64_t flops_max_worker = 0;
  std::uint64_t cost_per_processor = 0;
  std::uint64_t total_flops = 0;
  std::vector<std::size_t> lanczos_iters;
};

struct ExperimentResult {
  ExperimentConfig config;
  double final_energy = 0.0;
  std::optional<double> reference_energy;  // oracle, when within the cap
  std::string reference_note;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<std::size_t> final_ranks;
  std::vector<IterationRow> rows;
  LedgerReport ledger;
  std::optional<SweepTrace> dmrg_trace;
  std::optional<A2dmrgTrace> a2dmrg_trace;

  std::optional<double> relative_error() const;
};

/// Deterministic random initial tensor train for the configuration, with
/// interior ranks clipped to the feasible maximum.
TensorTrain initial_state(const ExperimentConfig& config, const std::vector<std::size_t>& dims);

/// Runs the configured solver. The oracle reference is computed when the
/// Hilbert dimension is within default_oracle_cap().
ExperimentResult run_experiment(const ExperimentConfig& config, bool with_reference = true);

/// Writes <prefix>_trace.csv, <prefix>_iterations.csv, <prefix>_ledger.json
/// and <prefix>_summary.json into config.output_dir. Returns the paths.
std::vector<std::string> write_outputs(const ExperimentResult& result);

std::string ledger_to_json(const LedgerReport& report);

struct ComparisonResult {
  double reference_energy = 0.0;
  bool reference_is_oracle = false;
  double matched_error = 0.0;
  std::optional<double> cost_a_at_match;
  std::optional<double> cost_b_at_match;
  std::optional<double> matched_speedup;  // cost A / cost B at the matched error
  std::string csv;
  std::string summary_json;
};

/// Aligns two runs of the same model by global iteration. Errors are relative
/// to the oracle energy, or to the lowest energy seen in either run when the
/// oracle is unavailable.
ComparisonResult compare_runs(const ExperimentResult& a, const ExperimentResult& b);

}  // namespace a2dmrg
