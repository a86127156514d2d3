#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "a2dmrg/errors.hpp"
#include "a2dmrg/experiment.hpp"
#include "a2dmrg/models.hpp"
#include "a2dmrg/tensor_train.hpp"

namespace {

using namespace a2dmrg;

struct RunOverrides {
  std::optional<std::string> algorithm;
  std::optional<std::size_t> max_rank;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> prefix;

  void apply(ExperimentConfig& c) const {
    if (algorithm) c.algorithm = parse_algorithm(*algorithm);
    if (max_rank) c.max_rank = *max_rank;
    if (workers) c.workers = *workers;
    if (seed) c.seed = *seed;
    if (output_dir) c.output_dir = *output_dir;
    if (prefix) c.output_prefix = *prefix;
    c.validate();
  }
};

void print_result(const ExperimentResult& r, const std::vector<std::string>& files) {
  std::printf("algorithm      %s\n", algorithm_name(r.config.algorithm).c_str());
  std::printf("final energy   %.15g\n", r.final_energy);
  if (r.reference_energy) {
    std::printf("reference      %.15g\n", *r.reference_energy);
    std::printf("relative error %.3e\n", *r.relative_error());
  } else {
    std::printf("reference      none (%s)\n", r.reference_note.c_str());
  }
  std::printf("iterations     %zu (%s)\n", r.iterations, r.converged ? "converged" : "not converged");
  std::printf("cost/processor %llu flops\n", static_cast<unsigned long long>(r.ledger.cost_per_processor));
  for (const auto& f : files) std::printf("wrote          %s\n", f.c_str());
}

int cmd_run(const std::string& path, const RunOverrides& o) {
  ExperimentConfig c = load_config(path);
  o.apply(c);
  const ExperimentResult r = run_experiment(c);
  print_result(r, write_outputs(r));
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& out_prefix) {
  const ExperimentResult a = run_experiment(load_config(a_path));
  const ExperimentResult b = run_experiment(load_config(b_path), false);
  ExperimentResult b_ref = b;
  b_ref.reference_energy = a.reference_energy;
  const ComparisonResult cr = compare_runs(a, b_ref);
  const std::filesystem::path base(out_prefix);
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  const std::string csv_path = out_prefix + "_comparison.csv";
  const std::string json_path = out_prefix + "_comparison.json";
  std::ofstream(csv_path, std::ios::binary) << cr.csv;
  std::ofstream(json_path, std::ios::binary) << cr.summary_json;
  std::printf("reference %.15g (%s)\n", cr.reference_energy,
              cr.reference_is_oracle ? "oracle" : "best energy achieved, no oracle available");
  std::printf("matched error %.3e\n", cr.matched_error);
  if (cr.matched_speedup) std::printf("speedup at matched error %.4g\n", *cr.matched_speedup);
  std::printf("wrote %s\nwrote %s\n", csv_path.c_str(), json_path.c_str());
  return 0;
}

int cmd_oracle(const ModelSpec& spec) {
  const MpOperator op = build_model(spec);
  const GroundState gs = dense_ground_state(op);
  std::printf("energy %.17g\n", gs.energy);
  std::printf("separation ranks");
  for (std::size_t r : separation_ranks(gs.state)) std::printf(" %zu", r);
  std::printf("\n");
  return 0;
}

int cmd_ledger_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ledger '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ledger is not valid JSON: ") + e.what());
  }
  try {
    std::printf("sequential flops     %llu\n", j.at("sequential_flops").get<unsigned long long>());
    std::printf("max worker flops     %llu\n", j.at("max_worker_flops").get<unsigned long long>());
    std::printf("cost per processor   %llu\n", j.at("cost_per_processor").get<unsigned long long>());
    std::printf("total flops          %llu\n", j.at("total_flops").get<unsigned long long>());
    std::printf("parallel rounds      %zu\n", j.at("rounds").get<std::size_t>());
    std::printf("parallel speedup     %.4g\n", j.at("parallel_speedup").get<double>());
    for (const auto& [k, v] : j.at("class_flops").items()) {
      std::printf("  %-18s %llu\n", k.c_str(), v.get<unsigned long long>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed ledger: ") + e.what());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Additive two-level DMRG experiment driver"};
  app.require_subcommand(1);

  std::string run_config;
  RunOverrides overrides;
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("config", run_config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--algorithm", overrides.algorithm, "dmrg1, dmrg2, a2dmrg1 or a2dmrg2");
  run->add_option("--max-rank", overrides.max_rank, "Rank cap");
  run->add_option("--workers", overrides.workers, "Worker threads");
  run->add_option("--seed", overrides.seed, "Initial-state seed");
  run->add_option("--output-dir", overrides.output_dir, "Output directory");
  run->add_option("--prefix", overrides.prefix, "Output file prefix");

  std::string cmp_a, cmp_b, cmp_out = "comparison";
  auto* compare = app.add_subcommand("compare", "Run two configs on the same model and align them");
  compare->add_option("config_a", cmp_a, "Baseline config")->required()->check(CLI::ExistingFile);
  compare->add_option("config_b", cmp_b, "Contender config")->required()->check(CLI::ExistingFile);
  compare->add_option("--output", cmp_out, "Output prefix for the comparison files");

  std::string oracle_config, oracle_kind = "tfim";
  ModelSpec oracle_spec;
  auto* oracle = app.add_subcommand("oracle", "Dense ground-state energy and separation ranks");
  oracle->add_option("--config", oracle_config, "Take the model from this config")->check(CLI::ExistingFile);
  oracle->add_option("--model", oracle_kind, "tfim, heisenberg, random-symmetric or from-file");
  oracle->add_option("--sites", oracle_spec.d, "Number of sites");
  oracle->add_option("--coupling", oracle_spec.J, "Coupling J");
  oracle->add_option("--field", oracle_spec.h, "Transverse field h");
  oracle->add_option("--local-dim", oracle_spec.n, "Local dimension (random-symmetric)");
  oracle->add_option("--op-rank", oracle_spec.R, "Operator rank (random-symmetric)");
  oracle->add_option("--model-seed", oracle_spec.seed, "Operator seed (random-symmetric)");
  oracle->add_option("--path", oracle_spec.path, "Operator file (from-file)");

  std::string ledger_path;
  auto* ledger = app.add_subcommand("ledger-report", "Print a ledger JSON file");
  ledger->add_option("ledger", ledger_path, "Ledger file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_config, overrides);
    if (*compare) return cmd_compare(cmp_a, cmp_b, cmp_out);
    if (*oracle) {
      ModelSpec spec = oracle_spec;
      if (!oracle_config.empty()) {
        spec = load_config(oracle_config).model;
      } else {
        spec.kind = parse_model_kind(oracle_kind);
      }
      return cmd_oracle(spec);
    }
    if (*ledger) return cmd_ledger_report(ledger_path);
  } catch (const CapExceeded& e) {
    std::fprintf(stderr, "error: %s\nraise A2DMRG_ORACLE_CAP to allow larger dense references\n", e.what());
    return 3;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
