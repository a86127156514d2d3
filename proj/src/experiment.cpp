#include "a2dmrg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "a2dmrg/errors.hpp"

namespace a2dmrg {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ParseError("unknown key '" + where + it.key() + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError("key '" + where + key + "' has the wrong type");
  }
}

CoarseBasis parse_basis(const std::string& s) {
  if (s == "orthogonalized_updates") return CoarseBasis::orthogonalized_updates;
  if (s == "members") return CoarseBasis::members;
  throw ParseError("unknown coarse basis '" + s + "'");
}

CoarseSolver parse_solver(const std::string& s) {
  if (s == "direct") return CoarseSolver::direct;
  if (s == "krylov") return CoarseSolver::krylov;
  throw ParseError("unknown coarse solver '" + s + "'");
}

TwoSiteCompression parse_compression(const std::string& s) {
  if (s == "fit") return TwoSiteCompression::fit;
  if (s == "sum_round") return TwoSiteCompression::sum_round;
  if (s == "block_round") return TwoSiteCompression::block_round;
  throw ParseError("unknown compression method '" + s + "'");
}

bool is_one_site(Algorithm a) { return a == Algorithm::dmrg1 || a == Algorithm::a2dmrg1; }
bool is_a2dmrg(Algorithm a) { return a == Algorithm::a2dmrg1 || a == Algorithm::a2dmrg2; }

std::string join(const std::vector<std::size_t>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw Error("write to '" + p.string() + "' failed");
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::dmrg1: return "dmrg1";
    case Algorithm::dmrg2: return "dmrg2";
    case Algorithm::a2dmrg1: return "a2dmrg1";
    case Algorithm::a2dmrg2: return "a2dmrg2";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "dmrg1") return Algorithm::dmrg1;
  if (name == "dmrg2") return Algorithm::dmrg2;
  if (name == "a2dmrg1") return Algorithm::a2dmrg1;
  if (name == "a2dmrg2") return Algorithm::a2dmrg2;
  throw ParseError("unknown algorithm '" + name + "' (expected dmrg1, dmrg2, a2dmrg1 or a2dmrg2)");
}

void ExperimentConfig::validate() const {
  if (model.d < 2) throw ParseError("model.d must be at least 2");
  if (model.kind == ModelKind::random_symmetric && (model.n < 1 || model.R < 1)) {
    throw ParseError("model.n and model.R must be positive");
  }
  if (model.kind == ModelKind::from_file && model.path.empty()) throw ParseError("model.path is required for from-file");
  if (max_rank < 1) throw ParseError("ranks.max must be at least 1");
  for (double t : {eig_tol, svd_tol, energy_rel_tol, coarse_eps, fit_tol}) {
    if (!(t > 0.0)) throw ParseError("tolerances must be positive");
  }
  if (workers < 1) throw ParseError("workers must be at least 1");
  if (max_iterations < 1) throw ParseError("max_iterations must be at least 1");
}

std::size_t ExperimentConfig::effective_initial_rank() const {
  if (initial_rank > 0) return initial_rank;
  return is_one_site(algorithm) ? max_rank : std::min<std::size_t>(2, max_rank);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("config must be a JSON object");
  reject_unknown(root, {"model", "algorithm", "ranks", "tolerances", "max_iterations", "lanczos_max_iter",
                        "seed", "workers", "dmrg", "a2dmrg", "output"},
                 "");
  ExperimentConfig c;
  if (!root.contains("model")) throw ParseError("missing key 'model'");
  const json& m = root.at("model");
  if (!m.is_object()) throw ParseError("'model' must be an object");
  reject_unknown(m, {"kind", "d", "J", "h", "n", "R", "seed", "path"}, "model.");
  std::string kind = "tfim";
  read(m, "kind", kind, "model.");
  c.model.kind = parse_model_kind(kind);
  read(m, "d", c.model.d, "model.");
  read(m, "J", c.model.J, "model.");
  read(m, "h", c.model.h, "model.");
  read(m, "n", c.model.n, "model.");
  read(m, "R", c.model.R, "model.");
  read(m, "seed", c.model.seed, "model.");
  read(m, "path", c.model.path, "model.");

  if (!root.contains("algorithm")) throw ParseError("missing key 'algorithm'");
  std::string alg;
  read(root, "algorithm", alg, "");
  c.algorithm = parse_algorithm(alg);

  if (root.contains("ranks")) {
    const json& r = root.at("ranks");
    reject_unknown(r, {"initial", "max"}, "ranks.");
    read(r, "initial", c.initial_rank, "ranks.");
    read(r, "max", c.max_rank, "ranks.");
  }
  if (root.contains("tolerances")) {
    const json& t = root.at("tolerances");
    reject_unknown(t, {"eig", "svd", "energy_rel", "coarse_eps", "fit"}, "tolerances.");
    read(t, "eig", c.eig_tol, "tolerances.");
    read(t, "svd", c.svd_tol, "tolerances.");
    read(t, "energy_rel", c.energy_rel_tol, "tolerances.");
    read(t, "coarse_eps", c.coarse_eps, "tolerances.");
    read(t, "fit", c.fit_tol, "tolerances.");
  }
  read(root, "max_iterations", c.max_iterations, "");
  read(root, "lanczos_max_iter", c.lanczos_max_iter, "");
  read(root, "seed", c.seed, "");
  read(root, "workers", c.workers, "");
  if (root.contains("dmrg")) {
    const json& dm = root.at("dmrg");
    reject_unknown(dm, {"environments"}, "dmrg.");
    std::string s;
    if (dm.contains("environments")) {
      read(dm, "environments", s, "dmrg.");
      if (s == "stored") {
        c.environments = EnvironmentPolicy::stored;
      } else if (s == "rebuilt") {
        c.environments = EnvironmentPolicy::rebuilt;
      } else {
        throw ParseError("unknown environment policy '" + s + "' (expected stored or rebuilt)");
      }
    }
  }
  if (root.contains("a2dmrg")) {
    const json& a = root.at("a2dmrg");
    reject_unknown(a, {"coarse_basis", "coarse_solver", "compression", "normalize_members", "max_fit_iters"},
                   "a2dmrg.");
    std::string s;
    if (a.contains("coarse_basis")) {
      read(a, "coarse_basis", s, "a2dmrg.");
      c.coarse_basis = parse_basis(s);
    }
    if (a.contains("coarse_solver")) {
      read(a, "coarse_solver", s, "a2dmrg.");
      c.coarse_solver = parse_solver(s);
    }
    if (a.contains("compression")) {
      read(a, "compression", s, "a2dmrg.");
      c.compression = parse_compression(s);
    }
    read(a, "normalize_members", c.normalize_members, "a2dmrg.");
    read(a, "max_fit_iters", c.max_fit_iters, "a2dmrg.");
  }
  if (root.contains("output")) {
    const json& o = root.at("output");
    reject_unknown(o, {"dir", "prefix"}, "output.");
    read(o, "dir", c.output_dir, "output.");
    read(o, "prefix", c.output_prefix, "output.");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string model_to_json(const ModelSpec& m) {
  json j;
  j["kind"] = model_kind_name(m.kind);
  j["d"] = m.d;
  switch (m.kind) {
    case ModelKind::tfim:
      j["J"] = m.J;
      j["h"] = m.h;
      break;
    case ModelKind::heisenberg:
      j["J"] = m.J;
      break;
    case ModelKind::random_symmetric:
      j["n"] = m.n;
      j["R"] = m.R;
      j["seed"] = m.seed;
      break;
    case ModelKind::from_file:
      j["path"] = m.path;
      break;
  }
  return j.dump();
}

std::optional<double> ExperimentResult::relative_error() const {
  if (!reference_energy) return std::nullopt;
  return std::abs(final_energy - *reference_energy) / std::max(std::abs(*reference_energy), 1e-300);
}

TensorTrain initial_state(const ExperimentConfig& config, const std::vector<std::size_t>& dims) {
  const std::size_t d = dims.size();
  const std::size_t want = config.effective_initial_rank();
  std::vector<std::size_t> ranks;
  double left = 1.0;
  for (std::size_t b = 1; b < d; ++b) {
    left *= static_cast<double>(dims[b - 1]);
    double right = 1.0;
    for (std::size_t j = b; j < d; ++j) right *= static_cast<double>(dims[j]);
    const double cap = std::min({left, right, static_cast<double>(want)});
    ranks.push_back(static_cast<std::size_t>(cap));
  }
  return random_tt(dims, ranks, config.seed);
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool with_reference) {
  config.validate();
  const MpOperator op = build_model(config.model);
  ExperimentResult res;
  res.config = config;

  if (with_reference) {
    try {
      res.reference_energy = dense_ground_state(op).energy;
      res.reference_note = "oracle";
    } catch (const CapExceeded& e) {
      res.reference_note = std::string("oracle unavailable: ") + e.what();
    }
  } else {
    res.reference_note = "oracle not requested";
  }

  const TensorTrain init = initial_state(config, op.dims());
  CostLedger ledger;
  if (!is_a2dmrg(config.algorithm)) {
    SweepConfig sc;
    sc.mode = is_one_site(config.algorithm) ? SiteMode::one_site : SiteMode::two_site;
    sc.max_rank = config.max_rank;
    sc.svd_tol = config.svd_tol;
    sc.eig_tol = config.eig_tol;
    sc.energy_rel_tol = config.energy_rel_tol;
    sc.max_half_sweeps = config.max_iterations;
    sc.lanczos_max_iter = config.lanczos_max_iter;
    sc.environments = config.environments;
    DmrgResult r = run_dmrg(init, op, sc, &ledger);
    res.final_energy = r.energy;
    res.converged = r.trace.converged;
    res.iterations = r.trace.half_sweep_energies.size();
    res.final_ranks = r.state.ranks();
    std::size_t step = 0;
    for (std::size_t h = 0; h < res.iterations; ++h) {
      IterationRow row;
      row.iteration = h + 1;
      row.energy = r.trace.half_sweep_energies[h];
      row.total_flops = r.trace.half_sweep_flops[h];
      row.flops_seq = row.total_flops;
      row.cost_per_processor = row.total_flops;
      while (step < r.trace.steps.size() && r.trace.steps[step].half_sweep == h) {
        row.lanczos_iters.push_back(r.trace.steps[step].lanczos_iters);
        ++step;
      }
      res.rows.push_back(std::move(row));
    }
    res.dmrg_trace = std::move(r.trace);
  } else {
    A2dmrgConfig ac;
    ac.mode = is_one_site(config.algorithm) ? SiteMode::one_site : SiteMode::two_site;
    ac.max_rank = config.max_rank;
    ac.svd_tol = config.svd_tol;
    ac.eig_tol = config.eig_tol;
    ac.energy_rel_tol = config.energy_rel_tol;
    ac.max_iterations = config.max_iterations;
    ac.lanczos_max_iter = config.lanczos_max_iter;
    ac.coarse_eps = config.coarse_eps;
    ac.coarse_basis = config.coarse_basis;
    ac.normalize_members = config.normalize_members;
    ac.coarse_solver = config.coarse_solver;
    ac.compression = config.compression;
    ac.fit_tol = config.fit_tol;
    ac.max_fit_iters = config.max_fit_iters;
    ac.workers = config.workers;
    A2dmrgResult r = run_a2dmrg(init, op, ac, &ledger);
    res.final_energy = r.energy;
    res.converged = r.trace.converged;
    res.iterations = r.trace.iterations.size();
    res.final_ranks = r.state.ranks();
    for (const A2dmrgIteration& it : r.trace.iterations) {
      IterationRow row;
      row.iteration = it.iteration;
      row.energy = it.energy;
      row.flops_seq = it.flops_seq;
      row.flops_max_worker = it.flops_max_worker;
      row.cost_per_processor = it.cost_per_processor;
      row.total_flops = it.total_flops;
      row.lanczos_iters = it.lanczos_iters;
      res.rows.push_back(std::move(row));
    }
    res.a2dmrg_trace = std::move(r.trace);
  }
  res.ledger = ledger.report();
  return res;
}

std::string ledger_to_json(const LedgerReport& report) {
  json j;
  j["sequential_flops"] = report.sequential_flops;
  j["max_worker_flops"] = report.max_worker_flops;
  j["cost_per_processor"] = report.cost_per_processor;
  j["total_flops"] = report.total_flops;
  j["rounds"] = report.rounds;
  j["parallel_speedup"] = report.parallel_speedup();
  json classes = json::object();
  for (std::size_t c = 0; c < kOpClassCount; ++c) {
    classes[std::string(op_class_name(static_cast<OpClass>(c)))] = report.class_flops[c];
  }
  j["class_flops"] = classes;
  json workers = json::object();
  for (const auto& [id, f] : report.worker_flops) workers[std::to_string(id)] = f;
  j["worker_flops"] = workers;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_outputs(const ExperimentResult& result) {
  const ExperimentConfig& c = result.config;
  const std::filesystem::path dir(c.output_dir);
  std::filesystem::create_directories(dir);
  const auto path = [&](const std::string& suffix) { return dir / (c.output_prefix + suffix); };
  auto err = [&](double e) -> std::string {
    if (!result.reference_energy) return "";
    return fmt(std::abs(e - *result.reference_energy) / std::max(std::abs(*result.reference_energy), 1e-300));
  };

  std::ostringstream trace;
  if (result.dmrg_trace) {
    trace << "half_sweep,site,energy,lanczos_iters,discarded_weight,flops_cum\n";
    for (const MicroStepRecord& s : result.dmrg_trace->steps) {
      trace << s.half_sweep + 1 << ',' << s.site + 1 << ',' << fmt(s.energy) << ',' << s.lanczos_iters << ','
            << fmt(s.discarded_weight) << ',' << s.flops_cum << '\n';
    }
  } else if (result.a2dmrg_trace) {
    trace << "global_iter,energy,energy_error_vs_reference,coarse_p,krylov_iters,lanczos_iters,flops_seq,"
             "flops_max_worker,cost_per_processor,coarse_energy,prev_energy,min_member_energy,coarse_dim,"
             "fit_sweeps,ranks\n";
    for (const A2dmrgIteration& it : result.a2dmrg_trace->iterations) {
      trace << it.iteration << ',' << fmt(it.energy) << ',' << err(it.energy) << ',' << it.coarse_p << ','
            << it.krylov_iterations << ',' << join(it.lanczos_iters, ';') << ',' << it.flops_seq << ','
            << it.flops_max_worker << ',' << it.cost_per_processor << ',' << fmt(it.coarse_energy) << ','
            << fmt(it.prev_energy) << ',' << fmt(it.min_member_energy) << ',' << it.coarse_dim << ','
            << it.fit_sweeps << ',' << join(it.ranks, ';') << '\n';
    }
  }

  std::ostringstream iters;
  iters << "global_iter,energy,energy_error_vs_reference,lanczos_iters,flops_seq,flops_max_worker,"
           "cost_per_processor,total_flops\n";
  for (const IterationRow& r : result.rows) {
    iters << r.iteration << ',' << fmt(r.energy) << ',' << err(r.energy) << ',' << join(r.lanczos_iters, ';')
          << ',' << r.flops_seq << ',' << r.flops_max_worker << ',' << r.cost_per_processor << ','
          << r.total_flops << '\n';
  }

  json summary;
  summary["algorithm"] = algorithm_name(c.algorithm);
  summary["model"] = json::parse(model_to_json(c.model));
  summary["final_energy"] = result.final_energy;
  summary["reference_energy"] = result.reference_energy ? json(*result.reference_energy) : json(nullptr);
  summary["reference_note"] = result.reference_note;
  const auto rel = result.relative_error();
  summary["relative_error"] = rel ? json(*rel) : json(nullptr);
  summary["iterations"] = result.iterations;
  summary["converged"] = result.converged;
  summary["final_ranks"] = result.final_ranks;
  summary["cost_per_processor"] = result.ledger.cost_per_processor;
  summary["total_flops"] = result.ledger.total_flops;
  summary["workers"] = c.workers;

  std::vector<std::string> out;
  const std::vector<std::pair<std::string, std::string>> files{
      {"_trace.csv", trace.str()},
      {"_iterations.csv", iters.str()},
      {"_ledger.json", ledger_to_json(result.ledger)},
      {"_summary.json", summary.dump(2) + "\n"},
  };
  for (const auto& [suffix, content] : files) {
    write_file(path(suffix), content);
    out.push_back(path(suffix).string());
  }
  return out;
}

ComparisonResult compare_runs(const ExperimentResult& a, const ExperimentResult& b) {
  if (model_to_json(a.config.model) != model_to_json(b.config.model)) {
    throw ParseError("compare: the two runs use different models");
  }
  ComparisonResult cr;
  if (a.reference_energy) {
    cr.reference_energy = *a.reference_energy;
    cr.reference_is_oracle = true;
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (const auto* r : {&a, &b})
      for (const IterationRow& row : r->rows) best = std::min(best, row.energy);
    cr.reference_energy = best;
  }
  const double scale = std::max(std::abs(cr.reference_energy), 1e-300);
  auto error = [&](double e) { return std::abs(e - cr.reference_energy) / scale; };

  std::ostringstream csv;
  csv << "iteration,error_A,error_B,cpp_A,cpp_B,speedup\n";
  const std::size_t n = std::max(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < n; ++i) {
    csv << i + 1 << ',';
    const IterationRow* ra = i < a.rows.size() ? &a.rows[i] : nullptr;
    const IterationRow* rb = i < b.rows.size() ? &b.rows[i] : nullptr;
    csv << (ra ? fmt(error(ra->energy)) : "") << ',' << (rb ? fmt(error(rb->energy)) : "") << ',';
    csv << (ra ? std::to_string(ra->cost_per_processor) : "") << ','
        << (rb ? std::to_string(rb->cost_per_processor) : "") << ',';
    if (ra && rb && rb->cost_per_processor > 0) {
      csv << fmt(static_cast<double>(ra->cost_per_processor) / static_cast<double>(rb->cost_per_processor));
    }
    csv << '\n';
  }
  cr.csv = csv.str();

  // Matched error: the accuracy both runs achieve, then the cost each needed.
  double final_a = a.rows.empty() ? 1.0 : error(a.rows.back().energy);
  double final_b = b.rows.empty() ? 1.0 : error(b.rows.back().energy);
  cr.matched_error = std::max(final_a, final_b);
  auto cost_at = [&](const ExperimentResult& r) -> std::optional<double> {
    for (const IterationRow& row : r.rows) {
      if (error(row.energy) <= cr.matched_error) return static_cast<double>(row.cost_per_processor);
    }
    return std::nullopt;
  };
  cr.cost_a_at_match = cost_at(a);
  cr.cost_b_at_match = cost_at(b);
  if (cr.cost_a_at_match && cr.cost_b_at_match && *cr.cost_b_at_match > 0.0) {
    cr.matched_speedup = *cr.cost_a_at_match / *cr.cost_b_at_match;
  }
  json s;
  s["algorithm_A"] = algorithm_name(a.config.algorithm);
  s["algorithm_B"] = algorithm_name(b.config.algorithm);
  s["reference_energy"] = cr.reference_energy;
  s["reference_is_oracle"] = cr.reference_is_oracle;
  if (!cr.reference_is_oracle) s["reference_note"] = "best energy achieved by either run";
  s["final_error_A"] = final_a;
  s["final_error_B"] = final_b;
  s["matched_error"] = cr.matched_error;
  s["cpp_A_at_matched_error"] = cr.cost_a_at_match ? json(*cr.cost_a_at_match) : json(nullptr);
  s["cpp_B_at_matched_error"] = cr.cost_b_at_match ? json(*cr.cost_b_at_match) : json(nullptr);
  s["speedup_at_matched_error"] = cr.matched_speedup ? json(*cr.matched_speedup) : json(nullptr);
  cr.summary_json = s.dump(2) + "\n";
  return cr;
}

}  // namespace a2dmrg
