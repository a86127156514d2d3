#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/dmrg.hpp"
#include "a2dmrg/eigensolvers.hpp"
#include "a2dmrg/mpo.hpp"
#include "a2dmrg/structured_sum.hpp"
#include "a2dmrg/tensor_train.hpp"

namespace a2dmrg {

// ---------------------------------------------------------------------------
// Local solves

struct LocalSolveOptions {
  SiteMode mode = SiteMode::two_site;
  std::size_t max_rank = 16;  // per-pair truncation of two-site updates
  double svd_tol = 1e-6;
  LanczosOptions lanczos;
  std::size_t workers = 1;
};

/// Result of one independent micro-step on the shared family.
struct LocalUpdate {
  std::size_t site = 0;   // one-site: the site; two-site: left site of the pair
  Tensor previous;        // W_i, or the merged block W_k V_{k+1}
  Tensor solution;        // new centre core, or the truncated merged block
  Tensor left, right;     // two-site: truncated split of `solution`
  double local_energy = 0.0;  // Lanczos eigenvalue
  std::size_t lanczos_iters = 0;
  bool converged = true;
  double discarded_weight = 0.0;
};

/// Previous iterate (member 0) plus one update per site or pair.
struct LocalUpdateSet {
  SiteMode mode = SiteMode::two_site;
  std::shared_ptr<const OrthogonalFamily> family;
  std::vector<LocalUpdate> updates;

  std::size_t members() const { return updates.size() + 1; }
  /// Member 0 is the previous iterate; member k is the k-th update
  /// substituted into its configuration.
  TensorTrain member(std::size_t k) const;
};

/// Runs the d (one-site) or d-1 (two-site) micro-steps. Task i is charged to
/// worker i of `ledger`; the result does not depend on options.workers.
LocalUpdateSet local_solves(std::shared_ptr<const OrthogonalFamily> family, const MpOperator& op,
                            const LocalSolveOptions& options, CostLedger* ledger = nullptr);
/// Convenience overload that builds the family first (charged sequentially).
LocalUpdateSet local_solves(const TensorTrain& prev_left_orthogonal, const MpOperator& op,
                            const LocalSolveOptions& options, CostLedger* ledger = nullptr);

// ---------------------------------------------------------------------------
// Coarse space and second-level problem

enum class CoarseBasis {
  /// prev / ||prev|| plus, per update, the normalized component of the
  /// update orthogonal to prev within its own retraction range. Spans the
  /// same space as the members and keeps the overlap matrix well conditioned.
  orthogonalized_updates,
  /// The literal members (previous iterate and updated tensors).
  members,
};

/// Basis of the coarse space, stored through the shared family: vector 0 is
/// base_scale * configuration(0), vector k >= 1 replaces the centre core
/// (one-site) or the pair block (two-site) of configuration k-1 by local[k-1].
struct CoarseSpace {
  SiteMode mode = SiteMode::two_site;
  std::shared_ptr<const OrthogonalFamily> family;
  double base_scale = 1.0;
  std::vector<Tensor> local;

  std::size_t size() const { return local.size() + 1; }
  TensorTrain vector(std::size_t k) const;
  /// Tensor train of sum_k c_k vector(k), exact (ranks 2r one-site).
  TensorTrain combination(const Vector& c, CostLedger* ledger = nullptr) const;
  OneSiteSumFamily one_site_family(const Vector& c) const;
  TwoSiteSumFamily two_site_family(const Vector& c) const;
};

CoarseSpace build_coarse_space(const LocalUpdateSet& set, CoarseBasis basis,
                               bool normalize_members = false);

struct Whitening {
  RowMatrix v;      // m x m eigenvectors of S, descending eigenvalues
  Vector sigma;     // eigenvalues of S, descending
  std::size_t p = 0;
  RowMatrix w;      // m x p, V_+ Sigma_+^{-1/2}
};

/// Eigendecomposition of the overlap matrix with relative cut-off eps.
Whitening whiten(const RowMatrix& s, double eps, CostLedger* ledger = nullptr);

struct CoarseProblem {
  RowMatrix S, A;   // overlap and reduced operator
  double eps = 1e-10;
  Whitening whitening;
  std::size_t p = 0;
  Vector coeffs;    // minimizer coefficients in the coarse basis
  double coarse_energy = 0.0;
  std::size_t krylov_iterations = 0;  // K'; zero for the direct path
};

/// Fills S and A by TT contractions. Upper-triangle entry e (row-major over
/// i <= j) is charged to worker e; entries run on options.workers threads.
CoarseProblem assemble_coarse(const CoarseSpace& space, const MpOperator& op, double eps,
                              std::size_t workers = 1, CostLedger* ledger = nullptr);

/// Dense whitened solve. Throws DegenerateSpan when p = 0.
void solve_coarse(CoarseProblem& cp, CostLedger* ledger = nullptr);

/// Whitened coarse operator W^T A W applied to y without assembling A.
Vector coarse_matvec_structured(const CoarseSpace& space, const MpOperator& op,
                                const Whitening& whitening, const Vector& y,
                                CostLedger* ledger = nullptr);

/// Krylov path: assembles S only and runs Lanczos on the structured matvec.
CoarseProblem solve_coarse_krylov(const CoarseSpace& space, const MpOperator& op, double eps,
                                  double tol, std::size_t workers = 1, CostLedger* ledger = nullptr);

// ---------------------------------------------------------------------------
// Compression

/// Materializes the one-site sum (ranks 2r) and rounds it. Left-orthogonal.
TensorTrain compress_one_site(const CoarseSpace& space, const Vector& coeffs, std::size_t max_rank,
                              double tol, CostLedger* ledger = nullptr);

enum class TwoSiteCompression {
  fit,          // one rank-adaptive two-site sweep, then one-site ALS sweeps against the chain
  sum_round,    // pairwise TT addition of all members, then rounding
  block_round,  // exact three-state tensor train of the sum, then rounding
};

struct FitReport {
  std::size_t sweeps = 0;
  bool converged = true;
  double norm_sq = 0.0;  // squared norm of the fitted tensor
};

/// Best approximation of the two-site sum with ranks at most max_rank.
/// Left-orthogonal output.
TensorTrain compress_two_site(const CoarseSpace& space, const Vector& coeffs, std::size_t max_rank,
                              double svd_tol, TwoSiteCompression method, double fit_tol,
                              std::size_t max_fit_iters, CostLedger* ledger = nullptr,
                              FitReport* report = nullptr);

// ---------------------------------------------------------------------------
// Driver

enum class CoarseSolver { direct, krylov };

struct A2dmrgConfig {
  SiteMode mode = SiteMode::two_site;
  std::size_t max_rank = 16;
  double svd_tol = 1e-6;
  double eig_tol = 1e-6;
  double energy_rel_tol = 1e-6;
  std::size_t max_iterations = 200;
  std::size_t lanczos_max_iter = 200;
  double coarse_eps = 1e-10;
  CoarseBasis coarse_basis = CoarseBasis::orthogonalized_updates;
  bool normalize_members = false;
  CoarseSolver coarse_solver = CoarseSolver::direct;
  double coarse_krylov_tol = 1e-10;
  TwoSiteCompression compression = TwoSiteCompression::fit;
  double fit_tol = 1e-8;
  std::size_t max_fit_iters = 20;
  std::size_t workers = 1;

  void validate() const;
};

struct A2dmrgIteration {
  std::size_t iteration = 0;  // 1-based
  double energy = 0.0;        // J of the compressed iterate
  double prev_energy = 0.0;   // J of the iterate entering the iteration
  double coarse_energy = 0.0;
  double min_member_energy = 0.0;  // min over updated members of J
  std::size_t coarse_dim = 0;
  std::size_t coarse_p = 0;
  std::size_t krylov_iterations = 0;
  std::vector<std::size_t> lanczos_iters;  // per site or pair
  std::vector<double> local_energies;
  std::size_t fit_sweeps = 0;
  std::vector<std::size_t> ranks;
  std::uint64_t flops_seq = 0;          // cumulative
  std::uint64_t flops_max_worker = 0;   // cumulative critical path of parallel rounds
  std::uint64_t cost_per_processor = 0; // cumulative
  std::uint64_t total_flops = 0;        // cumulative
};

struct A2dmrgTrace {
  double initial_energy = 0.0;
  std::vector<A2dmrgIteration> iterations;
  bool converged = false;
  LedgerReport ledger;
};

struct A2dmrgResult {
  TensorTrain state;  // left-orthogonal, unit norm
  double energy = 0.0;
  A2dmrgTrace trace;
};

/// Additive two-level iteration. The initial state is brought to
/// left-orthogonal form if needed.
A2dmrgResult run_a2dmrg(const TensorTrain& init, const MpOperator& op, const A2dmrgConfig& config,
                        CostLedger* ledger = nullptr);

}  // namespace a2dmrg
