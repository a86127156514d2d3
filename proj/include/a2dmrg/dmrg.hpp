#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/eigensolvers.hpp"
#include "a2dmrg/mpo.hpp"
#include "a2dmrg/tensor_train.hpp"

namespace a2dmrg {

enum class SiteMode { one_site, two_site };

/// How the sweep obtains the environment on the far side of the active site.
enum class EnvironmentPolicy {
  /// All environments are kept in memory and updated after each micro-step.
  stored,
  /// Memory-limited variant: the near-side environment is updated on the fly
  /// while the far-side one is rebuilt from the boundary at every micro-step.
  /// Iterates are identical to `stored`; only the charged cost differs.
  rebuilt,
};

struct SweepConfig {
  SiteMode mode = SiteMode::two_site;
  std::size_t max_rank = 16;      // two-site truncation cap
  double svd_tol = 1e-6;          // relative singular value cut-off
  double eig_tol = 1e-6;          // Lanczos relative residual
  double energy_rel_tol = 1e-6;   // stop when |E_k - E_{k-1}| <= tol * |E_k|
  std::size_t max_half_sweeps = 50;
  std::size_t lanczos_max_iter = 200;
  EnvironmentPolicy environments = EnvironmentPolicy::stored;

  void validate() const;
};

struct MicroStepRecord {
  std::size_t half_sweep = 0;
  std::size_t site = 0;  // 0-based; for two-site steps the left site of the pair
  double energy = 0.0;
  std::size_t lanczos_iters = 0;
  bool lanczos_converged = true;
  double discarded_weight = 0.0;
  std::uint64_t flops_cum = 0;
};

struct SweepTrace {
  std::vector<MicroStepRecord> steps;
  double initial_energy = 0.0;
  std::vector<double> half_sweep_energies;
  std::vector<std::uint64_t> half_sweep_flops;  // cumulative ledger total after each half-sweep
  bool converged = false;
  LedgerReport ledger;
};

struct MicroStepResult {
  Tensor tensor;  // new centre core (one-site) or merged block (two-site)
  LanczosResult eig;
};

/// One-site micro-step at site i of a site-orthogonal(i) state. The warm
/// start defaults to the current centre core.
MicroStepResult micro_step_1site(const TensorTrain& state, const MpOperator& op, std::size_t i,
                                 const LanczosOptions& options, CostLedger* ledger = nullptr);
/// Same with explicit environments (used by the sweeping driver).
MicroStepResult micro_step_1site(const Environment& left, const Tensor& op_core,
                                 const Environment& right, const Tensor& warm_start,
                                 const LanczosOptions& options, CostLedger* ledger = nullptr);

/// Two-site micro-step on sites k, k+1 of a site-orthogonal(k) state. The
/// warm start is the merged block of the current cores k, k+1.
MicroStepResult micro_step_2site(const TensorTrain& state, const MpOperator& op, std::size_t k,
                                 const LanczosOptions& options, CostLedger* ledger = nullptr);
MicroStepResult micro_step_2site(const Environment& left, const Tensor& op_core_k,
                                 const Tensor& op_core_k1, const Environment& right,
                                 const Tensor& warm_start, const LanczosOptions& options,
                                 CostLedger* ledger = nullptr);

enum class ShiftDirection { left_to_right, right_to_left };

struct SplitResult {
  Tensor left;   // (r_{k-1}, n_k, s)
  Tensor right;  // (s, n_{k+1}, r_{k+1})
  double discarded_weight = 0.0;
};

/// Truncated SVD of a merged block, keeping min(max_rank, #{s_i > svd_tol s_max})
/// values (at least one). Left-to-right leaves the left core orthonormal,
/// right-to-left the right core.
SplitResult split_and_shift(const Tensor& block, ShiftDirection direction, std::size_t max_rank,
                            double svd_tol, CostLedger* ledger = nullptr);

struct DmrgResult {
  TensorTrain state;
  double energy = 0.0;
  SweepTrace trace;
};

/// Classical alternating sweeps. The initial state is brought to
/// right-orthogonal form if it is not already. All flops go to the
/// sequential pool of `ledger` (a private ledger is used when null).
DmrgResult run_dmrg(const TensorTrain& init, const MpOperator& op, const SweepConfig& config,
                    CostLedger* ledger = nullptr);

}  // namespace a2dmrg
