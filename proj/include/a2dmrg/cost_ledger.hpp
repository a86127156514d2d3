#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>

namespace a2dmrg {

/// Operation classes tracked by the ledger.
enum class OpClass : std::size_t {
  env_build,
  env_update,
  matvec,
  qr,
  svd,
  inner,
  coarse_assembly,
  eigensolve,
  other,
};

inline constexpr std::size_t kOpClassCount = 9;

std::string_view op_class_name(OpClass cls);

/// Snapshot of a ledger, suitable for reporting.
struct LedgerReport {
  std::uint64_t sequential_flops = 0;
  std::uint64_t max_worker_flops = 0;
  std::uint64_t cost_per_processor = 0;
  std::uint64_t total_flops = 0;
  std::size_t rounds = 0;
  std::array<std::uint64_t, kOpClassCount> class_flops{};
  std::map<std::size_t, std::uint64_t> worker_flops;

  /// Single-processor cost divided by the parallel cost.
  double parallel_speedup() const;
};

/// Analytic flop counter.
///
/// Charges without a worker id go to the sequential pool. Charges with a
/// worker id go to that worker's counter for the current round. A round is
/// one parallel phase bracketed by gather points (one A2DMRG global iteration
/// covering Steps 2 and 3). `close_round` folds the most expensive worker of
/// the round into the parallel critical path, so the cost per processor of a
/// multi-iteration run is the sum over iterations of
/// `sequential + max_worker`.
class CostLedger {
 public:
  void charge(OpClass cls, std::uint64_t flops,
              std::optional<std::size_t> worker = std::nullopt);

  /// Adds every flop recorded in `local` to `worker` (or to the sequential
  /// pool when `worker` is empty). Class totals are merged as well.
  void absorb(const CostLedger& local, std::optional<std::size_t> worker);

  void close_round();

  std::uint64_t sequential_flops() const { return sequential_; }
  std::uint64_t max_worker_flops() const;
  std::uint64_t cost_per_processor() const {
    return sequential_ + max_worker_flops();
  }
  std::uint64_t total_flops() const { return total_; }
  std::uint64_t class_flops(OpClass cls) const {
    return by_class_[static_cast<std::size_t>(cls)];
  }
  const std::map<std::size_t, std::uint64_t>& worker_totals() const {
    return worker_totals_;
  }

  LedgerReport report() const;

 private:
  std::uint64_t current_round_max() const;

  std::uint64_t sequential_ = 0;
  std::uint64_t total_ = 0;
  std::uint64_t closed_parallel_ = 0;
  std::size_t rounds_ = 0;
  std::array<std::uint64_t, kOpClassCount> by_class_{};
  std::map<std::size_t, std::uint64_t> round_workers_;
  std::map<std::size_t, std::uint64_t> worker_totals_;
};

/// Charges `flops` to `ledger` if it is non-null.
inline void charge(CostLedger* ledger, OpClass cls, std::uint64_t flops) {
  if (ledger != nullptr) ledger->charge(cls, flops);
}

namespace flops {
inline std::uint64_t gemm(std::uint64_t m, std::uint64_t n, std::uint64_t k) {
  return 2 * m * n * k;
}
/// Householder QR of an m x n matrix (either orientation).
std::uint64_t qr(std::uint64_t m, std::uint64_t n);
/// Thin SVD, 14 m n^2 with m >= n.
std::uint64_t svd(std::uint64_t m, std::uint64_t n);
/// Symmetric eigendecomposition with vectors.
inline std::uint64_t sym_eig(std::uint64_t n) { return 9 * n * n * n; }
}  // namespace flops

}  // namespace a2dmrg
