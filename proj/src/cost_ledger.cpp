#include "a2dmrg/cost_ledger.hpp"

#include <algorithm>

namespace a2dmrg {

std::string_view op_class_name(OpClass cls) {
  switch (cls) {
    case OpClass::env_build: return "env_build";
    case OpClass::env_update: return "env_update";
    case OpClass::matvec: return "matvec";
    case OpClass::qr: return "qr";
    case OpClass::svd: return "svd";
    case OpClass::inner: return "inner";
    case OpClass::coarse_assembly: return "coarse_assembly";
    case OpClass::eigensolve: return "eigensolve";
    case OpClass::other: return "other";
  }
  return "unknown";
}

double LedgerReport::parallel_speedup() const {
  if (cost_per_processor == 0) return 1.0;
  return static_cast<double>(total_flops) /
         static_cast<double>(cost_per_processor);
}

void CostLedger::charge(OpClass cls, std::uint64_t flops,
                        std::optional<std::size_t> worker) {
  if (flops == 0) return;
  by_class_[static_cast<std::size_t>(cls)] += flops;
  total_ += flops;
  if (worker) {
    round_workers_[*worker] += flops;
    worker_totals_[*worker] += flops;
  } else {
    sequential_ += flops;
  }
}

void CostLedger::absorb(const CostLedger& local,
                        std::optional<std::size_t> worker) {
  for (std::size_t c = 0; c < kOpClassCount; ++c) by_class_[c] += local.by_class_[c];
  const std::uint64_t amount = local.total_;
  total_ += amount;
  if (amount == 0) return;
  if (worker) {
    round_workers_[*worker] += amount;
    worker_totals_[*worker] += amount;
  } else {
    sequential_ += amount;
  }
}

std::uint64_t CostLedger::current_round_max() const {
  std::uint64_t best = 0;
  for (const auto& [id, f] : round_workers_) best = std::max(best, f);
  return best;
}

void CostLedger::close_round() {
  closed_parallel_ += current_round_max();
  round_workers_.clear();
  ++rounds_;
}

std::uint64_t CostLedger::max_worker_flops() const {
  return closed_parallel_ + current_round_max();
}

LedgerReport CostLedger::report() const {
  LedgerReport r;
  r.sequential_flops = sequential_;
  r.max_worker_flops = max_worker_flops();
  r.cost_per_processor = cost_per_processor();
  r.total_flops = total_;
  r.rounds = rounds_;
  r.class_flops = by_class_;
  r.worker_flops = worker_totals_;
  return r;
}

namespace flops {

std::uint64_t qr(std::uint64_t m, std::uint64_t n) {
  const std::uint64_t big = std::max(m, n);
  const std::uint64_t small = std::min(m, n);
  // 2 m n^2 - 2 n^3 / 3 for m >= n, plus forming the thin factor.
  return 2 * big * small * small - (2 * small * small * small) / 3 +
         2 * big * small * small;
}

std::uint64_t svd(std::uint64_t m, std::uint64_t n) {
  const std::uint64_t big = std::max(m, n);
  const std::uint64_t small = std::min(m, n);
  return 14 * big * small * small;
}

}  // namespace flops
}  // namespace a2dmrg
