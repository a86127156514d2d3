#pragma once

#include <cstddef>

#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/tensor.hpp"

namespace a2dmrg {

struct QrFactors {
  RowMatrix q;  // m x k, orthonormal columns
  RowMatrix r;  // k x n
};

struct LqFactors {
  RowMatrix l;  // m x k
  RowMatrix q;  // k x n, orthonormal rows
};

struct SvdFactors {
  RowMatrix u;   // m x k
  Vector s;      // k, descending
  RowMatrix vt;  // k x n
};

// Thin factorizations with k = min(m, n). Each orthonormal column (or row,
// for LQ) is sign-fixed so that its largest-magnitude entry is positive.
QrFactors thin_qr(const RowMatrix& m, CostLedger* ledger = nullptr);
LqFactors thin_lq(const RowMatrix& m, CostLedger* ledger = nullptr);
SvdFactors thin_svd(const RowMatrix& m, CostLedger* ledger = nullptr);

// Number of singular values kept under the relative rule
// min(max_rank, #{s_i > rel_tol * s_max}), never below one.
std::size_t relative_truncation_rank(const Vector& s, std::size_t max_rank,
                                     double rel_tol);

// Smallest k <= max_rank whose discarded tail mass sqrt(sum_{i>=k} s_i^2)
// is at most abs_tol, never below one.
std::size_t frobenius_truncation_rank(const Vector& s, std::size_t max_rank,
                                      double abs_tol);

// sqrt of the squared mass of s[k..].
double tail_mass(const Vector& s, std::size_t k);

}  // namespace a2dmrg
