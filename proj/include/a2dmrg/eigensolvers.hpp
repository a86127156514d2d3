#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/tensor.hpp"

namespace a2dmrg {

struct LanczosOptions {
  double tol = 1e-6;             // relative residual: ||Mv - lv|| <= tol * max(1, |l|)
  std::size_t max_iter = 200;    // matrix-vector products
  std::size_t max_restarts = 3;  // fresh random vectors after breakdown
  std::uint64_t seed = 0x5eed;
};

struct LanczosResult {
  double eigenvalue = 0.0;
  Vector eigenvector;
  std::size_t iterations = 0;
  bool converged = false;
  double residual_norm = 0.0;
};

using MatVec = std::function<Vector(const Vector&)>;

/// Lowest eigenpair of a symmetric operator by Lanczos with full
/// reorthogonalization. `iterations` counts operator applications.
LanczosResult lanczos_lowest(const MatVec& matvec, std::size_t dim, const Vector& init,
                             const LanczosOptions& options = {}, CostLedger* ledger = nullptr);

struct DenseEigenpair {
  double eigenvalue = 0.0;
  Vector eigenvector;
};

/// Lowest eigenpair of a dense symmetric matrix.
DenseEigenpair dense_lowest_eig(const RowMatrix& m, CostLedger* ledger = nullptr);

struct SymmetricEigen {
  Vector values;     // ascending
  RowMatrix vectors;  // columns
};
SymmetricEigen dense_sym_eig(const RowMatrix& m, CostLedger* ledger = nullptr);

struct SymmetricSvd {
  RowMatrix v;  // columns, ordered with sigma
  Vector sigma;  // descending
};
/// Decomposition M = V diag(sigma) V^T of a symmetric matrix with sigma in
/// descending order (the eigendecomposition, reordered).
SymmetricSvd dense_sym_svd(const RowMatrix& m, CostLedger* ledger = nullptr);

/// Throws NumericalError when m is not symmetric to 1e-10 relative.
void require_symmetric(const RowMatrix& m);

}  // namespace a2dmrg
