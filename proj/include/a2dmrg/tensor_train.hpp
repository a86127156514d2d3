#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/tensor.hpp"

namespace a2dmrg {

/// Orthogonality pattern of a tensor train. Sites are 0-based: a
/// site-orthogonal(i) train has left-orthonormal cores at j < i and
/// right-orthonormal cores at j > i. Left-orthogonal is site(d-1),
/// right-orthogonal is site(0).
struct Gauge {
  enum class Kind { none, site };
  Kind kind = Kind::none;
  std::size_t center = 0;

  static Gauge none() { return {}; }
  static Gauge site(std::size_t i) { return {Kind::site, i}; }
  bool is_site(std::size_t i) const { return kind == Kind::site && center == i; }
  bool operator==(const Gauge&) const = default;
};

/// Tensor train with cores of shape (r_{j-1}, n_j, r_j) and r_0 = r_d = 1.
/// Immutable once constructed.
class TensorTrain {
 public:
  TensorTrain() = default;
  explicit TensorTrain(std::vector<Tensor> cores, Gauge gauge = Gauge::none());

  std::size_t order() const { return cores_.size(); }
  const std::vector<Tensor>& cores() const { return cores_; }
  const Tensor& core(std::size_t j) const { return cores_.at(j); }
  std::size_t dim(std::size_t j) const { return cores_.at(j).dim(1); }
  /// Bond rank r_b for b = 0..d (r_0 = r_d = 1).
  std::size_t rank(std::size_t b) const;
  std::vector<std::size_t> dims() const;
  std::vector<std::size_t> ranks() const;
  std::size_t max_rank() const;
  const Gauge& gauge() const { return gauge_; }
  bool is_left_orthogonal() const { return gauge_.is_site(order() - 1); }
  bool is_right_orthogonal() const { return gauge_.is_site(0); }
  std::size_t full_size() const;

 private:
  std::vector<Tensor> cores_;
  Gauge gauge_;
};

/// Dense cap in entries; overridable through the A2DMRG_ORACLE_CAP
/// environment variable. Defaults to 2^20.
std::size_t default_oracle_cap();

/// Full contraction, entries in row-major order over (x_1..x_d).
Tensor contract_full(const TensorTrain& tt, std::size_t cap = default_oracle_cap());

double inner(const TensorTrain& x, const TensorTrain& y, CostLedger* ledger = nullptr);
double norm(const TensorTrain& x, CostLedger* ledger = nullptr);

TensorTrain scale(const TensorTrain& x, double alpha);
/// Block-diagonal sum; ranks add at interior bonds.
TensorTrain add(const TensorTrain& x, const TensorTrain& y);

TensorTrain orthogonalize(const TensorTrain& tt, std::size_t center,
                          CostLedger* ledger = nullptr);

/// Largest entrywise deviation of the unfolding Gram matrices from the
/// identity for the site-orthogonal(center) pattern.
double orthogonality_defect(const TensorTrain& tt, std::size_t center);

/// All d site-orthogonal configurations of a left-orthogonal train, sharing
/// left cores U_j (j < d-1), centre cores W_i and right cores V_j (j > 0).
struct OrthogonalFamily {
  std::vector<Tensor> left;    // left[j] for j = 0..d-2
  std::vector<Tensor> center;  // center[i] for i = 0..d-1
  std::vector<Tensor> right;   // right[j] for j = 1..d-1; right[0] unused

  std::size_t order() const { return center.size(); }
  std::size_t rank(std::size_t b) const;
  /// (U_0..U_{i-1}, W_i, V_{i+1}..V_{d-1}), site-orthogonal(i).
  TensorTrain configuration(std::size_t i) const;
  /// Configuration i with its centre core replaced.
  TensorTrain with_center(std::size_t i, const Tensor& core) const;
  /// (U_0..U_{i-1}, a, b, V_{i+2}..V_{d-1}); ranks may change at bond i+1.
  TensorTrain with_pair(std::size_t i, const Tensor& a, const Tensor& b) const;
};

/// Right-to-left LQ sweep over a left-orthogonal train.
OrthogonalFamily orthogonal_family(const TensorTrain& left_orthogonal,
                                   CostLedger* ledger = nullptr);

/// TT rounding. Output is left-orthogonal with ranks bounded by max_ranks
/// (entry b-1 bounds bond b). Each of the d-1 truncations discards at most
/// tol * ||tt|| / sqrt(d-1) in Frobenius norm.
TensorTrain round(const TensorTrain& tt, const std::vector<std::size_t>& max_ranks,
                  double tol, CostLedger* ledger = nullptr);
TensorTrain round(const TensorTrain& tt, std::size_t max_rank, double tol,
                  CostLedger* ledger = nullptr);

/// TT-SVD of a dense tensor with the same truncation rule as `round`.
TensorTrain tt_svd(const Tensor& dense, std::size_t max_rank, double tol);

/// Cores with i.i.d. standard normal entries. `ranks` holds the d-1 interior
/// bond ranks.
TensorTrain random_tt(const std::vector<std::size_t>& dims,
                      const std::vector<std::size_t>& ranks, std::uint64_t seed);

/// Numerical ranks of the canonical unfoldings (s_i > rel_tol * s_max).
std::vector<std::size_t> separation_ranks(const Tensor& dense, double rel_tol = 1e-10);

/// Applies invertible bond matrices: core j is right-multiplied by mats[j]
/// and core j+1 left-multiplied by its inverse (j = 0..d-2).
TensorTrain gauge_transform(const TensorTrain& tt, const std::vector<RowMatrix>& mats);

/// Contracts core a (r0, n1, r1) with core b (r1, n2, r2) into (r0, n1, n2, r2).
Tensor merge_cores(const Tensor& a, const Tensor& b, CostLedger* ledger = nullptr,
                   OpClass cls = OpClass::other);

}  // namespace a2dmrg
