#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/mpo.hpp"
#include "a2dmrg/tensor.hpp"
#include "a2dmrg/tensor_train.hpp"

namespace a2dmrg {

/// Weighted sum of one-site variations of a single orthogonal family.
///
/// Member 0 is the base configuration(0) = (W_0, V_1, .., V_{d-1}). Member
/// k >= 1 is configuration(k-1) with its centre core replaced by
/// updates[k-1]. coeffs[k] weights member k.
struct OneSiteSumFamily {
  std::shared_ptr<const OrthogonalFamily> family;
  std::vector<Tensor> updates;
  std::vector<double> coeffs;

  std::size_t order() const { return family->order(); }
  std::size_t members() const { return updates.size() + 1; }
  TensorTrain member(std::size_t k) const;
};

/// Tensor train of the weighted sum, with interior ranks exactly 2 r_b.
TensorTrain materialize_one_site_sum(const OneSiteSumFamily& f);

/// Weighted sum of two-site variations of a single orthogonal family.
///
/// Member 0 is the base (the family's common tensor). Member k >= 1 is
/// configuration(k-1) with its sites k-1, k replaced by the merged block
/// blocks[k-1] of shape (r_{k-1}, n_{k-1}, n_k, r_{k+1}).
struct TwoSiteSumFamily {
  std::shared_ptr<const OrthogonalFamily> family;
  std::vector<Tensor> blocks;
  std::vector<double> coeffs;

  std::size_t order() const { return family->order(); }
  std::size_t members() const { return blocks.size() + 1; }
  /// Member k as a tensor train; blocks are split by an exact SVD.
  TensorTrain member(std::size_t k) const;
};

/// Exact SVD split of a block (a, n1, n2, b) into cores (a, n1, s), (s, n2, b)
/// dropping only singular values below 1e-14 sigma_max.
std::pair<Tensor, Tensor> split_block_exact(const Tensor& block, CostLedger* ledger = nullptr);

/// Chain of order-4 blocks C_l(alpha, x_l, x_{l+1}, alpha') whose product over
/// l = 0..d-2 evaluates a tensor entry. Adjacent blocks share a physical mode,
/// so this is not a tensor train.
struct TwoSiteChain {
  std::vector<Tensor> blocks;

  std::size_t order() const { return blocks.size() + 1; }
  std::vector<std::size_t> dims() const;
};

TwoSiteChain build_chain(const TwoSiteSumFamily& f);

/// Dense evaluation, for tests and small instances.
Tensor chain_to_dense(const TwoSiteChain& c, std::size_t cap = default_oracle_cap());

/// <chain, tt>.
double chain_inner(const TwoSiteChain& c, const TensorTrain& tt, CostLedger* ledger = nullptr,
                   OpClass cls = OpClass::inner);
/// <c1, A c2>.
double chain_operator_inner(const TwoSiteChain& c1, const MpOperator& op, const TwoSiteChain& c2,
                            CostLedger* ledger = nullptr, OpClass cls = OpClass::inner);

/// Environments of a chain against a tensor train X.
///
/// Left environment k has shape (alpha_k, n_k, rX_k): blocks 0..k-1 and X
/// cores 0..k-1 contracted, with x_k left open. Right environment k has shape
/// (alpha_k, n_k, rX_{k+1}): blocks k..d-2 and X cores k+1..d-1 contracted,
/// with x_k left open. alpha_k indexes the rows of block k.
Tensor chain_left_boundary(const TwoSiteChain& c);
Tensor chain_right_boundary(const TwoSiteChain& c);
Tensor chain_update_left(const Tensor& env, const Tensor& block, const Tensor& x_core,
                         CostLedger* ledger = nullptr, OpClass cls = OpClass::inner);
Tensor chain_update_right(const Tensor& env, const Tensor& block, const Tensor& x_core_next,
                          CostLedger* ledger = nullptr, OpClass cls = OpClass::inner);
/// Projection of the chain onto site k: shape (rX_k, n_k, rX_{k+1}).
Tensor chain_project_one_site(const Tensor& left, const Tensor& right,
                              CostLedger* ledger = nullptr, OpClass cls = OpClass::inner);
/// Projection onto sites k, k+1: shape (rX_k, n_k, n_{k+1}, rX_{k+2}).
Tensor chain_project_two_site(const Tensor& left, const Tensor& block, const Tensor& right,
                              CostLedger* ledger = nullptr, OpClass cls = OpClass::inner);

/// Exact tensor train of a two-site sum with interior ranks at most
/// r_b + s_{b-1} + r_b, where s_l is the split rank of block l.
TensorTrain materialize_two_site_sum(const TwoSiteSumFamily& f, CostLedger* ledger = nullptr);

/// out(batch, m, n) = sum_k a(batch, m, k) b(batch, k, n).
Tensor batched_matmul(const Tensor& a, const Tensor& b, CostLedger* ledger = nullptr,
                      OpClass cls = OpClass::other);

}  // namespace a2dmrg
