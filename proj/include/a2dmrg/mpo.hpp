#pragma once

#include <cstddef>
#include <vector>

#include "a2dmrg/cost_ledger.hpp"
#include "a2dmrg/tensor.hpp"
#include "a2dmrg/tensor_train.hpp"

namespace a2dmrg {

/// Matrix product operator with cores of shape (R_{j-1}, n_j, n_j, R_j).
/// The first physical leg is the output (row) index, the second the input.
class MpOperator {
 public:
  MpOperator() = default;
  MpOperator(std::vector<Tensor> cores, bool symmetric);

  std::size_t order() const { return cores_.size(); }
  const std::vector<Tensor>& cores() const { return cores_; }
  const Tensor& core(std::size_t j) const { return cores_.at(j); }
  std::size_t dim(std::size_t j) const { return cores_.at(j).dim(1); }
  std::size_t rank(std::size_t b) const;
  std::vector<std::size_t> dims() const;
  std::vector<std::size_t> ranks() const;
  bool symmetric() const { return symmetric_; }
  std::size_t full_dim() const;

 private:
  std::vector<Tensor> cores_;
  bool symmetric_ = false;
};

MpOperator identity_mpo(const std::vector<std::size_t>& dims);
/// Block-diagonal concatenation; op ranks add at interior bonds.
MpOperator mpo_add(const MpOperator& a, const MpOperator& b);
MpOperator mpo_transpose(const MpOperator& op);
MpOperator mpo_scale(const MpOperator& op, double alpha);

/// Dense N x N matricization. Requires N <= cap and N^2 <= 2^26.
RowMatrix mpo_to_dense(const MpOperator& op, std::size_t cap = default_oracle_cap());
/// Applies the operator to a dense vector of length N without forming it.
Vector apply_mpo_dense(const MpOperator& op, const Vector& x);

enum class Side { left, right };

/// Partial contraction of bra, operator and ket on one side of a cut.
///
/// Bonds are 0-based cuts b = 0..d: a left environment at bond b covers
/// sites [0, b) and a right environment at bond b covers sites [b, d). The
/// tensor has shape (r_b(bra), R_b, r_b(ket)).
struct Environment {
  Side side = Side::left;
  std::size_t bond = 0;
  Tensor data;
};

Environment left_boundary();
Environment right_boundary(std::size_t d);

/// G_j(k, k', K, K', l, l') = sum bra(k, s, k') W(K, s, s', K') ket(l, s', l').
Tensor build_transfer(const Tensor& bra_core, const Tensor& op_core, const Tensor& ket_core);

Environment update_left_env(const Environment& prev, const Tensor& bra_core,
                            const Tensor& op_core, const Tensor& ket_core,
                            CostLedger* ledger = nullptr,
                            OpClass cls = OpClass::env_update);
Environment update_right_env(const Environment& prev, const Tensor& bra_core,
                             const Tensor& op_core, const Tensor& ket_core,
                             CostLedger* ledger = nullptr,
                             OpClass cls = OpClass::env_update);

Environment left_env(const TensorTrain& bra, const MpOperator& op, const TensorTrain& ket,
                     std::size_t bond, CostLedger* ledger = nullptr);
Environment right_env(const TensorTrain& bra, const MpOperator& op, const TensorTrain& ket,
                      std::size_t bond, CostLedger* ledger = nullptr);
inline Environment left_env(const TensorTrain& state, const MpOperator& op, std::size_t bond,
                            CostLedger* ledger = nullptr) {
  return left_env(state, op, state, bond, ledger);
}
inline Environment right_env(const TensorTrain& state, const MpOperator& op, std::size_t bond,
                             CostLedger* ledger = nullptr) {
  return right_env(state, op, state, bond, ledger);
}

/// <bra, A ket> by a full left-to-right sweep.
double expectation(const TensorTrain& bra, const MpOperator& op, const TensorTrain& ket,
                   CostLedger* ledger = nullptr, OpClass cls = OpClass::inner);
/// J(x) = <x, A x> / <x, x>.
double rayleigh_quotient(const TensorTrain& x, const MpOperator& op, CostLedger* ledger = nullptr);

/// Applies the one-site effective operator; v has shape (r_{j-1}, n_j, r_j)
/// flattened in row-major order.
Vector effective_matvec_1site(const Environment& env_left, const Tensor& op_core,
                              const Environment& env_right, const Vector& v,
                              CostLedger* ledger = nullptr);
/// Two-site version; v has shape (r_{k-1}, n_k, n_{k+1}, r_{k+1}).
Vector effective_matvec_2site(const Environment& env_left, const Tensor& op_core_k,
                              const Tensor& op_core_k1, const Environment& env_right,
                              const Vector& v, CostLedger* ledger = nullptr);

}  // namespace a2dmrg
