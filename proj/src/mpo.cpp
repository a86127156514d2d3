#include "a2dmrg/mpo.hpp"

#include <string>

#include "a2dmrg/errors.hpp"

namespace a2dmrg {

MpOperator::MpOperator(std::vector<Tensor> cores, bool symmetric)
    : cores_(std::move(cores)), symmetric_(symmetric) {
  if (cores_.empty()) throw ShapeError("operator needs at least one core");
  for (std::size_t j = 0; j < cores_.size(); ++j) {
    const Tensor& c = cores_[j];
    if (c.order() != 4) throw ShapeError("MPO core " + std::to_string(j) + " is not order 4");
    if (c.dim(1) != c.dim(2)) throw ShapeError("MPO core " + std::to_string(j) + " is not square");
    if (j > 0 && cores_[j - 1].dim(3) != c.dim(0)) {
      throw ShapeError("MPO cores " + std::to_string(j - 1) + " and " + std::to_string(j) +
                       " do not chain");
    }
  }
  if (cores_.front().dim(0) != 1 || cores_.back().dim(3) != 1) {
    throw ShapeError("MPO boundary ranks must be 1");
  }
}

std::size_t MpOperator::rank(std::size_t b) const {
  if (b == 0) return 1;
  return cores_.at(b - 1).dim(3);
}

std::vector<std::size_t> MpOperator::dims() const {
  std::vector<std::size_t> out;
  for (const auto& c : cores_) out.push_back(c.dim(1));
  return out;
}

std::vector<std::size_t> MpOperator::ranks() const {
  std::vector<std::size_t> out{1};
  for (const auto& c : cores_) out.push_back(c.dim(3));
  return out;
}

std::size_t MpOperator::full_dim() const {
  std::size_t n = 1;
  for (const auto& c : cores_) n *= c.dim(1);
  return n;
}

MpOperator identity_mpo(const std::vector<std::size_t>& dims) {
  std::vector<Tensor> cores;
  for (std::size_t n : dims) {
    Tensor c({1, n, n, 1});
    for (std::size_t s = 0; s < n; ++s) c.at({0, s, s, 0}) = 1.0;
    cores.push_back(std::move(c));
  }
  return MpOperator(std::move(cores), true);
}

MpOperator mpo_add(const MpOperator& a, const MpOperator& b) {
  if (a.dims() != b.dims()) throw ShapeError("mpo_add: dimension mismatch");
  const std::size_t d = a.order();
  std::vector<Tensor> cores;
  for (std::size_t j = 0; j < d; ++j) {
    const Tensor& x = a.core(j);
    const Tensor& y = b.core(j);
    const std::size_t n = x.dim(1);
    const std::size_t l = (j == 0) ? 1 : x.dim(0) + y.dim(0);
    const std::size_t r = (j + 1 == d) ? 1 : x.dim(3) + y.dim(3);
    const std::size_t bl = (j == 0) ? 0 : x.dim(0);
    const std::size_t br = (j + 1 == d) ? 0 : x.dim(3);
    Tensor c({l, n, n, r});
    for (std::size_t p = 0; p < x.dim(0); ++p)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t q = 0; q < x.dim(3); ++q) c.at({p, s, t, q}) += x.at({p, s, t, q});
    for (std::size_t p = 0; p < y.dim(0); ++p)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t q = 0; q < y.dim(3); ++q) c.at({bl + p, s, t, br + q}) += y.at({p, s, t, q});
    cores.push_back(std::move(c));
  }
  return MpOperator(std::move(cores), a.symmetric() && b.symmetric());
}

MpOperator mpo_transpose(const MpOperator& op) {
  std::vector<Tensor> cores;
  for (const auto& c : op.cores()) cores.push_back(permute(c, {0, 2, 1, 3}));
  return MpOperator(std::move(cores), op.symmetric());
}

MpOperator mpo_scale(const MpOperator& op, double alpha) {
  std::vector<Tensor> cores = op.cores();
  cores.front() *= alpha;
  return MpOperator(std::move(cores), op.symmetric());
}

RowMatrix mpo_to_dense(const MpOperator& op, std::size_t cap) {
  const std::size_t n_full = op.full_dim();
  if (n_full > cap || n_full * n_full > (std::size_t{1} << 26)) {
    throw CapExceeded("dense operator of dimension " + std::to_string(n_full) +
                      " exceeds the oracle cap (set A2DMRG_ORACLE_CAP to raise it)");
  }
  Tensor acc({1, 1, 1}, {1.0});
  for (const auto& w : op.cores()) {
    Tensor t = tensordot(acc, {2}, w, {0});  // (x, x', s, s', B)
    t = permute(t, {0, 2, 1, 3, 4});
    const std::size_t rows = t.dim(0) * t.dim(1);
    const std::size_t cols = t.dim(2) * t.dim(3);
    acc = std::move(t).reshaped({rows, cols, w.dim(3)});
  }
  return acc.reshaped({acc.dim(0), acc.dim(1)}).matrix(1);
}

Vector apply_mpo_dense(const MpOperator& op, const Vector& x) {
  const std::size_t n_full = op.full_dim();
  if (static_cast<std::size_t>(x.size()) != n_full) throw ShapeError("apply_mpo_dense: size mismatch");
  // t holds (done outputs P, op bond A, remaining inputs)
  Tensor t = Tensor::from_vector(x, {1, 1, n_full});
  std::size_t rest = n_full;
  for (const auto& w : op.cores()) {
    const std::size_t n = w.dim(1);
    rest /= n;
    Tensor t4 = std::move(t).reshaped({t.dim(0), t.dim(1), n, rest});
    Tensor u = tensordot(t4, {1, 2}, w, {0, 2});  // (P, rest, s, B)
    u = permute(u, {0, 2, 3, 1});                 // (P, s, B, rest)
    t = std::move(u).reshaped({u.dim(0) * n, w.dim(3), rest});
  }
  return t.vector();
}

Environment left_boundary() { return {Side::left, 0, Tensor({1, 1, 1}, {1.0})}; }

Environment right_boundary(std::size_t d) { return {Side::right, d, Tensor({1, 1, 1}, {1.0})}; }

Tensor build_transfer(const Tensor& bra_core, const Tensor& op_core, const Tensor& ket_core) {
  Tensor t = tensordot(bra_core, {1}, op_core, {1});  // (k, k', K, s', K')
  return tensordot(t, {3}, ket_core, {1});            // (k, k', K, K', l, l')
}

Environment update_left_env(const Environment& prev, const Tensor& bra_core, const Tensor& op_core,
                            const Tensor& ket_core, CostLedger* ledger, OpClass cls) {
  if (prev.side != Side::left) throw ShapeError("update_left_env needs a left environment");
  Tensor t1 = tensordot(prev.data, {2}, ket_core, {0}, ledger, cls);  // (a, A, s', b')
  Tensor t2 = tensordot(t1, {1, 2}, op_core, {0, 2}, ledger, cls);    // (a, b', s, B)
  Tensor t3 = tensordot(t2, {0, 2}, bra_core, {0, 1}, ledger, cls);   // (b', B, b)
  return {Side::left, prev.bond + 1, permute(t3, {2, 1, 0})};
}

Environment update_right_env(const Environment& prev, const Tensor& bra_core, const Tensor& op_core,
                             const Tensor& ket_core, CostLedger* ledger, OpClass cls) {
  if (prev.side != Side::right) throw ShapeError("update_right_env needs a right environment");
  if (prev.bond == 0) throw ShapeError("update_right_env: already at the left boundary");
  Tensor t1 = tensordot(ket_core, {2}, prev.data, {2}, ledger, cls);  // (a', s', b, B)
  Tensor t2 = tensordot(t1, {1, 3}, op_core, {2, 3}, ledger, cls);    // (a', b, A, s)
  Tensor t3 = tensordot(t2, {1, 3}, bra_core, {2, 1}, ledger, cls);   // (a', A, a)
  return {Side::right, prev.bond - 1, permute(t3, {2, 1, 0})};
}

Environment left_env(const TensorTrain& bra, const MpOperator& op, const TensorTrain& ket,
                     std::size_t bond, CostLedger* ledger) {
  if (bond > bra.order()) throw ShapeError("left_env: bond out of range");
  Environment env = left_boundary();
  for (std::size_t j = 0; j < bond; ++j) {
    env = update_left_env(env, bra.core(j), op.core(j), ket.core(j), ledger, OpClass::env_build);
  }
  return env;
}

Environment right_env(const TensorTrain& bra, const MpOperator& op, const TensorTrain& ket,
                      std::size_t bond, CostLedger* ledger) {
  const std::size_t d = bra.order();
  if (bond > d) throw ShapeError("right_env: bond out of range");
  Environment env = right_boundary(d);
  for (std::size_t j = d; j > bond; --j) {
    env = update_right_env(env, bra.core(j - 1), op.core(j - 1), ket.core(j - 1), ledger,
                           OpClass::env_build);
  }
  return env;
}

double expectation(const TensorTrain& bra, const MpOperator& op, const TensorTrain& ket,
                   CostLedger* ledger, OpClass cls) {
  if (bra.dims() != op.dims() || ket.dims() != op.dims()) {
    throw ShapeError("expectation: dimension mismatch");
  }
  Environment env = left_boundary();
  for (std::size_t j = 0; j < bra.order(); ++j) {
    env = update_left_env(env, bra.core(j), op.core(j), ket.core(j), ledger, cls);
  }
  return env.data[0];
}

double rayleigh_quotient(const TensorTrain& x, const MpOperator& op, CostLedger* ledger) {
  const double nn = inner(x, x, ledger);
  if (!(nn > 0.0)) throw NumericalError("Rayleigh quotient of a zero tensor");
  return expectation(x, op, x, ledger) / nn;
}

Vector effective_matvec_1site(const Environment& env_left, const Tensor& op_core,
                              const Environment& env_right, const Vector& v, CostLedger* ledger) {
  const Tensor& l = env_left.data;
  const Tensor& r = env_right.data;
  const Shape shape{l.dim(2), op_core.dim(2), r.dim(2)};
  if (static_cast<std::size_t>(v.size()) != shape_size(shape)) {
    throw ShapeError("effective_matvec_1site: vector length mismatch");
  }
  const Tensor x = Tensor::from_vector(v, shape);
  Tensor t1 = tensordot(l, {2}, x, {0}, ledger, OpClass::matvec);           // (a, A, s', b')
  Tensor t2 = tensordot(t1, {1, 2}, op_core, {0, 2}, ledger, OpClass::matvec);  // (a, b', s, B)
  Tensor t3 = tensordot(t2, {1, 3}, r, {2, 1}, ledger, OpClass::matvec);    // (a, s, b)
  return t3.vector();
}

Vector effective_matvec_2site(const Environment& env_left, const Tensor& op_core_k,
                              const Tensor& op_core_k1, const Environment& env_right,
                              const Vector& v, CostLedger* ledger) {
  const Tensor& l = env_left.data;
  const Tensor& r = env_right.data;
  const Shape shape{l.dim(2), op_core_k.dim(2), op_core_k1.dim(2), r.dim(2)};
  if (static_cast<std::size_t>(v.size()) != shape_size(shape)) {
    throw ShapeError("effective_matvec_2site: vector length mismatch");
  }
  const Tensor x = Tensor::from_vector(v, shape);
  Tensor t1 = tensordot(l, {2}, x, {0}, ledger, OpClass::matvec);                // (a, A, s1', s2', b')
  Tensor t2 = tensordot(t1, {1, 2}, op_core_k, {0, 2}, ledger, OpClass::matvec);   // (a, s2', b', s1, C)
  Tensor t3 = tensordot(t2, {4, 1}, op_core_k1, {0, 2}, ledger, OpClass::matvec);  // (a, b', s1, s2, B)
  Tensor t4 = tensordot(t3, {1, 4}, r, {2, 1}, ledger, OpClass::matvec);         // (a, s1, s2, b)
  return t4.vector();
}

}  // namespace a2dmrg
