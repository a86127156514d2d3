#include "a2dmrg/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "a2dmrg/errors.hpp"

namespace a2dmrg {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data size does not match shape");
  }
}

std::size_t Tensor::flat_index(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeError("wrong index order");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) throw ShapeError("index out of range");
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

double& Tensor::at(std::initializer_list<std::size_t> index) {
  return values_[flat_index(index)];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return values_[flat_index(index)];
}

Tensor Tensor::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
  if (shape_size(shape) != values_.size()) throw ShapeError("reshape size mismatch");
  shape_ = std::move(shape);
  return std::move(*this);
}

static std::pair<Eigen::Index, Eigen::Index> split_dims(const Shape& shape,
                                                        std::size_t split) {
  if (split > shape.size()) throw ShapeError("matrix split beyond order");
  std::size_t rows = 1;
  for (std::size_t i = 0; i < split; ++i) rows *= shape[i];
  std::size_t cols = 1;
  for (std::size_t i = split; i < shape.size(); ++i) cols *= shape[i];
  return {static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<RowMatrix> Tensor::matrix(std::size_t split) {
  auto [r, c] = split_dims(shape_, split);
  return {values_.data(), r, c};
}

Eigen::Map<const RowMatrix> Tensor::matrix(std::size_t split) const {
  auto [r, c] = split_dims(shape_, split);
  return {values_.data(), r, c};
}

double Tensor::norm() const { return vector().norm(); }

Tensor& Tensor::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Tensor Tensor::from_matrix(const RowMatrix& m, Shape shape) {
  if (shape_size(shape) != static_cast<std::size_t>(m.size())) {
    throw ShapeError("matrix size does not match requested shape");
  }
  return Tensor(std::move(shape), std::vector<double>(m.data(), m.data() + m.size()));
}

Tensor Tensor::from_vector(const Vector& v, Shape shape) {
  if (shape_size(shape) != static_cast<std::size_t>(v.size())) {
    throw ShapeError("vector size does not match requested shape");
  }
  return Tensor(std::move(shape), std::vector<double>(v.data(), v.data() + v.size()));
}

Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm) {
  const std::size_t order = t.order();
  if (perm.size() != order) throw ShapeError("permutation length mismatch");
  bool identity = true;
  for (std::size_t i = 0; i < order; ++i) identity = identity && perm[i] == i;
  if (identity) return t;

  const Shape& old_shape = t.shape();
  Shape new_shape(order);
  for (std::size_t i = 0; i < order; ++i) new_shape[i] = old_shape[perm[i]];

  std::vector<std::size_t> old_strides(order, 1);
  for (std::size_t i = order; i-- > 1;) old_strides[i - 1] = old_strides[i] * old_shape[i];
  std::vector<std::size_t> stride(order);
  for (std::size_t i = 0; i < order; ++i) stride[i] = old_strides[perm[i]];

  Tensor out(new_shape);
  const std::size_t total = t.size();
  if (total == 0) return out;
  std::vector<std::size_t> idx(order, 0);
  std::size_t src = 0;
  const double* in = t.data();
  double* dst = out.data();
  const std::size_t inner_dim = new_shape[order - 1];
  const std::size_t inner_stride = stride[order - 1];
  for (std::size_t flat = 0; flat < total; flat += inner_dim) {
    for (std::size_t k = 0; k < inner_dim; ++k) dst[flat + k] = in[src + k * inner_stride];
    // advance the outer multi-index
    for (std::size_t axis = order - 1; axis-- > 0;) {
      ++idx[axis];
      src += stride[axis];
      if (idx[axis] < new_shape[axis]) break;
      src -= stride[axis] * new_shape[axis];
      idx[axis] = 0;
    }
  }
  return out;
}

Tensor tensordot(const Tensor& a, const std::vector<std::size_t>& axes_a,
                 const Tensor& b, const std::vector<std::size_t>& axes_b,
                 CostLedger* ledger, OpClass cls) {
  if (axes_a.size() != axes_b.size()) throw ShapeError("tensordot axis count mismatch");
  std::vector<bool> used_a(a.order(), false), used_b(b.order(), false);
  std::size_t k = 1;
  for (std::size_t i = 0; i < axes_a.size(); ++i) {
    if (axes_a[i] >= a.order() || axes_b[i] >= b.order()) {
      throw ShapeError("tensordot axis out of range");
    }
    if (a.dim(axes_a[i]) != b.dim(axes_b[i])) {
      throw ShapeError("tensordot dimension mismatch on axis pair " + std::to_string(i));
    }
    used_a[axes_a[i]] = true;
    used_b[axes_b[i]] = true;
    k *= a.dim(axes_a[i]);
  }
  std::vector<std::size_t> perm_a, perm_b;
  Shape out_shape;
  std::size_t m = 1, n = 1;
  for (std::size_t i = 0; i < a.order(); ++i) {
    if (!used_a[i]) {
      perm_a.push_back(i);
      out_shape.push_back(a.dim(i));
      m *= a.dim(i);
    }
  }
  perm_a.insert(perm_a.end(), axes_a.begin(), axes_a.end());
  perm_b = axes_b;
  for (std::size_t i = 0; i < b.order(); ++i) {
    if (!used_b[i]) {
      perm_b.push_back(i);
      out_shape.push_back(b.dim(i));
      n *= b.dim(i);
    }
  }
  const Tensor pa = permute(a, perm_a);
  const Tensor pb = permute(b, perm_b);
  Tensor out(out_shape);
  const auto em = static_cast<Eigen::Index>(m);
  const auto en = static_cast<Eigen::Index>(n);
  const auto ek = static_cast<Eigen::Index>(k);
  Eigen::Map<const RowMatrix> ma(pa.data(), em, ek);
  Eigen::Map<const RowMatrix> mb(pb.data(), ek, en);
  Eigen::Map<RowMatrix> mc(out.data(), em, en);
  if (m > 0 && n > 0) {
    if (k > 0) {
      mc.noalias() = ma * mb;
    } else {
      mc.setZero();
    }
  }
  charge(ledger, cls, flops::gemm(m, n, k));
  return out;
}

}  // namespace a2dmrg
