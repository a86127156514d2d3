#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "a2dmrg/cost_ledger.hpp"

namespace a2dmrg {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

/// Dense row-major array of arbitrary order.
///
/// Order-3 tensors of shape (r_left, n, r_right) are TT cores, order-4
/// tensors of shape (R_left, n, n, R_right) are MPO cores.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t flat) { return values_[flat]; }
  double operator[](std::size_t flat) const { return values_[flat]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Same data with a new shape of equal size.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  /// Row-major matrix view grouping the leading `split` axes into rows.
  Eigen::Map<RowMatrix> matrix(std::size_t split);
  Eigen::Map<const RowMatrix> matrix(std::size_t split) const;

  Eigen::Map<Vector> vector() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
  Eigen::Map<const Vector> vector() const { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }

  double norm() const;
  Tensor& operator*=(double s);

  static Tensor from_matrix(const RowMatrix& m, Shape shape);
  static Tensor from_vector(const Vector& v, Shape shape);

 private:
  std::size_t flat_index(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> values_;
};

/// Returns `t` with axes reordered so that new axis k is old axis perm[k].
Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm);

/// Contracts `axes_a` of `a` with `axes_b` of `b` (pairwise). The result
/// carries the free axes of `a` followed by the free axes of `b`, each in
/// their original order. Charges 2mnk flops to `ledger` under `cls`.
Tensor tensordot(const Tensor& a, const std::vector<std::size_t>& axes_a,
                 const Tensor& b, const std::vector<std::size_t>& axes_b,
                 CostLedger* ledger = nullptr,
                 OpClass cls = OpClass::other);

}  // namespace a2dmrg
