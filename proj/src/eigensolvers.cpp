#include "a2dmrg/eigensolvers.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "a2dmrg/errors.hpp"

namespace a2dmrg {
namespace {

void fix_sign(Eigen::Ref<Vector> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v.size() > 0 && v(arg) < 0.0) v *= -1.0;
}

// Removes components along the basis twice (classical Gram-Schmidt twice).
void reorthogonalize(const std::vector<Vector>& basis, Vector& w, CostLedger* ledger) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const Vector& q : basis) w -= q.dot(w) * q;
  }
  charge(ledger, OpClass::eigensolve,
         8 * static_cast<std::uint64_t>(w.size()) * basis.size());
}

}  // namespace

LanczosResult lanczos_lowest(const MatVec& matvec, std::size_t dim, const Vector& init,
                             const LanczosOptions& options, CostLedger* ledger) {
  if (dim == 0) throw std::invalid_argument("lanczos_lowest: dim must be positive");
  if (static_cast<std::size_t>(init.size()) != dim) {
    throw ShapeError("lanczos_lowest: initial vector has wrong length");
  }
  const double init_norm = init.norm();
  if (!(init_norm > 0.0) || !std::isfinite(init_norm)) {
    throw NumericalError("lanczos_lowest: initial vector is zero");
  }

  std::vector<Vector> basis;
  std::vector<double> alpha, beta;
  basis.push_back(init / init_norm);
  std::size_t restarts = 0;

  LanczosResult result;
  Vector ritz_coeffs;
  const std::size_t max_iter = std::max<std::size_t>(1, options.max_iter);

  while (true) {
    const std::size_t j = basis.size() - 1;
    Vector w = matvec(basis[j]);
    ++result.iterations;
    const double a = basis[j].dot(w);
    alpha.push_back(a);
    w -= a * basis[j];
    if (j > 0) w -= beta[j - 1] * basis[j - 1];
    reorthogonalize(basis, w, ledger);
    const double b = w.norm();

    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Vector diag = Eigen::Map<const Vector>(alpha.data(), k);
    Vector sub = k > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), k - 1)) : Vector();
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    charge(ledger, OpClass::eigensolve, flops::sym_eig(static_cast<std::uint64_t>(k)));
    const double theta = tri.eigenvalues()(0);
    ritz_coeffs = tri.eigenvectors().col(0);
    const double residual = b * std::abs(ritz_coeffs(k - 1));
    const double scale = std::max(1.0, std::abs(theta));
    result.eigenvalue = theta;
    result.residual_norm = residual;

    if (residual <= options.tol * scale || basis.size() >= dim) {
      result.converged = true;
      break;
    }
    if (result.iterations >= max_iter) break;

    if (b <= 1e-14 * scale) {
      if (restarts >= options.max_restarts) break;
      std::mt19937_64 rng(options.seed + restarts);
      std::normal_distribution<double> normal(0.0, 1.0);
      Vector fresh(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < fresh.size(); ++i) fresh(i) = normal(rng);
      reorthogonalize(basis, fresh, ledger);
      ++restarts;
      const double fn = fresh.norm();
      if (!(fn > 1e-10)) break;
      beta.push_back(0.0);
      basis.push_back(fresh / fn);
      continue;
    }
    beta.push_back(b);
    basis.push_back(w / b);
  }

  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < ritz_coeffs.size(); ++i) v += ritz_coeffs(i) * basis[static_cast<std::size_t>(i)];
  v.normalize();
  result.eigenvector = std::move(v);
  return result;
}

void require_symmetric(const RowMatrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) throw NumericalError("matrix is not symmetric");
}

SymmetricEigen dense_sym_eig(const RowMatrix& m, CostLedger* ledger) {
  require_symmetric(m);
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  charge(ledger, OpClass::eigensolve, flops::sym_eig(static_cast<std::uint64_t>(m.rows())));
  SymmetricEigen out;
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    Vector col = out.vectors.col(j);
    fix_sign(col);
    out.vectors.col(j) = col;
  }
  return out;
}

DenseEigenpair dense_lowest_eig(const RowMatrix& m, CostLedger* ledger) {
  if (m.rows() == 0) throw ShapeError("dense_lowest_eig: empty matrix");
  SymmetricEigen e = dense_sym_eig(m, ledger);
  return {e.values(0), e.vectors.col(0)};
}

SymmetricSvd dense_sym_svd(const RowMatrix& m, CostLedger* ledger) {
  SymmetricEigen e = dense_sym_eig(m, ledger);
  const Eigen::Index n = e.values.size();
  SymmetricSvd out;
  out.sigma.resize(n);
  out.v.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.sigma(i) = e.values(n - 1 - i);
    out.v.col(i) = e.vectors.col(n - 1 - i);
  }
  return out;
}

}  // namespace a2dmrg
