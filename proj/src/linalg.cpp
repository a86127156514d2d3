#include "a2dmrg/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace a2dmrg {
namespace {

// Flips column j of `basis` (and row j of `partner`) so that the
// largest-magnitude entry of the column is positive.
void fix_column_signs(RowMatrix& basis, RowMatrix& partner) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < basis.rows(); ++i) {
      const double a = std::abs(basis(i, j));
      if (a > best + 1e-14 * std::max(best, 1.0)) {
        best = a;
        arg = i;
      }
    }
    if (basis.rows() > 0 && basis(arg, j) < 0.0) {
      basis.col(j) *= -1.0;
      partner.row(j) *= -1.0;
    }
  }
}

}  // namespace

QrFactors thin_qr(const RowMatrix& m, CostLedger* ledger) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  const Eigen::Index k = std::min(rows, cols);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(m)};
  QrFactors out;
  out.q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  fix_column_signs(out.q, out.r);
  charge(ledger, OpClass::qr, flops::qr(rows, cols));
  return out;
}

LqFactors thin_lq(const RowMatrix& m, CostLedger* ledger) {
  QrFactors t = thin_qr(m.transpose(), ledger);
  LqFactors out;
  out.l = t.r.transpose();
  out.q = t.q.transpose();
  return out;
}

SvdFactors thin_svd(const RowMatrix& m, CostLedger* ledger) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors out;
  out.u = svd.matrixU();
  out.s = svd.singularValues();
  out.vt = svd.matrixV().transpose();
  fix_column_signs(out.u, out.vt);
  charge(ledger, OpClass::svd, flops::svd(m.rows(), m.cols()));
  return out;
}

std::size_t relative_truncation_rank(const Vector& s, std::size_t max_rank,
                                     double rel_tol) {
  if (s.size() == 0) return 1;
  const double smax = s(0);
  std::size_t keep = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax) ++keep;
  }
  keep = std::min(keep, max_rank);
  return std::max<std::size_t>(keep, 1);
}

double tail_mass(const Vector& s, std::size_t k) {
  double acc = 0.0;
  for (Eigen::Index i = static_cast<Eigen::Index>(k); i < s.size(); ++i) acc += s(i) * s(i);
  return std::sqrt(acc);
}

std::size_t frobenius_truncation_rank(const Vector& s, std::size_t max_rank,
                                      double abs_tol) {
  const auto n = static_cast<std::size_t>(s.size());
  if (n == 0) return 1;
  // tail[k] = mass of s[k..], computed from the back for accuracy
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) tail[i] = tail[i + 1] + s(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i));
  std::size_t keep = n;
  for (std::size_t k = 0; k <= n; ++k) {
    if (std::sqrt(tail[k]) <= abs_tol) {
      keep = k;
      break;
    }
  }
  // exact zeros only count as discardable when abs_tol is zero
  if (abs_tol == 0.0) {
    keep = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (s(static_cast<Eigen::Index>(i)) > 0.0) keep = i + 1;
    }
  }
  keep = std::min(keep, max_rank);
  return std::max<std::size_t>(keep, 1);
}

}  // namespace a2dmrg
