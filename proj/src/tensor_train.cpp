#include "a2dmrg/tensor_train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>

#include "a2dmrg/errors.hpp"
#include "a2dmrg/linalg.hpp"

namespace a2dmrg {

TensorTrain::TensorTrain(std::vector<Tensor> cores, Gauge gauge)
    : cores_(std::move(cores)), gauge_(gauge) {
  if (cores_.empty()) throw ShapeError("tensor train needs at least one core");
  for (std::size_t j = 0; j < cores_.size(); ++j) {
    if (cores_[j].order() != 3) throw ShapeError("TT core " + std::to_string(j) + " is not order 3");
    if (j > 0 && cores_[j - 1].dim(2) != cores_[j].dim(0)) {
      throw ShapeError("TT cores " + std::to_string(j - 1) + " and " + std::to_string(j) +
                       " do not chain");
    }
  }
  if (cores_.front().dim(0) != 1 || cores_.back().dim(2) != 1) {
    throw ShapeError("TT boundary ranks must be 1");
  }
  if (gauge_.kind == Gauge::Kind::site && gauge_.center >= cores_.size()) {
    throw ShapeError("gauge centre out of range");
  }
}

std::size_t TensorTrain::rank(std::size_t b) const {
  if (b == 0) return 1;
  if (b > order()) throw ShapeError("bond index out of range");
  return cores_[b - 1].dim(2);
}

std::vector<std::size_t> TensorTrain::dims() const {
  std::vector<std::size_t> d;
  for (const auto& c : cores_) d.push_back(c.dim(1));
  return d;
}

std::vector<std::size_t> TensorTrain::ranks() const {
  std::vector<std::size_t> r{1};
  for (const auto& c : cores_) r.push_back(c.dim(2));
  return r;
}

std::size_t TensorTrain::max_rank() const {
  std::size_t m = 1;
  for (const auto& c : cores_) m = std::max(m, c.dim(2));
  return m;
}

std::size_t TensorTrain::full_size() const {
  std::size_t s = 1;
  for (const auto& c : cores_) s *= c.dim(1);
  return s;
}

std::size_t default_oracle_cap() {
  if (const char* env = std::getenv("A2DMRG_ORACLE_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::size_t{1} << 20;
}

Tensor contract_full(const TensorTrain& tt, std::size_t cap) {
  const std::size_t total = tt.full_size();
  if (total > cap) {
    throw CapExceeded("dense tensor of " + std::to_string(total) +
                      " entries exceeds the oracle cap of " + std::to_string(cap) +
                      " (set A2DMRG_ORACLE_CAP to raise it)");
  }
  RowMatrix acc = RowMatrix::Ones(1, 1);
  for (const auto& core : tt.cores()) {
    RowMatrix next = acc * core.matrix(1);
    acc = Eigen::Map<RowMatrix>(next.data(), next.rows() * static_cast<Eigen::Index>(core.dim(1)),
                                static_cast<Eigen::Index>(core.dim(2)));
  }
  return Tensor::from_matrix(acc, tt.dims());
}

double inner(const TensorTrain& x, const TensorTrain& y, CostLedger* ledger) {
  if (x.dims() != y.dims()) throw ShapeError("inner: dimension mismatch");
  RowMatrix env = RowMatrix::Ones(1, 1);
  for (std::size_t j = 0; j < x.order(); ++j) {
    const Tensor& xc = x.core(j);
    const Tensor& yc = y.core(j);
    const auto rx = static_cast<Eigen::Index>(xc.dim(0));
    const auto n = static_cast<Eigen::Index>(xc.dim(1));
    const auto rx2 = static_cast<Eigen::Index>(xc.dim(2));
    const auto ry2 = static_cast<Eigen::Index>(yc.dim(2));
    RowMatrix t = env * yc.matrix(1);  // rx x (n ry2)
    Eigen::Map<RowMatrix> tm(t.data(), rx * n, ry2);
    env = xc.matrix(2).transpose() * tm;  // rx2 x ry2
    charge(ledger, OpClass::inner,
           flops::gemm(rx, n * ry2, yc.dim(0)) + flops::gemm(rx2, ry2, rx * n));
  }
  return env(0, 0);
}

double norm(const TensorTrain& x, CostLedger* ledger) {
  return std::sqrt(std::max(0.0, inner(x, x, ledger)));
}

TensorTrain scale(const TensorTrain& x, double alpha) {
  std::vector<Tensor> cores = x.cores();
  cores.back() *= alpha;
  return TensorTrain(std::move(cores), x.gauge().is_site(x.order() - 1) ? x.gauge() : Gauge::none());
}

TensorTrain add(const TensorTrain& x, const TensorTrain& y) {
  if (x.dims() != y.dims()) throw ShapeError("add: dimension mismatch");
  const std::size_t d = x.order();
  std::vector<Tensor> cores;
  cores.reserve(d);
  if (d == 1) {
    Tensor c = x.core(0);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += y.core(0)[i];
    cores.push_back(std::move(c));
    return TensorTrain(std::move(cores));
  }
  for (std::size_t j = 0; j < d; ++j) {
    const Tensor& a = x.core(j);
    const Tensor& b = y.core(j);
    const std::size_t n = a.dim(1);
    const std::size_t l = (j == 0) ? 1 : a.dim(0) + b.dim(0);
    const std::size_t r = (j == d - 1) ? 1 : a.dim(2) + b.dim(2);
    const std::size_t bl = (j == 0) ? 0 : a.dim(0);
    const std::size_t br = (j == d - 1) ? 0 : a.dim(2);
    Tensor c({l, n, r});
    for (std::size_t p = 0; p < a.dim(0); ++p)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t q = 0; q < a.dim(2); ++q) c.at({p, s, q}) = a.at({p, s, q});
    for (std::size_t p = 0; p < b.dim(0); ++p)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t q = 0; q < b.dim(2); ++q) c.at({bl + p, s, br + q}) += b.at({p, s, q});
    cores.push_back(std::move(c));
  }
  return TensorTrain(std::move(cores));
}

namespace {

// Left-orthonormalizes core j and pushes R into core j+1.
void shift_right(std::vector<Tensor>& cores, std::size_t j, CostLedger* ledger) {
  Tensor& c = cores[j];
  const std::size_t r0 = c.dim(0), n = c.dim(1);
  QrFactors f = thin_qr(c.matrix(2), ledger);
  const std::size_t k = static_cast<std::size_t>(f.q.cols());
  c = Tensor::from_matrix(f.q, {r0, n, k});
  Tensor& next = cores[j + 1];
  const std::size_t n2 = next.dim(1), r2 = next.dim(2);
  RowMatrix m = f.r * next.matrix(1);
  charge(ledger, OpClass::qr, flops::gemm(k, n2 * r2, next.dim(0)));
  next = Tensor::from_matrix(m, {k, n2, r2});
}

// Right-orthonormalizes core j and pushes L into core j-1.
void shift_left(std::vector<Tensor>& cores, std::size_t j, CostLedger* ledger) {
  Tensor& c = cores[j];
  const std::size_t n = c.dim(1), r2 = c.dim(2);
  LqFactors f = thin_lq(c.matrix(1), ledger);
  const std::size_t k = static_cast<std::size_t>(f.q.rows());
  c = Tensor::from_matrix(f.q, {k, n, r2});
  Tensor& prev = cores[j - 1];
  const std::size_t r0 = prev.dim(0), n0 = prev.dim(1);
  RowMatrix m = prev.matrix(2) * f.l;
  charge(ledger, OpClass::qr, flops::gemm(r0 * n0, k, prev.dim(2)));
  prev = Tensor::from_matrix(m, {r0, n0, k});
}

bool ranks_feasible(const std::vector<Tensor>& cores) {
  for (const auto& c : cores) {
    const std::size_t l = c.dim(0), n = c.dim(1), r = c.dim(2);
    if (l > n * r || r > l * n) return false;
  }
  return true;
}

}  // namespace

TensorTrain orthogonalize(const TensorTrain& tt, std::size_t center, CostLedger* ledger) {
  const std::size_t d = tt.order();
  if (center >= d) throw ShapeError("orthogonalize: centre out of range");
  std::vector<Tensor> cores = tt.cores();
  for (std::size_t j = 0; j < center; ++j) shift_right(cores, j, ledger);
  for (std::size_t j = d - 1; j > center; --j) shift_left(cores, j, ledger);
  return TensorTrain(std::move(cores), Gauge::site(center));
}

double orthogonality_defect(const TensorTrain& tt, std::size_t center) {
  double worst = 0.0;
  for (std::size_t j = 0; j < tt.order(); ++j) {
    if (j == center) continue;
    const Tensor& c = tt.core(j);
    RowMatrix g;
    if (j < center) {
      auto m = c.matrix(2);
      g = m.transpose() * m;
    } else {
      auto m = c.matrix(1);
      g = m * m.transpose();
    }
    g -= RowMatrix::Identity(g.rows(), g.cols());
    worst = std::max(worst, g.cwiseAbs().maxCoeff());
  }
  return worst;
}

std::size_t OrthogonalFamily::rank(std::size_t b) const {
  if (b == 0 || b >= order()) return 1;
  return center[b].dim(0);
}

TensorTrain OrthogonalFamily::configuration(std::size_t i) const {
  return with_center(i, center.at(i));
}

TensorTrain OrthogonalFamily::with_center(std::size_t i, const Tensor& core) const {
  const std::size_t d = order();
  std::vector<Tensor> cores;
  cores.reserve(d);
  for (std::size_t j = 0; j < i; ++j) cores.push_back(left[j]);
  cores.push_back(core);
  for (std::size_t j = i + 1; j < d; ++j) cores.push_back(right[j]);
  return TensorTrain(std::move(cores), Gauge::site(i));
}

TensorTrain OrthogonalFamily::with_pair(std::size_t i, const Tensor& a, const Tensor& b) const {
  const std::size_t d = order();
  std::vector<Tensor> cores;
  cores.reserve(d);
  for (std::size_t j = 0; j < i; ++j) cores.push_back(left[j]);
  cores.push_back(a);
  cores.push_back(b);
  for (std::size_t j = i + 2; j < d; ++j) cores.push_back(right[j]);
  return TensorTrain(std::move(cores));
}

OrthogonalFamily orthogonal_family(const TensorTrain& tt, CostLedger* ledger) {
  const std::size_t d = tt.order();
  if (orthogonality_defect(tt, d - 1) > 1e-8) {
    throw GaugeError("orthogonal_family requires a left-orthogonal tensor train");
  }
  if (!ranks_feasible(tt.cores())) {
    throw ShapeError("orthogonal_family requires ranks with r_j <= n_{j+1} r_{j+1}");
  }
  OrthogonalFamily fam;
  fam.left.assign(tt.cores().begin(), tt.cores().end() - 1);
  fam.center.resize(d);
  fam.right.resize(d);
  Tensor w = tt.core(d - 1);
  for (std::size_t i = d - 1; i > 0; --i) {
    fam.center[i] = w;
    const std::size_t r0 = w.dim(0), n = w.dim(1), r2 = w.dim(2);
    LqFactors f = thin_lq(w.matrix(1), ledger);
    fam.right[i] = Tensor::from_matrix(f.q, {r0, n, r2});
    const Tensor& u = fam.left[i - 1];
    RowMatrix m = u.matrix(2) * f.l;
    charge(ledger, OpClass::qr, flops::gemm(u.dim(0) * u.dim(1), r0, r0));
    w = Tensor::from_matrix(m, {u.dim(0), u.dim(1), r0});
  }
  fam.center[0] = w;
  return fam;
}

TensorTrain round(const TensorTrain& tt, const std::vector<std::size_t>& max_ranks, double tol,
                  CostLedger* ledger) {
  const std::size_t d = tt.order();
  if (tol < 0.0) throw std::invalid_argument("round: tol must be non-negative");
  if (d > 1 && max_ranks.size() < d - 1) throw ShapeError("round: need d-1 rank bounds");
  TensorTrain right = orthogonalize(tt, 0, ledger);
  if (d == 1) return TensorTrain(right.cores(), Gauge::site(0));
  std::vector<Tensor> cores = right.cores();
  const double total = cores[0].norm();
  const double delta = tol * total / std::sqrt(static_cast<double>(d - 1));
  for (std::size_t j = 0; j + 1 < d; ++j) {
    Tensor& c = cores[j];
    const std::size_t r0 = c.dim(0), n = c.dim(1);
    SvdFactors f = thin_svd(c.matrix(2), ledger);
    const std::size_t k = frobenius_truncation_rank(f.s, max_ranks[j], delta);
    const auto ek = static_cast<Eigen::Index>(k);
    c = Tensor::from_matrix(f.u.leftCols(ek), {r0, n, k});
    RowMatrix carry = f.s.head(ek).asDiagonal() * f.vt.topRows(ek);
    Tensor& next = cores[j + 1];
    const std::size_t n2 = next.dim(1), r2 = next.dim(2);
    RowMatrix m = carry * next.matrix(1);
    charge(ledger, OpClass::svd, flops::gemm(k, n2 * r2, next.dim(0)));
    next = Tensor::from_matrix(m, {k, n2, r2});
  }
  if (!ranks_feasible(cores)) {
    std::vector<std::size_t> loose(d - 1, std::numeric_limits<std::size_t>::max());
    return round(TensorTrain(std::move(cores)), loose, 0.0, ledger);
  }
  return TensorTrain(std::move(cores), Gauge::site(d - 1));
}

TensorTrain round(const TensorTrain& tt, std::size_t max_rank, double tol, CostLedger* ledger) {
  const std::size_t d = tt.order();
  return round(tt, std::vector<std::size_t>(d > 0 ? d - 1 : 0, max_rank), tol, ledger);
}

TensorTrain tt_svd(const Tensor& dense, std::size_t max_rank, double tol) {
  const Shape& shape = dense.shape();
  const std::size_t d = shape.size();
  if (d == 0) throw ShapeError("tt_svd: empty shape");
  std::vector<Tensor> cores;
  const double delta = d > 1 ? tol * dense.norm() / std::sqrt(static_cast<double>(d - 1)) : 0.0;
  RowMatrix rest = Eigen::Map<const RowMatrix>(dense.data(), 1, static_cast<Eigen::Index>(dense.size()));
  std::size_t r_prev = 1;
  for (std::size_t j = 0; j + 1 < d; ++j) {
    const std::size_t n = shape[j];
    const Eigen::Index rows = static_cast<Eigen::Index>(r_prev * n);
    const Eigen::Index cols = rest.size() / rows;
    RowMatrix m = Eigen::Map<RowMatrix>(rest.data(), rows, cols);
    SvdFactors f = thin_svd(m);
    const std::size_t k = frobenius_truncation_rank(f.s, max_rank, delta);
    const auto ek = static_cast<Eigen::Index>(k);
    cores.push_back(Tensor::from_matrix(f.u.leftCols(ek), {r_prev, n, k}));
    rest = f.s.head(ek).asDiagonal() * f.vt.topRows(ek);
    r_prev = k;
  }
  cores.push_back(Tensor(Shape{r_prev, shape[d - 1], 1},
                         std::vector<double>(rest.data(), rest.data() + rest.size())));
  return TensorTrain(std::move(cores), Gauge::site(d - 1));
}

TensorTrain random_tt(const std::vector<std::size_t>& dims, const std::vector<std::size_t>& ranks,
                      std::uint64_t seed) {
  const std::size_t d = dims.size();
  if (d == 0) throw ShapeError("random_tt: empty dims");
  if (ranks.size() + 1 != d) throw ShapeError("random_tt: need d-1 interior ranks");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Tensor> cores;
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t l = j == 0 ? 1 : ranks[j - 1];
    const std::size_t r = j + 1 == d ? 1 : ranks[j];
    Tensor c({l, dims[j], r});
    for (double& v : c.values()) v = normal(rng);
    cores.push_back(std::move(c));
  }
  return TensorTrain(std::move(cores));
}

std::vector<std::size_t> separation_ranks(const Tensor& dense, double rel_tol) {
  const Shape& shape = dense.shape();
  std::vector<std::size_t> out;
  std::size_t rows = 1;
  for (std::size_t b = 1; b < shape.size(); ++b) {
    rows *= shape[b - 1];
    const std::size_t cols = dense.size() / rows;
    Eigen::Map<const RowMatrix> m(dense.data(), static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(cols));
    Eigen::BDCSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(m)};
    const Vector s = svd.singularValues();
    std::size_t k = 0;
    if (s.size() > 0 && s(0) > 0.0) {
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * s(0)) ++k;
      }
    }
    out.push_back(k);
  }
  return out;
}

TensorTrain gauge_transform(const TensorTrain& tt, const std::vector<RowMatrix>& mats) {
  const std::size_t d = tt.order();
  if (mats.size() + 1 != d) throw ShapeError("gauge_transform: need d-1 matrices");
  std::vector<Tensor> cores = tt.cores();
  for (std::size_t j = 0; j + 1 < d; ++j) {
    const RowMatrix& a = mats[j];
    Tensor& c = cores[j];
    RowMatrix left = c.matrix(2) * a;
    c = Tensor::from_matrix(left, c.shape());
    Tensor& next = cores[j + 1];
    RowMatrix right = a.inverse() * next.matrix(1);
    next = Tensor::from_matrix(right, next.shape());
  }
  return TensorTrain(std::move(cores));
}

Tensor merge_cores(const Tensor& a, const Tensor& b, CostLedger* ledger, OpClass cls) {
  return tensordot(a, {2}, b, {0}, ledger, cls);
}

}  // namespace a2dmrg
