#include "a2dmrg/structured_sum.hpp"

#include "a2dmrg/errors.hpp"
#include "a2dmrg/linalg.hpp"

namespace a2dmrg {
namespace {

// dst(row_off + a, x, col_off + b) += s * src(a, x, b)
void place3(Tensor& dst, std::size_t row_off, std::size_t col_off, const Tensor& src, double s) {
  const std::size_t ra = src.dim(0), n = src.dim(1), rb = src.dim(2);
  for (std::size_t a = 0; a < ra; ++a)
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t b = 0; b < rb; ++b) dst.at({row_off + a, x, col_off + b}) += s * src.at({a, x, b});
}

// dst(row_off + a, x1, x2, col_off + b) += s * src(a, x1, x2, b)
void place4(Tensor& dst, std::size_t row_off, std::size_t col_off, const Tensor& src, double s) {
  const std::size_t ra = src.dim(0), n1 = src.dim(1), n2 = src.dim(2), rb = src.dim(3);
  for (std::size_t a = 0; a < ra; ++a)
    for (std::size_t x1 = 0; x1 < n1; ++x1)
      for (std::size_t x2 = 0; x2 < n2; ++x2)
        for (std::size_t b = 0; b < rb; ++b)
          dst.at({row_off + a, x1, x2, col_off + b}) += s * src.at({a, x1, x2, b});
}

// Core src(a, x, b) acting on the second mode of a block, constant in the first.
void place_on_second(Tensor& dst, std::size_t row_off, std::size_t col_off, const Tensor& src) {
  for (std::size_t a = 0; a < src.dim(0); ++a)
    for (std::size_t x1 = 0; x1 < dst.dim(1); ++x1)
      for (std::size_t x2 = 0; x2 < src.dim(1); ++x2)
        for (std::size_t b = 0; b < src.dim(2); ++b)
          dst.at({row_off + a, x1, x2, col_off + b}) = src.at({a, x2, b});
}

// Core src(a, x, b) acting on the first mode of a block, constant in the second.
void place_on_first(Tensor& dst, std::size_t row_off, std::size_t col_off, const Tensor& src) {
  for (std::size_t a = 0; a < src.dim(0); ++a)
    for (std::size_t x1 = 0; x1 < src.dim(1); ++x1)
      for (std::size_t x2 = 0; x2 < dst.dim(2); ++x2)
        for (std::size_t b = 0; b < src.dim(2); ++b)
          dst.at({row_off + a, x1, x2, col_off + b}) = src.at({a, x1, b});
}

Tensor scaled(const Tensor& t, double s) {
  Tensor out = t;
  out *= s;
  return out;
}

// Merged block of the base member at sites 0, 1.
Tensor base_block(const OrthogonalFamily& fam) {
  return merge_cores(fam.center[0], fam.right[1]);
}

// Block l of the two-site sum with the base member folded into block 0.
Tensor weighted_block(const TwoSiteSumFamily& f, std::size_t l) {
  Tensor b = scaled(f.blocks[l], f.coeffs[l + 1]);
  if (l == 0 && f.coeffs[0] != 0.0) {
    Tensor base = base_block(*f.family);
    b.vector() += f.coeffs[0] * base.vector();
  }
  return b;
}

void check_one_site(const OneSiteSumFamily& f) {
  if (!f.family) throw ShapeError("one-site sum without a family");
  const std::size_t d = f.order();
  if (f.updates.size() != d || f.coeffs.size() != d + 1) {
    throw ShapeError("one-site sum: expected d updates and d+1 coefficients");
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (f.updates[i].shape() != f.family->center[i].shape()) {
      throw ShapeError("one-site sum: update shape differs from its centre core");
    }
  }
}

void check_two_site(const TwoSiteSumFamily& f) {
  if (!f.family) throw ShapeError("two-site sum without a family");
  const std::size_t d = f.order();
  if (d < 2) throw ShapeError("two-site sum needs at least two sites");
  if (f.blocks.size() != d - 1 || f.coeffs.size() != d) {
    throw ShapeError("two-site sum: expected d-1 blocks and d coefficients");
  }
  for (std::size_t l = 0; l + 1 < d; ++l) {
    const Tensor& b = f.blocks[l];
    if (b.order() != 4 || b.dim(0) != f.family->rank(l) || b.dim(1) != f.family->center[l].dim(1) ||
        b.dim(2) != f.family->center[l + 1].dim(1) || b.dim(3) != f.family->rank(l + 2)) {
      throw ShapeError("two-site sum: block shape does not fit the family");
    }
  }
}

}  // namespace

Tensor batched_matmul(const Tensor& a, const Tensor& b, CostLedger* ledger, OpClass cls) {
  if (a.order() != 3 || b.order() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw ShapeError("batched_matmul: incompatible shapes");
  }
  const std::size_t nb = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  Tensor out({nb, m, n});
  for (std::size_t i = 0; i < nb; ++i) {
    Eigen::Map<const RowMatrix> am(a.data() + i * m * k, static_cast<Eigen::Index>(m),
                                   static_cast<Eigen::Index>(k));
    Eigen::Map<const RowMatrix> bm(b.data() + i * k * n, static_cast<Eigen::Index>(k),
                                   static_cast<Eigen::Index>(n));
    Eigen::Map<RowMatrix> om(out.data() + i * m * n, static_cast<Eigen::Index>(m),
                             static_cast<Eigen::Index>(n));
    om.noalias() = am * bm;
  }
  charge(ledger, cls, nb * flops::gemm(m, n, k));
  return out;
}

TensorTrain OneSiteSumFamily::member(std::size_t k) const {
  if (k == 0) return family->configuration(0);
  return family->with_center(k - 1, updates.at(k - 1));
}

TensorTrain materialize_one_site_sum(const OneSiteSumFamily& f) {
  check_one_site(f);
  const OrthogonalFamily& fam = *f.family;
  const std::size_t d = f.order();
  const auto& t = f.coeffs;

  std::vector<Tensor> y(d);
  for (std::size_t i = 0; i < d; ++i) y[i] = scaled(f.updates[i], t[i + 1]);
  y[0].vector() += t[0] * fam.center[0].vector();
  if (d == 1) return TensorTrain({y[0]});

  std::vector<Tensor> cores;
  cores.reserve(d);
  {
    const std::size_t n = fam.center[0].dim(1), r1 = fam.rank(1);
    Tensor c({1, n, 2 * r1});
    place3(c, 0, 0, y[0], 1.0);
    place3(c, 0, r1, fam.left[0], 1.0);
    cores.push_back(std::move(c));
  }
  for (std::size_t j = 1; j + 1 < d; ++j) {
    const std::size_t n = fam.center[j].dim(1), ra = fam.rank(j), rb = fam.rank(j + 1);
    Tensor c({2 * ra, n, 2 * rb});
    place3(c, 0, 0, fam.right[j], 1.0);
    place3(c, ra, 0, y[j], 1.0);
    place3(c, ra, rb, fam.left[j], 1.0);
    cores.push_back(std::move(c));
  }
  {
    const std::size_t j = d - 1, n = fam.center[j].dim(1), ra = fam.rank(j);
    Tensor c({2 * ra, n, 1});
    place3(c, 0, 0, fam.right[j], 1.0);
    place3(c, ra, 0, y[j], 1.0);
    cores.push_back(std::move(c));
  }
  return TensorTrain(std::move(cores));
}

std::pair<Tensor, Tensor> split_block_exact(const Tensor& block, CostLedger* ledger) {
  const std::size_t a = block.dim(0), n1 = block.dim(1), n2 = block.dim(2), b = block.dim(3);
  SvdFactors f = thin_svd(block.matrix(2), ledger);
  const std::size_t s = relative_truncation_rank(f.s, f.s.size(), 1e-14);
  const auto k = static_cast<Eigen::Index>(s);
  RowMatrix left = f.u.leftCols(k);
  RowMatrix right = f.s.head(k).asDiagonal() * f.vt.topRows(k);
  return {Tensor::from_matrix(left, {a, n1, s}), Tensor::from_matrix(right, {s, n2, b})};
}

TensorTrain TwoSiteSumFamily::member(std::size_t k) const {
  if (k == 0) return family->configuration(0);
  auto [a, b] = split_block_exact(blocks.at(k - 1));
  return family->with_pair(k - 1, a, b);
}

std::vector<std::size_t> TwoSiteChain::dims() const {
  std::vector<std::size_t> out;
  for (const auto& b : blocks) out.push_back(b.dim(1));
  if (!blocks.empty()) out.push_back(blocks.back().dim(2));
  return out;
}

TwoSiteChain build_chain(const TwoSiteSumFamily& f) {
  check_two_site(f);
  const OrthogonalFamily& fam = *f.family;
  const std::size_t d = f.order();
  TwoSiteChain chain;
  if (d == 2) {
    chain.blocks.push_back(weighted_block(f, 0));
    return chain;
  }
  auto n = [&](std::size_t j) { return fam.center[j].dim(1); };
  auto r = [&](std::size_t b) { return fam.rank(b); };

  // Column layout after block l: placed states (r_{l+2}) then pending states (r_{l+1}).
  {
    Tensor c({1, n(0), n(1), r(2) + r(1)});
    place4(c, 0, 0, weighted_block(f, 0), 1.0);
    place_on_first(c, 0, r(2), fam.left[0]);
    chain.blocks.push_back(std::move(c));
  }
  for (std::size_t l = 1; l + 2 < d; ++l) {
    const std::size_t rows = r(l + 1) + r(l), cols = r(l + 2) + r(l + 1);
    Tensor c({rows, n(l), n(l + 1), cols});
    place_on_second(c, 0, 0, fam.right[l + 1]);
    place4(c, r(l + 1), 0, f.blocks[l], f.coeffs[l + 1]);
    place_on_first(c, r(l + 1), r(l + 2), fam.left[l]);
    chain.blocks.push_back(std::move(c));
  }
  {
    const std::size_t l = d - 2;
    Tensor c({r(l + 1) + r(l), n(l), n(l + 1), 1});
    place_on_second(c, 0, 0, fam.right[l + 1]);
    place4(c, r(l + 1), 0, f.blocks[l], f.coeffs[l + 1]);
    chain.blocks.push_back(std::move(c));
  }
  return chain;
}

Tensor chain_to_dense(const TwoSiteChain& c, std::size_t cap) {
  const auto dims = c.dims();
  const std::size_t total = shape_size(dims);
  if (total > cap) throw CapExceeded("chain_to_dense: dense size exceeds the cap");
  // acc rows: prefix (x_0 .. x_{k+1}); columns: chain bond after block k.
  const Tensor& b0 = c.blocks[0];
  RowMatrix acc = b0.matrix(3);
  std::size_t prefix = dims[0] * dims[1];
  for (std::size_t k = 1; k < c.blocks.size(); ++k) {
    const Tensor& blk = c.blocks[k];
    const std::size_t nk = blk.dim(1), nk1 = blk.dim(2), cols = blk.dim(3);
    RowMatrix next = RowMatrix::Zero(static_cast<Eigen::Index>(prefix * nk1), static_cast<Eigen::Index>(cols));
    for (std::size_t p = 0; p < prefix; ++p) {
      const std::size_t xk = p % nk;
      for (std::size_t x1 = 0; x1 < nk1; ++x1) {
        for (std::size_t a = 0; a < blk.dim(0); ++a) {
          const double v = acc(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(a));
          if (v == 0.0) continue;
          for (std::size_t b = 0; b < cols; ++b) {
            next(static_cast<Eigen::Index>(p * nk1 + x1), static_cast<Eigen::Index>(b)) += v * blk.at({a, xk, x1, b});
          }
        }
      }
    }
    acc = std::move(next);
    prefix *= nk1;
  }
  Tensor out(dims);
  for (std::size_t i = 0; i < total; ++i) out[i] = acc(static_cast<Eigen::Index>(i), 0);
  return out;
}

Tensor chain_left_boundary(const TwoSiteChain& c) {
  Tensor t({1, c.blocks.front().dim(1), 1});
  for (double& v : t.values()) v = 1.0;
  return t;
}

Tensor chain_right_boundary(const TwoSiteChain& c) {
  Tensor t({1, c.blocks.back().dim(2), 1});
  for (double& v : t.values()) v = 1.0;
  return t;
}

Tensor chain_update_left(const Tensor& env, const Tensor& block, const Tensor& x_core,
                         CostLedger* ledger, OpClass cls) {
  Tensor e = permute(env, {1, 0, 2});      // (x, alpha, beta)
  Tensor x = permute(x_core, {1, 0, 2});   // (x, beta, beta')
  Tensor t = batched_matmul(e, x, ledger, cls);  // (x, alpha, beta')
  Tensor u = tensordot(t, {1, 0}, block, {0, 1}, ledger, cls);  // (beta', x', alpha')
  return permute(u, {2, 1, 0});
}

Tensor chain_update_right(const Tensor& env, const Tensor& block, const Tensor& x_core_next,
                          CostLedger* ledger, OpClass cls) {
  Tensor x = permute(x_core_next, {1, 0, 2});  // (x', beta, beta2)
  Tensor e = permute(env, {1, 2, 0});          // (x', beta2, alpha')
  Tensor t = batched_matmul(x, e, ledger, cls);  // (x', beta, alpha')
  return tensordot(block, {2, 3}, t, {0, 2}, ledger, cls);  // (alpha, x, beta)
}

Tensor chain_project_one_site(const Tensor& left, const Tensor& right, CostLedger* ledger,
                              OpClass cls) {
  Tensor l = permute(left, {1, 2, 0});   // (x, beta, alpha)
  Tensor r = permute(right, {1, 0, 2});  // (x, alpha, beta')
  return permute(batched_matmul(l, r, ledger, cls), {1, 0, 2});
}

Tensor chain_project_two_site(const Tensor& left, const Tensor& block, const Tensor& right,
                              CostLedger* ledger, OpClass cls) {
  const std::size_t n1 = block.dim(1), n2 = block.dim(2), a2 = block.dim(3);
  const std::size_t beta = left.dim(2), beta2 = right.dim(2);
  Tensor l = permute(left, {1, 2, 0});  // (x, beta, alpha)
  Tensor c = permute(block, {1, 0, 2, 3}).reshaped({n1, block.dim(0), n2 * a2});
  Tensor t1 = batched_matmul(l, c, ledger, cls).reshaped({n1, beta, n2, a2});  // (x, beta, x', alpha')
  Tensor t1p = permute(t1, {2, 0, 1, 3}).reshaped({n2, n1 * beta, a2});        // (x', x beta, alpha')
  Tensor r = permute(right, {1, 0, 2});                                          // (x', alpha', beta2)
  Tensor t2 = batched_matmul(t1p, r, ledger, cls).reshaped({n2, n1, beta, beta2});
  return permute(t2, {2, 1, 0, 3});
}

double chain_inner(const TwoSiteChain& c, const TensorTrain& tt, CostLedger* ledger, OpClass cls) {
  if (c.dims() != tt.dims()) throw ShapeError("chain_inner: dimension mismatch");
  const std::size_t d = tt.order();
  Tensor env = chain_left_boundary(c);
  for (std::size_t k = 0; k + 1 < d; ++k) env = chain_update_left(env, c.blocks[k], tt.core(k), ledger, cls);
  Tensor g = chain_project_one_site(env, chain_right_boundary(c), ledger, cls);
  charge(ledger, cls, 2 * g.size());
  return g.vector().dot(tt.core(d - 1).vector());
}

double chain_operator_inner(const TwoSiteChain& c1, const MpOperator& op, const TwoSiteChain& c2,
                            CostLedger* ledger, OpClass cls) {
  if (c1.dims() != op.dims() || c2.dims() != op.dims()) {
    throw ShapeError("chain_operator_inner: dimension mismatch");
  }
  const std::size_t d = op.order();
  const std::size_t n0 = op.dim(0);
  // e(alpha, x, K, gamma, z)
  Tensor e({1, n0, 1, 1, n0});
  for (double& v : e.values()) v = 1.0;
  for (std::size_t k = 0; k + 1 < d; ++k) {
    const std::size_t n = op.dim(k);
    const std::size_t a = e.dim(0), g = e.dim(3), kk = e.dim(2), k2 = op.rank(k + 1);
    Tensor ep = permute(e, {1, 4, 0, 3, 2}).reshaped({n * n, a * g, kk});
    Tensor ap = permute(op.core(k), {1, 2, 0, 3}).reshaped({n * n, kk, k2});
    Tensor t = batched_matmul(ep, ap, ledger, cls).reshaped({n, n, a, g, k2});  // (x, z, alpha, gamma, K')
    Tensor u1 = tensordot(t, {2, 0}, c1.blocks[k], {0, 1}, ledger, cls);           // (z, gamma, K', x', alpha')
    Tensor u2 = tensordot(u1, {1, 0}, c2.blocks[k], {0, 1}, ledger, cls);          // (K', x', alpha', z', gamma')
    e = permute(u2, {2, 1, 0, 4, 3});
  }
  const Tensor& last = op.core(d - 1);
  const std::size_t n = op.dim(d - 1);
  double sum = 0.0;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t z = 0; z < n; ++z)
      for (std::size_t K = 0; K < e.dim(2); ++K) sum += e.at({0, x, K, 0, z}) * last.at({K, x, z, 0});
  charge(ledger, cls, 2 * n * n * e.dim(2));
  return sum;
}

TensorTrain materialize_two_site_sum(const TwoSiteSumFamily& f, CostLedger* ledger) {
  check_two_site(f);
  const OrthogonalFamily& fam = *f.family;
  const std::size_t d = f.order();
  std::vector<Tensor> a(d - 1), b(d - 1);
  for (std::size_t l = 0; l + 1 < d; ++l) {
    auto parts = split_block_exact(weighted_block(f, l), ledger);
    a[l] = std::move(parts.first);
    b[l] = std::move(parts.second);
  }
  if (d == 2) return TensorTrain({a[0], b[0]});

  // Bond layout: placed (sites before the bond hold a finished pair), mid
  // (inside a pair), pending (pair not yet started).
  struct Layout {
    std::size_t placed = 0, mid = 0, pending = 0;
    std::size_t total() const { return placed + mid + pending; }
  };
  std::vector<Layout> lay(d + 1);
  lay[0].pending = 1;
  lay[d].placed = 1;
  for (std::size_t bnd = 1; bnd < d; ++bnd) {
    lay[bnd].placed = bnd >= 2 ? fam.rank(bnd) : 0;
    lay[bnd].mid = a[bnd - 1].dim(2);
    lay[bnd].pending = bnd + 2 <= d ? fam.rank(bnd) : 0;
  }
  std::vector<Tensor> cores;
  for (std::size_t j = 0; j < d; ++j) {
    const Layout& in = lay[j];
    const Layout& out = lay[j + 1];
    Tensor c({in.total(), fam.center[j].dim(1), out.total()});
    const std::size_t in_mid = in.placed, in_pend = in.placed + in.mid;
    const std::size_t out_mid = out.placed, out_pend = out.placed + out.mid;
    if (in.pending > 0 && out.pending > 0) place3(c, in_pend, out_pend, fam.left[j], 1.0);
    if (in.pending > 0 && j + 1 < d) place3(c, in_pend, out_mid, a[j], 1.0);
    if (in.mid > 0) place3(c, in_mid, 0, b[j - 1], 1.0);
    if (in.placed > 0 && out.placed > 0) place3(c, 0, 0, fam.right[j], 1.0);
    cores.push_back(std::move(c));
  }
  return TensorTrain(std::move(cores));
}

}  // namespace a2dmrg
