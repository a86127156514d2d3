#include "a2dmrg/a2dmrg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "a2dmrg/errors.hpp"
#include "a2dmrg/linalg.hpp"
#include "a2dmrg/parallel.hpp"

namespace a2dmrg {
namespace {

double dot(const Tensor& a, const Tensor& b) { return a.vector().dot(b.vector()); }

TensorTrain normalized(const TensorTrain& x) {
  const double n = norm(x);
  if (!(n > 0.0)) throw NumericalError("cannot normalize a zero tensor train");
  return scale(x, 1.0 / n);
}

Tensor pair_block(const OrthogonalFamily& fam, std::size_t k, CostLedger* ledger) {
  return merge_cores(fam.center[k], fam.right[k + 1], ledger, OpClass::other);
}

std::vector<std::pair<std::size_t, std::size_t>> upper_triangle(std::size_t m) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) out.emplace_back(i, j);
  return out;
}

// Builds the coarse basis vectors as tensor trains. Splitting two-site blocks
// is charged to the worker that produced the block.
std::vector<TensorTrain> basis_vectors(const CoarseSpace& space, CostLedger* ledger) {
  std::vector<TensorTrain> out;
  out.reserve(space.size());
  out.push_back(scale(space.family->configuration(0), space.base_scale));
  for (std::size_t k = 1; k < space.size(); ++k) {
    if (space.mode == SiteMode::one_site) {
      out.push_back(space.family->with_center(k - 1, space.local[k - 1]));
    } else {
      CostLedger local;
      auto [a, b] = split_block_exact(space.local[k - 1], &local);
      if (ledger != nullptr) ledger->absorb(local, k - 1);
      out.push_back(space.family->with_pair(k - 1, a, b));
    }
  }
  return out;
}

RowMatrix assemble_overlap(const std::vector<TensorTrain>& vecs, std::size_t workers,
                           CostLedger* ledger, RowMatrix* a_out, const MpOperator* op) {
  const std::size_t m = vecs.size();
  const auto entries = upper_triangle(m);
  std::vector<double> s_val(entries.size()), a_val(entries.size());
  std::vector<CostLedger> local(entries.size());
  parallel_for(entries.size(), workers, [&](std::size_t e) {
    const auto [i, j] = entries[e];
    s_val[e] = inner(vecs[i], vecs[j], &local[e]);
    if (op != nullptr) a_val[e] = expectation(vecs[i], *op, vecs[j], &local[e], OpClass::coarse_assembly);
  });
  RowMatrix s(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  RowMatrix a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [i, j] = entries[e];
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    s(ii, jj) = s(jj, ii) = s_val[e];
    a(ii, jj) = a(jj, ii) = a_val[e];
    if (ledger != nullptr) ledger->absorb(local[e], e);
  }
  if (a_out != nullptr) *a_out = std::move(a);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Local solves

TensorTrain LocalUpdateSet::member(std::size_t k) const {
  if (k == 0) return family->configuration(0);
  const LocalUpdate& u = updates.at(k - 1);
  if (mode == SiteMode::one_site) return family->with_center(u.site, u.solution);
  return family->with_pair(u.site, u.left, u.right);
}

LocalUpdateSet local_solves(std::shared_ptr<const OrthogonalFamily> family, const MpOperator& op,
                            const LocalSolveOptions& options, CostLedger* ledger) {
  const OrthogonalFamily& fam = *family;
  const std::size_t d = fam.order();
  if (op.order() != d) throw ShapeError("local_solves: operator order differs from the state");
  const bool two = options.mode == SiteMode::two_site;
  if (two && d < 2) throw ShapeError("local_solves: two-site mode needs d >= 2");
  const std::size_t tasks = two ? d - 1 : d;

  LocalUpdateSet set;
  set.mode = options.mode;
  set.family = family;
  set.updates.resize(tasks);
  std::vector<CostLedger> local(tasks);

  parallel_for(tasks, options.workers, [&](std::size_t i) {
    CostLedger* led = &local[i];
    LocalUpdate& u = set.updates[i];
    u.site = i;
    const TensorTrain cfg = fam.configuration(i);
    const Environment l = left_env(cfg, op, i, led);
    MicroStepResult r;
    if (!two) {
      const Environment rr = right_env(cfg, op, i + 1, led);
      u.previous = fam.center[i];
      r = micro_step_1site(l, op.core(i), rr, u.previous, options.lanczos, led);
      u.solution = r.tensor;
    } else {
      const Environment rr = right_env(cfg, op, i + 2, led);
      u.previous = pair_block(fam, i, led);
      r = micro_step_2site(l, op.core(i), op.core(i + 1), rr, u.previous, options.lanczos, led);
      SplitResult s = split_and_shift(r.tensor, ShiftDirection::left_to_right, options.max_rank,
                                      options.svd_tol, led);
      u.discarded_weight = s.discarded_weight;
      u.solution = merge_cores(s.left, s.right, led, OpClass::other);
      u.left = std::move(s.left);
      u.right = std::move(s.right);
    }
    u.local_energy = r.eig.eigenvalue;
    u.lanczos_iters = r.eig.iterations;
    u.converged = r.eig.converged;
  });

  if (ledger != nullptr) {
    for (std::size_t i = 0; i < tasks; ++i) ledger->absorb(local[i], i);
  }
  return set;
}

LocalUpdateSet local_solves(const TensorTrain& prev_left_orthogonal, const MpOperator& op,
                            const LocalSolveOptions& options, CostLedger* ledger) {
  auto fam = std::make_shared<const OrthogonalFamily>(orthogonal_family(prev_left_orthogonal, ledger));
  return local_solves(fam, op, options, ledger);
}

// ---------------------------------------------------------------------------
// Coarse problem

TensorTrain CoarseSpace::vector(std::size_t k) const {
  if (k == 0) return scale(family->configuration(0), base_scale);
  if (mode == SiteMode::one_site) return family->with_center(k - 1, local.at(k - 1));
  auto [a, b] = split_block_exact(local.at(k - 1));
  return family->with_pair(k - 1, a, b);
}

OneSiteSumFamily CoarseSpace::one_site_family(const Vector& c) const {
  if (static_cast<std::size_t>(c.size()) != size()) throw ShapeError("coarse coefficients have the wrong length");
  OneSiteSumFamily f;
  f.family = family;
  f.updates = local;
  f.coeffs.assign(c.data(), c.data() + c.size());
  f.coeffs[0] *= base_scale;
  return f;
}

TwoSiteSumFamily CoarseSpace::two_site_family(const Vector& c) const {
  if (static_cast<std::size_t>(c.size()) != size()) throw ShapeError("coarse coefficients have the wrong length");
  TwoSiteSumFamily f;
  f.family = family;
  f.blocks = local;
  f.coeffs.assign(c.data(), c.data() + c.size());
  f.coeffs[0] *= base_scale;
  return f;
}

TensorTrain CoarseSpace::combination(const Vector& c, CostLedger* ledger) const {
  if (mode == SiteMode::one_site) return materialize_one_site_sum(one_site_family(c));
  return materialize_two_site_sum(two_site_family(c), ledger);
}

CoarseSpace build_coarse_space(const LocalUpdateSet& set, CoarseBasis basis, bool normalize_members) {
  CoarseSpace space;
  space.mode = set.mode;
  space.family = set.family;
  const double prev_norm = set.family->center[0].norm();
  if (!(prev_norm > 0.0)) throw DegenerateSpan("previous iterate has zero norm");

  if (basis == CoarseBasis::orthogonalized_updates) {
    space.base_scale = 1.0 / prev_norm;
    for (const LocalUpdate& u : set.updates) {
      const double wn = u.previous.norm();
      const double un = u.solution.norm();
      Tensor diff(u.solution.shape());
      if (wn > 0.0 && un > 0.0) {
        diff = u.solution;
        diff *= 1.0 / un;
        const double alpha = dot(diff, u.previous) / (wn * wn);
        diff.vector() -= alpha * u.previous.vector();
        const double dn = diff.norm();
        if (dn > 1e-13) {
          diff *= 1.0 / dn;
        } else {
          diff = Tensor(u.solution.shape());
        }
      }
      space.local.push_back(std::move(diff));
    }
  } else {
    space.base_scale = normalize_members ? 1.0 / prev_norm : 1.0;
    for (const LocalUpdate& u : set.updates) {
      Tensor v = u.solution;
      const double un = v.norm();
      if (un > 0.0) {
        const double sign = dot(v, u.previous) < 0.0 ? -1.0 : 1.0;
        v *= sign * (normalize_members ? 1.0 / un : u.previous.norm() / un);
      }
      space.local.push_back(std::move(v));
    }
  }
  return space;
}

Whitening whiten(const RowMatrix& s, double eps, CostLedger* ledger) {
  Whitening w;
  SymmetricSvd svd = dense_sym_svd(s, ledger);
  w.v = svd.v;
  w.sigma = svd.sigma;
  const double smax = w.sigma.size() > 0 ? w.sigma(0) : 0.0;
  w.p = 0;
  if (smax > 0.0) {
    for (Eigen::Index i = 0; i < w.sigma.size(); ++i) {
      if (w.sigma(i) > eps * smax) ++w.p;
    }
  }
  const auto p = static_cast<Eigen::Index>(w.p);
  w.w = w.v.leftCols(p);
  for (Eigen::Index i = 0; i < p; ++i) w.w.col(i) /= std::sqrt(w.sigma(i));
  return w;
}

CoarseProblem assemble_coarse(const CoarseSpace& space, const MpOperator& op, double eps,
                              std::size_t workers, CostLedger* ledger) {
  CoarseProblem cp;
  cp.eps = eps;
  const std::vector<TensorTrain> vecs = basis_vectors(space, ledger);
  cp.S = assemble_overlap(vecs, workers, ledger, &cp.A, &op);
  return cp;
}

void solve_coarse(CoarseProblem& cp, CostLedger* ledger) {
  require_symmetric(cp.S);
  require_symmetric(cp.A);
  cp.whitening = whiten(cp.S, cp.eps, ledger);
  cp.p = cp.whitening.p;
  if (cp.p == 0) throw DegenerateSpan("coarse space is numerically zero");
  const RowMatrix& w = cp.whitening.w;
  RowMatrix m = w.transpose() * cp.A * w;
  const auto mm = static_cast<std::uint64_t>(cp.S.rows());
  charge(ledger, OpClass::eigensolve, flops::gemm(mm, cp.p, mm) + flops::gemm(cp.p, cp.p, mm));
  m = 0.5 * (m + m.transpose()).eval();
  DenseEigenpair e = dense_lowest_eig(m, ledger);
  cp.coarse_energy = e.eigenvalue;
  cp.coeffs = w * e.eigenvector;
}

Vector coarse_matvec_structured(const CoarseSpace& space, const MpOperator& op,
                                const Whitening& whitening, const Vector& y, CostLedger* ledger) {
  const Vector c = whitening.w * y;
  const std::size_t m = space.size();
  Vector z(static_cast<Eigen::Index>(m));
  const OrthogonalFamily& fam = *space.family;
  const std::size_t d = fam.order();

  if (space.mode == SiteMode::one_site) {
    const TensorTrain x = materialize_one_site_sum(space.one_site_family(c));
    // Left environments with the shared left cores as bra, right environments
    // with the shared right cores as bra; both against the combination x.
    std::vector<Environment> left(d), right(d + 1);
    left[0] = left_boundary();
    for (std::size_t j = 1; j < d; ++j) {
      left[j] = update_left_env(left[j - 1], fam.left[j - 1], op.core(j - 1), x.core(j - 1), ledger,
                                OpClass::coarse_assembly);
    }
    right[d] = right_boundary(d);
    for (std::size_t j = d - 1; j >= 1; --j) {
      right[j] = update_right_env(right[j + 1], fam.right[j], op.core(j), x.core(j), ledger,
                                  OpClass::coarse_assembly);
    }
    for (std::size_t i = 0; i < d; ++i) {
      const Vector g = effective_matvec_1site(left[i], op.core(i), right[i + 1], x.core(i).vector(), ledger);
      if (i == 0) z(0) = space.base_scale * fam.center[0].vector().dot(g);
      z(static_cast<Eigen::Index>(i + 1)) = space.local[i].vector().dot(g);
    }
    charge(ledger, OpClass::coarse_assembly, 2 * m * static_cast<std::uint64_t>(x.core(0).size()));
  } else {
    const TwoSiteChain target = build_chain(space.two_site_family(c));
    for (std::size_t k = 0; k < m; ++k) {
      Vector e = Vector::Zero(static_cast<Eigen::Index>(m));
      e(static_cast<Eigen::Index>(k)) = 1.0;
      const TwoSiteChain unit = build_chain(space.two_site_family(e));
      z(static_cast<Eigen::Index>(k)) = chain_operator_inner(unit, op, target, ledger, OpClass::coarse_assembly);
    }
  }
  return whitening.w.transpose() * z;
}

CoarseProblem solve_coarse_krylov(const CoarseSpace& space, const MpOperator& op, double eps,
                                  double tol, std::size_t workers, CostLedger* ledger) {
  CoarseProblem cp;
  cp.eps = eps;
  const std::vector<TensorTrain> vecs = basis_vectors(space, ledger);
  cp.S = assemble_overlap(vecs, workers, ledger, nullptr, nullptr);
  cp.whitening = whiten(cp.S, eps, ledger);
  cp.p = cp.whitening.p;
  if (cp.p == 0) throw DegenerateSpan("coarse space is numerically zero");
  const RowMatrix& w = cp.whitening.w;
  Vector y0 = w.transpose() * cp.S.col(0);
  if (!(y0.norm() > 0.0)) y0 = Vector::Ones(static_cast<Eigen::Index>(cp.p));
  LanczosOptions opts;
  opts.tol = tol;
  opts.max_iter = 4 * cp.p + 10;
  auto mv = [&](const Vector& y) { return coarse_matvec_structured(space, op, cp.whitening, y, ledger); };
  LanczosResult r = lanczos_lowest(mv, cp.p, y0, opts, ledger);
  cp.coarse_energy = r.eigenvalue;
  cp.coeffs = w * r.eigenvector;
  cp.krylov_iterations = r.iterations;
  return cp;
}

// ---------------------------------------------------------------------------
// Compression

TensorTrain compress_one_site(const CoarseSpace& space, const Vector& coeffs, std::size_t max_rank,
                              double tol, CostLedger* ledger) {
  if (space.mode != SiteMode::one_site) throw std::invalid_argument("compress_one_site needs a one-site space");
  return round(space.combination(coeffs, ledger), max_rank, tol, ledger);
}

namespace {

TensorTrain fit_two_site(const CoarseSpace& space, const Vector& coeffs, std::size_t max_rank,
                         double svd_tol, double fit_tol, std::size_t max_fit_iters, CostLedger* ledger,
                         FitReport* report) {
  const TwoSiteChain chain = build_chain(space.two_site_family(coeffs));
  const std::size_t d = space.family->order();
  std::vector<Tensor> x = space.family->configuration(0).cores();

  std::vector<Tensor> le(d), re(d);
  le[0] = chain_left_boundary(chain);
  re[d - 1] = chain_right_boundary(chain);
  for (std::size_t k = d - 1; k-- > 0;) {
    re[k] = chain_update_right(re[k + 1], chain.blocks[k], x[k + 1], ledger);
  }

  double norm_sq = 0.0;
  auto forward_two_site = [&]() {
    for (std::size_t k = 0; k + 1 < d; ++k) {
      Tensor g = chain_project_two_site(le[k], chain.blocks[k], re[k + 1], ledger);
      SplitResult s = split_and_shift(g, ShiftDirection::left_to_right, max_rank, svd_tol, ledger);
      x[k] = std::move(s.left);
      x[k + 1] = std::move(s.right);
      le[k + 1] = chain_update_left(le[k], chain.blocks[k], x[k], ledger);
    }
    norm_sq = x[d - 1].vector().squaredNorm();
  };
  auto backward_one_site = [&]() {
    for (std::size_t k = d - 1; k > 0; --k) {
      Tensor g = chain_project_one_site(le[k], re[k], ledger);
      const std::size_t ra = g.dim(0), n = g.dim(1), rb = g.dim(2);
      LqFactors lq = thin_lq(g.matrix(1), ledger);
      const std::size_t r = static_cast<std::size_t>(lq.q.rows());
      x[k] = Tensor::from_matrix(lq.q, {r, n, rb});
      x[k - 1] = tensordot(x[k - 1], {2}, Tensor::from_matrix(lq.l, {ra, r}), {0}, ledger, OpClass::qr);
      re[k - 1] = chain_update_right(re[k], chain.blocks[k - 1], x[k], ledger);
    }
    x[0] = chain_project_one_site(le[0], re[0], ledger);
  };
  auto forward_one_site = [&]() {
    for (std::size_t k = 0; k + 1 < d; ++k) {
      Tensor g = chain_project_one_site(le[k], re[k], ledger);
      const std::size_t ra = g.dim(0), n = g.dim(1), rb = g.dim(2);
      QrFactors qr = thin_qr(g.matrix(2), ledger);
      const std::size_t r = static_cast<std::size_t>(qr.q.cols());
      x[k] = Tensor::from_matrix(qr.q, {ra, n, r});
      x[k + 1] = tensordot(Tensor::from_matrix(qr.r, {r, rb}), {1}, x[k + 1], {0}, ledger, OpClass::qr);
      le[k + 1] = chain_update_left(le[k], chain.blocks[k], x[k], ledger);
    }
    x[d - 1] = chain_project_one_site(le[d - 1], re[d - 1], ledger);
    norm_sq = x[d - 1].vector().squaredNorm();
  };

  FitReport rep;
  forward_two_site();
  rep.sweeps = 1;
  rep.converged = d == 2;
  while (!rep.converged && rep.sweeps + 2 <= std::max<std::size_t>(max_fit_iters, 1)) {
    const double before = norm_sq;
    backward_one_site();
    forward_one_site();
    rep.sweeps += 2;
    rep.converged = std::abs(norm_sq - before) <= fit_tol * norm_sq;
  }
  rep.norm_sq = norm_sq;
  if (report != nullptr) *report = rep;
  return TensorTrain(std::move(x), Gauge::site(d - 1));
}

}  // namespace

TensorTrain compress_two_site(const CoarseSpace& space, const Vector& coeffs, std::size_t max_rank,
                              double svd_tol, TwoSiteCompression method, double fit_tol,
                              std::size_t max_fit_iters, CostLedger* ledger, FitReport* report) {
  if (space.mode != SiteMode::two_site) throw std::invalid_argument("compress_two_site needs a two-site space");
  switch (method) {
    case TwoSiteCompression::fit:
      return fit_two_site(space, coeffs, max_rank, svd_tol, fit_tol, max_fit_iters, ledger, report);
    case TwoSiteCompression::sum_round: {
      TensorTrain sum = scale(space.vector(0), coeffs(0));
      for (std::size_t k = 1; k < space.size(); ++k) {
        sum = add(sum, scale(space.vector(k), coeffs(static_cast<Eigen::Index>(k))));
      }
      if (report != nullptr) *report = FitReport{};
      return round(sum, max_rank, svd_tol, ledger);
    }
    case TwoSiteCompression::block_round:
      if (report != nullptr) *report = FitReport{};
      return round(space.combination(coeffs, ledger), max_rank, svd_tol, ledger);
  }
  throw std::invalid_argument("unknown compression method");
}

// ---------------------------------------------------------------------------
// Driver

void A2dmrgConfig::validate() const {
  if (max_rank < 1) throw std::invalid_argument("max_rank must be at least 1");
  if (!(svd_tol >= 0.0) || !(eig_tol > 0.0) || !(energy_rel_tol > 0.0) || !(coarse_eps > 0.0) ||
      !(fit_tol > 0.0) || !(coarse_krylov_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
}

A2dmrgResult run_a2dmrg(const TensorTrain& init, const MpOperator& op, const A2dmrgConfig& config,
                        CostLedger* ledger) {
  config.validate();
  const std::size_t d = init.order();
  if (d == 0 || init.dims() != op.dims()) throw ShapeError("run_a2dmrg: state and operator dimensions differ");
  if (config.mode == SiteMode::two_site && d < 2) throw ShapeError("run_a2dmrg: two-site mode needs d >= 2");
  CostLedger own;
  CostLedger* led = ledger != nullptr ? ledger : &own;

  TensorTrain prev = init.is_left_orthogonal() ? init : orthogonalize(init, d - 1, led);
  prev = normalized(prev);

  A2dmrgResult result;
  A2dmrgTrace& trace = result.trace;
  double prev_energy = rayleigh_quotient(prev, op);
  trace.initial_energy = prev_energy;

  LocalSolveOptions lopts;
  lopts.mode = config.mode;
  lopts.max_rank = config.max_rank;
  lopts.svd_tol = config.svd_tol;
  lopts.lanczos.tol = config.eig_tol;
  lopts.lanczos.max_iter = config.lanczos_max_iter;
  lopts.workers = config.workers;

  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    A2dmrgIteration rec;
    rec.iteration = it;
    rec.prev_energy = prev_energy;

    // Family of orthogonal configurations (sequential)
    auto fam = std::make_shared<const OrthogonalFamily>(orthogonal_family(prev, led));
    // Local solves (parallel)
    LocalUpdateSet set = local_solves(fam, op, lopts, led);
    // Coarse entries in parallel, then a small sequential solve
    const CoarseSpace space = build_coarse_space(set, config.coarse_basis, config.normalize_members);
    CoarseProblem cp = config.coarse_solver == CoarseSolver::direct
                           ? assemble_coarse(space, op, config.coarse_eps, config.workers, led)
                           : solve_coarse_krylov(space, op, config.coarse_eps, config.coarse_krylov_tol,
                                                 config.workers, led);
    if (config.coarse_solver == CoarseSolver::direct) solve_coarse(cp, led);
    led->close_round();
    // Compression (sequential)
    FitReport fit;
    TensorTrain next = config.mode == SiteMode::one_site
                           ? compress_one_site(space, cp.coeffs, config.max_rank, config.svd_tol, led)
                           : compress_two_site(space, cp.coeffs, config.max_rank, config.svd_tol,
                                               config.compression, config.fit_tol, config.max_fit_iters,
                                               led, &fit);
    prev = normalized(next);

    // Diagnostics, not charged.
    const double energy = rayleigh_quotient(prev, op);
    double min_member = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < set.members(); ++k) {
      min_member = std::min(min_member, rayleigh_quotient(set.member(k), op));
    }
    rec.energy = energy;
    rec.coarse_energy = cp.coarse_energy;
    rec.min_member_energy = min_member;
    rec.coarse_dim = space.size();
    rec.coarse_p = cp.p;
    rec.krylov_iterations = cp.krylov_iterations;
    for (const LocalUpdate& u : set.updates) {
      rec.lanczos_iters.push_back(u.lanczos_iters);
      rec.local_energies.push_back(u.local_energy);
    }
    rec.fit_sweeps = fit.sweeps;
    rec.ranks = prev.ranks();
    rec.flops_seq = led->sequential_flops();
    rec.flops_max_worker = led->max_worker_flops();
    rec.cost_per_processor = led->cost_per_processor();
    rec.total_flops = led->total_flops();
    trace.iterations.push_back(rec);

    const bool done = std::abs(energy - prev_energy) <= config.energy_rel_tol * std::abs(energy);
    prev_energy = energy;
    if (done) {
      trace.converged = true;
      break;
    }
  }
  result.state = prev;
  result.energy = prev_energy;
  trace.ledger = led->report();
  return result;
}

}  // namespace a2dmrg
