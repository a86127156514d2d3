#include "a2dmrg/dmrg.hpp"

#include <cmath>
#include <stdexcept>

#include "a2dmrg/errors.hpp"
#include "a2dmrg/linalg.hpp"

namespace a2dmrg {
namespace {

LanczosOptions lanczos_options(const SweepConfig& c) {
  LanczosOptions o;
  o.tol = c.eig_tol;
  o.max_iter = c.lanczos_max_iter;
  return o;
}

bool relative_change_below(double e_new, double e_old, double tol) {
  const double scale = std::max(std::abs(e_new), 1e-300);
  return std::abs(e_new - e_old) <= tol * scale;
}

}  // namespace

void SweepConfig::validate() const {
  if (max_rank < 1) throw std::invalid_argument("max_rank must be at least 1");
  if (!(svd_tol >= 0.0) || !(eig_tol > 0.0) || !(energy_rel_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (max_half_sweeps < 1) throw std::invalid_argument("max_half_sweeps must be at least 1");
}

MicroStepResult micro_step_1site(const Environment& left, const Tensor& op_core,
                                 const Environment& right, const Tensor& warm_start,
                                 const LanczosOptions& options, CostLedger* ledger) {
  const Shape shape = warm_start.shape();
  auto mv = [&](const Vector& v) { return effective_matvec_1site(left, op_core, right, v, ledger); };
  MicroStepResult out;
  out.eig = lanczos_lowest(mv, warm_start.size(), warm_start.vector(), options, ledger);
  out.tensor = Tensor::from_vector(out.eig.eigenvector, shape);
  return out;
}

MicroStepResult micro_step_1site(const TensorTrain& state, const MpOperator& op, std::size_t i,
                                 const LanczosOptions& options, CostLedger* ledger) {
  if (i >= state.order()) throw ShapeError("micro_step_1site: site out of range");
  if (!state.gauge().is_site(i)) throw GaugeError("micro_step_1site: state is not site-orthogonal at the site");
  const Environment l = left_env(state, op, i, ledger);
  const Environment r = right_env(state, op, i + 1, ledger);
  return micro_step_1site(l, op.core(i), r, state.core(i), options, ledger);
}

MicroStepResult micro_step_2site(const Environment& left, const Tensor& op_core_k,
                                 const Tensor& op_core_k1, const Environment& right,
                                 const Tensor& warm_start, const LanczosOptions& options,
                                 CostLedger* ledger) {
  const Shape shape = warm_start.shape();
  auto mv = [&](const Vector& v) {
    return effective_matvec_2site(left, op_core_k, op_core_k1, right, v, ledger);
  };
  MicroStepResult out;
  out.eig = lanczos_lowest(mv, warm_start.size(), warm_start.vector(), options, ledger);
  out.tensor = Tensor::from_vector(out.eig.eigenvector, shape);
  return out;
}

MicroStepResult micro_step_2site(const TensorTrain& state, const MpOperator& op, std::size_t k,
                                 const LanczosOptions& options, CostLedger* ledger) {
  if (k + 1 >= state.order()) throw ShapeError("micro_step_2site: pair out of range");
  if (!state.gauge().is_site(k)) throw GaugeError("micro_step_2site: state is not site-orthogonal at the pair");
  const Environment l = left_env(state, op, k, ledger);
  const Environment r = right_env(state, op, k + 2, ledger);
  const Tensor warm = merge_cores(state.core(k), state.core(k + 1), ledger, OpClass::other);
  return micro_step_2site(l, op.core(k), op.core(k + 1), r, warm, options, ledger);
}

SplitResult split_and_shift(const Tensor& block, ShiftDirection direction, std::size_t max_rank,
                            double svd_tol, CostLedger* ledger) {
  if (block.order() != 4) throw ShapeError("split_and_shift: block must have order 4");
  const std::size_t a = block.dim(0), n1 = block.dim(1), n2 = block.dim(2), b = block.dim(3);
  SvdFactors f = thin_svd(block.matrix(2), ledger);
  const std::size_t s = relative_truncation_rank(f.s, max_rank, svd_tol);
  const auto k = static_cast<Eigen::Index>(s);
  SplitResult out;
  out.discarded_weight = tail_mass(f.s, s);
  if (direction == ShiftDirection::left_to_right) {
    RowMatrix right = f.s.head(k).asDiagonal() * f.vt.topRows(k);
    out.left = Tensor::from_matrix(f.u.leftCols(k), {a, n1, s});
    out.right = Tensor::from_matrix(right, {s, n2, b});
  } else {
    RowMatrix left = f.u.leftCols(k) * f.s.head(k).asDiagonal();
    out.left = Tensor::from_matrix(left, {a, n1, s});
    out.right = Tensor::from_matrix(f.vt.topRows(k), {s, n2, b});
  }
  return out;
}

namespace {

class Sweeper {
 public:
  Sweeper(const TensorTrain& init, const MpOperator& op, const SweepConfig& config, CostLedger* ledger)
      : op_(op), config_(config), ledger_(ledger), opts_(lanczos_options(config)) {
    TensorTrain start = init.gauge().is_site(0) ? init : orthogonalize(init, 0, ledger_);
    cores_ = start.cores();
    d_ = cores_.size();
    left_.resize(d_ + 1);
    right_.resize(d_ + 1);
    left_[0] = left_boundary();
    right_[d_] = right_boundary(d_);
    for (std::size_t b = d_; b > 0; --b) {
      right_[b - 1] = update_right_env(right_[b], cores_[b - 1], op_.core(b - 1), cores_[b - 1], ledger_,
                                       OpClass::env_build);
    }
    const double nn = cores_[0].vector().squaredNorm();
    if (!(nn > 0.0)) throw NumericalError("run_dmrg: initial state has zero norm");
    trace_.initial_energy = right_[0].data[0] / nn;
  }

  DmrgResult run() {
    if (d_ == 1) {
      solve_single();
    } else {
      double previous = trace_.initial_energy;
      for (std::size_t h = 0; h < config_.max_half_sweeps; ++h) {
        const bool forward = h % 2 == 0;
        if (config_.mode == SiteMode::one_site) {
          forward ? sweep_1site_forward(h) : sweep_1site_backward(h);
        } else {
          forward ? sweep_2site_forward(h) : sweep_2site_backward(h);
        }
        const double e = trace_.steps.back().energy;
        trace_.half_sweep_energies.push_back(e);
        trace_.half_sweep_flops.push_back(ledger_->total_flops());
        if (relative_change_below(e, previous, config_.energy_rel_tol)) {
          trace_.converged = true;
          break;
        }
        previous = e;
      }
    }
    DmrgResult out;
    out.state = TensorTrain(cores_, Gauge::site(center_));
    out.energy = trace_.half_sweep_energies.back();
    trace_.ledger = ledger_->report();
    out.trace = std::move(trace_);
    return out;
  }

 private:
  void record(std::size_t h, std::size_t site, const MicroStepResult& r, double discarded) {
    MicroStepRecord rec;
    rec.half_sweep = h;
    rec.site = site;
    rec.energy = r.eig.eigenvalue;
    rec.lanczos_iters = r.eig.iterations;
    rec.lanczos_converged = r.eig.converged;
    rec.discarded_weight = discarded;
    rec.flops_cum = ledger_->total_flops();
    trace_.steps.push_back(rec);
  }

  void solve_single() {
    MicroStepResult r = micro_step_1site(left_[0], op_.core(0), right_[1], cores_[0], opts_, ledger_);
    cores_[0] = r.tensor;
    record(0, 0, r, 0.0);
    trace_.half_sweep_energies.push_back(r.eig.eigenvalue);
    trace_.half_sweep_flops.push_back(ledger_->total_flops());
    trace_.converged = r.eig.converged;
    center_ = 0;
  }

  // Rebuilt policy: recompute the far-side environment from the boundary.
  void rebuild_right(std::size_t b) {
    if (config_.environments != EnvironmentPolicy::rebuilt) return;
    Environment env = right_boundary(d_);
    for (std::size_t j = d_; j > b; --j) {
      env = update_right_env(env, cores_[j - 1], op_.core(j - 1), cores_[j - 1], ledger_, OpClass::env_build);
    }
    right_[b] = std::move(env);
  }

  void rebuild_left(std::size_t b) {
    if (config_.environments != EnvironmentPolicy::rebuilt) return;
    Environment env = left_boundary();
    for (std::size_t j = 0; j < b; ++j) {
      env = update_left_env(env, cores_[j], op_.core(j), cores_[j], ledger_, OpClass::env_build);
    }
    left_[b] = std::move(env);
  }

  void sweep_1site_forward(std::size_t h) {
    for (std::size_t i = 0; i + 1 < d_; ++i) {
      rebuild_right(i + 1);
      MicroStepResult r = micro_step_1site(left_[i], op_.core(i), right_[i + 1], cores_[i], opts_, ledger_);
      const std::size_t ra = r.tensor.dim(0), n = r.tensor.dim(1);
      QrFactors qr = thin_qr(r.tensor.matrix(2), ledger_);
      const std::size_t k = static_cast<std::size_t>(qr.q.cols());
      cores_[i] = Tensor::from_matrix(qr.q, {ra, n, k});
      const Tensor rt = Tensor::from_matrix(qr.r, {k, r.tensor.dim(2)});
      cores_[i + 1] = tensordot(rt, {1}, cores_[i + 1], {0}, ledger_, OpClass::qr);
      left_[i + 1] = update_left_env(left_[i], cores_[i], op_.core(i), cores_[i], ledger_);
      record(h, i, r, 0.0);
    }
    center_ = d_ - 1;
  }

  void sweep_1site_backward(std::size_t h) {
    for (std::size_t i = d_ - 1; i > 0; --i) {
      rebuild_left(i);
      MicroStepResult r = micro_step_1site(left_[i], op_.core(i), right_[i + 1], cores_[i], opts_, ledger_);
      const std::size_t n = r.tensor.dim(1), rb = r.tensor.dim(2);
      LqFactors lq = thin_lq(r.tensor.matrix(1), ledger_);
      const std::size_t k = static_cast<std::size_t>(lq.q.rows());
      cores_[i] = Tensor::from_matrix(lq.q, {k, n, rb});
      const Tensor lt = Tensor::from_matrix(lq.l, {r.tensor.dim(0), k});
      cores_[i - 1] = tensordot(cores_[i - 1], {2}, lt, {0}, ledger_, OpClass::qr);
      right_[i] = update_right_env(right_[i + 1], cores_[i], op_.core(i), cores_[i], ledger_);
      record(h, i, r, 0.0);
    }
    center_ = 0;
  }

  void sweep_2site_forward(std::size_t h) {
    for (std::size_t k = 0; k + 1 < d_; ++k) {
      rebuild_right(k + 2);
      const Tensor warm = merge_cores(cores_[k], cores_[k + 1], ledger_, OpClass::other);
      MicroStepResult r = micro_step_2site(left_[k], op_.core(k), op_.core(k + 1), right_[k + 2], warm,
                                           opts_, ledger_);
      SplitResult s = split_and_shift(r.tensor, ShiftDirection::left_to_right, config_.max_rank,
                                      config_.svd_tol, ledger_);
      cores_[k] = std::move(s.left);
      cores_[k + 1] = std::move(s.right);
      left_[k + 1] = update_left_env(left_[k], cores_[k], op_.core(k), cores_[k], ledger_);
      record(h, k, r, s.discarded_weight);
    }
    center_ = d_ - 1;
  }

  void sweep_2site_backward(std::size_t h) {
    for (std::size_t k = d_ - 1; k > 0; --k) {
      const std::size_t l = k - 1;
      rebuild_left(l);
      const Tensor warm = merge_cores(cores_[l], cores_[k], ledger_, OpClass::other);
      MicroStepResult r = micro_step_2site(left_[l], op_.core(l), op_.core(k), right_[k + 1], warm,
                                           opts_, ledger_);
      SplitResult s = split_and_shift(r.tensor, ShiftDirection::right_to_left, config_.max_rank,
                                      config_.svd_tol, ledger_);
      cores_[l] = std::move(s.left);
      cores_[k] = std::move(s.right);
      right_[k] = update_right_env(right_[k + 1], cores_[k], op_.core(k), cores_[k], ledger_);
      record(h, l, r, s.discarded_weight);
    }
    center_ = 0;
  }

  const MpOperator& op_;
  SweepConfig config_;
  CostLedger* ledger_;
  LanczosOptions opts_;
  std::vector<Tensor> cores_;
  std::size_t d_ = 0;
  std::size_t center_ = 0;
  std::vector<Environment> left_, right_;
  SweepTrace trace_;
};

}  // namespace

DmrgResult run_dmrg(const TensorTrain& init, const MpOperator& op, const SweepConfig& config,
                    CostLedger* ledger) {
  config.validate();
  if (init.order() == 0) throw ShapeError("run_dmrg: empty initial state");
  if (init.dims() != op.dims()) throw ShapeError("run_dmrg: state and operator dimensions differ");
  CostLedger local;
  Sweeper sweeper(init, op, config, ledger != nullptr ? ledger : &local);
  return sweeper.run();
}

}  // namespace a2dmrg
