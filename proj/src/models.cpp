#include "a2dmrg/models.hpp"

#include <random>

#include "a2dmrg/eigensolvers.hpp"
#include "a2dmrg/errors.hpp"
#include "a2dmrg/serialization.hpp"

namespace a2dmrg {
namespace {

using Op2 = std::array<double, 4>;  // row-major 2x2

constexpr Op2 kId{1, 0, 0, 1};
constexpr Op2 kX{0, 1, 1, 0};
constexpr Op2 kZ{1, 0, 0, -1};
constexpr Op2 kIY{0, 1, -1, 0};  // i * Y, real

void put(Tensor& core, std::size_t a, std::size_t b, const Op2& op, double coeff) {
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t t = 0; t < 2; ++t) core.at({a, s, t, b}) += coeff * op[2 * s + t];
}

// Restricts a bulk lower-triangular core to the chain boundaries: the first
// core keeps row `start`, the last keeps column `finish`.
std::vector<Tensor> chain_from_bulk(const Tensor& bulk, std::size_t d, std::size_t start,
                                    std::size_t finish) {
  const std::size_t R = bulk.dim(0);
  const std::size_t n = bulk.dim(1);
  std::vector<Tensor> cores;
  for (std::size_t j = 0; j < d; ++j) {
    const bool first = j == 0;
    const bool last = j + 1 == d;
    Tensor c({first ? 1 : R, n, n, last ? 1 : R});
    for (std::size_t a = 0; a < c.dim(0); ++a)
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t b = 0; b < c.dim(3); ++b) {
            c.at({a, s, t, b}) = bulk.at({first ? start : a, s, t, last ? finish : b});
          }
    cores.push_back(std::move(c));
  }
  return cores;
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::tfim: return "tfim";
    case ModelKind::heisenberg: return "heisenberg";
    case ModelKind::random_symmetric: return "random-symmetric";
    case ModelKind::from_file: return "from-file";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "tfim") return ModelKind::tfim;
  if (name == "heisenberg") return ModelKind::heisenberg;
  if (name == "random-symmetric") return ModelKind::random_symmetric;
  if (name == "from-file") return ModelKind::from_file;
  throw ParseError("unknown model kind '" + name + "'");
}

MpOperator build_tfim(std::size_t d, double J, double h) {
  if (d < 2) throw std::invalid_argument("build_tfim: d must be at least 2");
  // states: 0 = finished, 1 = Z placed, 2 = not started
  Tensor bulk({3, 2, 2, 3});
  put(bulk, 0, 0, kId, 1.0);
  put(bulk, 1, 0, kZ, -J);
  put(bulk, 2, 0, kX, -h);
  put(bulk, 2, 1, kZ, 1.0);
  put(bulk, 2, 2, kId, 1.0);
  return MpOperator(chain_from_bulk(bulk, d, 2, 0), true);
}

MpOperator build_heisenberg(std::size_t d, double J) {
  if (d < 2) throw std::invalid_argument("build_heisenberg: d must be at least 2");
  // states: 0 = finished, 1..3 = X / iY / Z placed, 4 = not started
  Tensor bulk({5, 2, 2, 5});
  put(bulk, 0, 0, kId, 1.0);
  put(bulk, 1, 0, kX, 0.25 * J);
  put(bulk, 2, 0, kIY, -0.25 * J);
  put(bulk, 3, 0, kZ, 0.25 * J);
  put(bulk, 4, 1, kX, 1.0);
  put(bulk, 4, 2, kIY, 1.0);
  put(bulk, 4, 3, kZ, 1.0);
  put(bulk, 4, 4, kId, 1.0);
  return MpOperator(chain_from_bulk(bulk, d, 4, 0), true);
}

MpOperator build_random_symmetric(std::size_t d, std::size_t n, std::size_t R, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("build_random_symmetric: d must be at least 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n * R)));
  std::vector<Tensor> cores;
  for (std::size_t j = 0; j < d; ++j) {
    Tensor c({j == 0 ? 1 : R, n, n, j + 1 == d ? 1 : R});
    for (double& v : c.values()) v = normal(rng);
    cores.push_back(std::move(c));
  }
  const MpOperator b(std::move(cores), false);
  MpOperator sum = mpo_add(mpo_scale(b, 0.5), mpo_scale(mpo_transpose(b), 0.5));
  return MpOperator(sum.cores(), true);
}

MpOperator build_model(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::tfim: return build_tfim(spec.d, spec.J, spec.h);
    case ModelKind::heisenberg: return build_heisenberg(spec.d, spec.J);
    case ModelKind::random_symmetric: return build_random_symmetric(spec.d, spec.n, spec.R, spec.seed);
    case ModelKind::from_file: return load_mpo(spec.path);
  }
  throw ParseError("unknown model kind");
}

GroundState dense_ground_state(const MpOperator& op, std::size_t cap) {
  const std::size_t n_full = op.full_dim();
  if (n_full > cap) {
    throw CapExceeded("oracle dimension " + std::to_string(n_full) + " exceeds the cap of " +
                      std::to_string(cap) + " (set A2DMRG_ORACLE_CAP to raise it)");
  }
  GroundState gs;
  if (n_full <= 1024) {
    DenseEigenpair e = dense_lowest_eig(mpo_to_dense(op, cap));
    gs.energy = e.eigenvalue;
    gs.state = Tensor::from_vector(e.eigenvector, op.dims());
    return gs;
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector init(static_cast<Eigen::Index>(n_full));
  for (Eigen::Index i = 0; i < init.size(); ++i) init(i) = normal(rng);
  LanczosOptions opts;
  opts.tol = 1e-12;
  opts.max_iter = std::min<std::size_t>(n_full, 3000);
  LanczosResult r = lanczos_lowest([&op](const Vector& x) { return apply_mpo_dense(op, x); },
                                   n_full, init, opts);
  if (!r.converged) throw NumericalError("oracle Lanczos did not converge");
  gs.energy = r.eigenvalue;
  gs.state = Tensor::from_vector(r.eigenvector, op.dims());
  return gs;
}

}  // namespace a2dmrg
