#include <gtest/gtest.h>

#include <random>

#include "a2dmrg/errors.hpp"
#include "a2dmrg/mpo.hpp"
#include "oracles.hpp"

using namespace a2dmrg;

namespace {

RowMatrix effective_1site_matrix(const TensorTrain& x, const MpOperator& op, std::size_t i) {
  const Environment l = left_env(x, op, i), r = right_env(x, op, i + 1);
  const std::size_t m = x.core(i).size();
  RowMatrix out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t c = 0; c < m; ++c) {
    Vector e = Vector::Unit(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c));
    out.col(static_cast<Eigen::Index>(c)) = effective_matvec_1site(l, op.core(i), r, e);
  }
  return out;
}

RowMatrix effective_2site_matrix(const TensorTrain& x, const MpOperator& op, std::size_t k) {
  const Environment l = left_env(x, op, k), r = right_env(x, op, k + 2);
  const std::size_t m = x.rank(k) * x.dim(k) * x.dim(k + 1) * x.rank(k + 2);
  RowMatrix out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t c = 0; c < m; ++c) {
    Vector e = Vector::Unit(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c));
    out.col(static_cast<Eigen::Index>(c)) = effective_matvec_2site(l, op.core(k), op.core(k + 1), r, e);
  }
  return out;
}

}  // namespace

TEST(Mpo, DenseMatricizationMatchesEntrywiseOracle) {
  std::mt19937_64 rng(1);
  const MpOperator op = oracle::random_symmetric_mpo({2, 3, 2}, 2, rng);
  EXPECT_LT(oracle::rel_diff(mpo_to_dense(op), oracle::mpo_dense(op)), 1e-13);
  const RowMatrix d = mpo_to_dense(op);
  EXPECT_LT((d - d.transpose()).norm(), 1e-12 * d.norm());
}

TEST(Mpo, IdentityAddTransposeScale) {
  std::mt19937_64 rng(2);
  const std::vector<std::size_t> dims{2, 2, 3};
  EXPECT_LT(oracle::rel_diff(mpo_to_dense(identity_mpo(dims)), RowMatrix(RowMatrix::Identity(12, 12))), 1e-15);

  std::vector<Tensor> ca, cb;
  for (std::size_t j = 0; j < 3; ++j) {
    ca.push_back(oracle::random_tensor({j == 0 ? 1u : 2u, dims[j], dims[j], j == 2 ? 1u : 2u}, rng));
    cb.push_back(oracle::random_tensor({j == 0 ? 1u : 3u, dims[j], dims[j], j == 2 ? 1u : 3u}, rng));
  }
  const MpOperator a(ca, false), b(cb, false);
  const RowMatrix da = oracle::mpo_dense(a), db = oracle::mpo_dense(b);
  const MpOperator s = mpo_add(a, b);
  EXPECT_EQ(s.rank(1), 5u);
  EXPECT_LT(oracle::rel_diff(oracle::mpo_dense(s), RowMatrix(da + db)), 1e-13);
  EXPECT_LT(oracle::rel_diff(oracle::mpo_dense(mpo_transpose(a)), RowMatrix(da.transpose())), 1e-14);
  EXPECT_LT(oracle::rel_diff(oracle::mpo_dense(mpo_scale(a, -3.0)), RowMatrix(-3.0 * da)), 1e-14);
}

TEST(Mpo, RejectsMalformedCores) {
  EXPECT_THROW(MpOperator({Tensor({1, 2, 3, 1})}, false), ShapeError);
  EXPECT_THROW(MpOperator({Tensor({1, 2, 2, 2}), Tensor({3, 2, 2, 1})}, false), ShapeError);
}

TEST(Mpo, ToDenseHonoursCap) {
  std::mt19937_64 rng(3);
  const MpOperator op = oracle::random_symmetric_mpo({2, 2, 2, 2}, 1, rng);
  EXPECT_THROW(mpo_to_dense(op, 8), CapExceeded);
}

TEST(Mpo, ApplyDenseMatchesMatrix) {
  std::mt19937_64 rng(4);
  const MpOperator op = oracle::random_symmetric_mpo({2, 3, 2, 2}, 3, rng);
  const Vector x = oracle::random_tensor({24}, rng).vector();
  EXPECT_LT(oracle::rel_diff(apply_mpo_dense(op, x), Vector(oracle::mpo_dense(op) * x)), 1e-12);
}

TEST(Transfer, MatchesLoopDefinition) {
  std::mt19937_64 rng(5);
  const Tensor bra = oracle::random_tensor({2, 3, 2}, rng);
  const Tensor w = oracle::random_tensor({2, 3, 3, 3}, rng);
  const Tensor ket = oracle::random_tensor({1, 3, 2}, rng);
  const Tensor g = build_transfer(bra, w, ket);
  ASSERT_EQ(g.shape(), (Shape{2, 2, 2, 3, 1, 2}));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t kp = 0; kp < 2; ++kp)
      for (std::size_t K = 0; K < 2; ++K)
        for (std::size_t Kp = 0; Kp < 3; ++Kp)
          for (std::size_t lp = 0; lp < 2; ++lp) {
            double s = 0.0;
            for (std::size_t a = 0; a < 3; ++a)
              for (std::size_t b = 0; b < 3; ++b) s += bra.at({k, a, kp}) * w.at({K, a, b, Kp}) * ket.at({0, b, lp});
            EXPECT_NEAR(g.at({k, kp, K, Kp, 0, lp}), s, 1e-12);
          }
}

TEST(Environment, FullContractionIsExpectation) {
  std::mt19937_64 rng(6);
  const std::vector<std::size_t> dims{2, 2, 3, 2};
  const MpOperator op = oracle::random_symmetric_mpo(dims, 2, rng);
  const TensorTrain x = random_tt(dims, {2, 3, 2}, 7), y = random_tt(dims, {2, 2, 2}, 8);
  const double ref = oracle::tt_dense(x).dot(oracle::mpo_dense(op) * oracle::tt_dense(y));
  EXPECT_NEAR(expectation(x, op, y), ref, 1e-12 * std::abs(ref));
  const Environment l = left_env(x, op, y, 4);
  const Environment r = right_env(x, op, y, 0);
  ASSERT_EQ(l.data.size(), 1u);
  EXPECT_NEAR(l.data[0], ref, 1e-12 * std::abs(ref));
  EXPECT_NEAR(r.data[0], ref, 1e-12 * std::abs(ref));
  // splitting at any bond gives the same value
  for (std::size_t b = 0; b <= 4; ++b) {
    const Environment lb = left_env(x, op, y, b), rb = right_env(x, op, y, b);
    EXPECT_NEAR(lb.data.vector().dot(rb.data.vector()), ref, 1e-12 * std::abs(ref));
  }
  const double rq = oracle::tt_dense(x).dot(oracle::mpo_dense(op) * oracle::tt_dense(x)) /
                    oracle::tt_dense(x).squaredNorm();
  EXPECT_NEAR(rayleigh_quotient(x, op), rq, 1e-12 * std::abs(rq));
}

TEST(Environment, ShapeAndSideChecks) {
  std::mt19937_64 rng(9);
  const MpOperator op = oracle::random_symmetric_mpo({2, 2, 2}, 2, rng);
  const TensorTrain x = random_tt({2, 2, 2}, {2, 2}, 9);
  const Environment l = left_env(x, op, 1);
  EXPECT_EQ(l.data.shape(), (Shape{2, 4, 2}));
  EXPECT_THROW(update_right_env(l, x.core(1), op.core(1), x.core(1)), ShapeError);
}

TEST(EffectiveMatvec, OneSiteMatchesProjectedOperator) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const std::vector<std::size_t> dims{2, 3, 2, 2};
    const MpOperator op = oracle::random_symmetric_mpo(dims, 2, rng);
    const TensorTrain x = random_tt(dims, {2, 3, 2}, seed);
    const RowMatrix H = oracle::mpo_dense(op);
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const RowMatrix P = oracle::retraction_1site(x.cores(), i);
      const RowMatrix ref = P.transpose() * H * P;
      EXPECT_LT(oracle::rel_diff(effective_1site_matrix(x, op, i), ref), 1e-10);
    }
  }
}

TEST(EffectiveMatvec, TwoSiteMatchesProjectedOperator) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(200 + seed);
    const std::vector<std::size_t> dims{2, 2, 2, 3};
    const MpOperator op = oracle::random_symmetric_mpo(dims, 3, rng);
    const TensorTrain x = random_tt(dims, {2, 4, 3}, seed);
    const RowMatrix H = oracle::mpo_dense(op);
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
      const RowMatrix P = oracle::retraction_2site(x.cores(), k);
      EXPECT_LT(oracle::rel_diff(effective_2site_matrix(x, op, k), RowMatrix(P.transpose() * H * P)), 1e-10);
    }
  }
}

TEST(EffectiveMatvec, SymmetricAtOrthogonalCentre) {
  std::mt19937_64 rng(300);
  const std::vector<std::size_t> dims{2, 2, 2, 2, 2};
  const MpOperator op = oracle::random_symmetric_mpo(dims, 2, rng);
  const TensorTrain raw = random_tt(dims, {2, 4, 4, 2}, 301);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const TensorTrain x = orthogonalize(raw, i);
    const RowMatrix m = effective_1site_matrix(x, op, i);
    EXPECT_LT((m - m.transpose()).norm(), 1e-12 * m.norm());
    // with an orthonormal retraction the spectrum is bracketed by the full one
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> local{Eigen::MatrixXd(m)};
    const double full_min = oracle::lowest_eigenvalue(oracle::mpo_dense(op));
    EXPECT_GE(local.eigenvalues()(0), full_min - 1e-10);
  }
}

TEST(EffectiveMatvec, ChargesMatvecClass) {
  std::mt19937_64 rng(400);
  const MpOperator op = oracle::random_symmetric_mpo({2, 2, 2}, 2, rng);
  const TensorTrain x = random_tt({2, 2, 2}, {2, 2}, 1);
  CostLedger ledger;
  const Vector v = x.core(1).vector();
  effective_matvec_1site(left_env(x, op, 1), op.core(1), right_env(x, op, 2), v, &ledger);
  EXPECT_GT(ledger.class_flops(OpClass::matvec), 0u);
  EXPECT_EQ(ledger.total_flops(), ledger.class_flops(OpClass::matvec));
}
