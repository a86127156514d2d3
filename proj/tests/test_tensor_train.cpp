#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "a2dmrg/errors.hpp"
#include "a2dmrg/linalg.hpp"
#include "a2dmrg/tensor_train.hpp"
#include "oracles.hpp"

using namespace a2dmrg;

namespace {

Vector dense_of(const TensorTrain& tt) {
  Tensor t = contract_full(tt);
  return t.vector();
}

RowMatrix unfolding(const Vector& v, const std::vector<std::size_t>& dims, std::size_t split) {
  std::size_t rows = 1;
  for (std::size_t j = 0; j < split; ++j) rows *= dims[j];
  const std::size_t cols = static_cast<std::size_t>(v.size()) / rows;
  return Eigen::Map<const RowMatrix>(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace

TEST(Tensor, TensordotMatchesLoops) {
  std::mt19937_64 rng(3);
  const Tensor a = oracle::random_tensor({2, 3, 4}, rng);
  const Tensor b = oracle::random_tensor({4, 3, 5}, rng);
  const Tensor c = tensordot(a, {1, 2}, b, {1, 0});
  ASSERT_EQ(c.shape(), (Shape{2, 5}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t l = 0; l < 5; ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 4; ++k) s += a.at({i, j, k}) * b.at({k, j, l});
      EXPECT_NEAR(c.at({i, l}), s, 1e-12);
    }
}

TEST(Tensor, PermuteMovesAxes) {
  std::mt19937_64 rng(4);
  const Tensor a = oracle::random_tensor({2, 3, 4}, rng);
  const Tensor p = permute(a, {2, 0, 1});
  ASSERT_EQ(p.shape(), (Shape{4, 2, 3}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(p.at({k, i, j}), a.at({i, j, k}));
}

TEST(Linalg, FactorizationsReconstructAndFixSigns) {
  std::mt19937_64 rng(5);
  const RowMatrix m = oracle::random_tensor({6, 4}, rng).matrix(1);
  const QrFactors qr = thin_qr(m);
  EXPECT_LT((qr.q * qr.r - m).norm(), 1e-12 * m.norm());
  EXPECT_LT((qr.q.transpose() * qr.q - RowMatrix::Identity(4, 4)).norm(), 1e-12);
  for (Eigen::Index c = 0; c < qr.q.cols(); ++c) {
    Eigen::Index arg;
    qr.q.col(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(qr.q(arg, c), 0.0);
  }
  const LqFactors lq = thin_lq(m.transpose());
  EXPECT_LT((lq.l * lq.q - m.transpose()).norm(), 1e-12 * m.norm());
  const SvdFactors svd = thin_svd(m);
  EXPECT_LT((svd.u * svd.s.asDiagonal() * svd.vt - m).norm(), 1e-12 * m.norm());
  for (Eigen::Index i = 1; i < svd.s.size(); ++i) EXPECT_GE(svd.s(i - 1), svd.s(i));
}

TEST(Linalg, TruncationRules) {
  Vector s(4);
  s << 4.0, 2.0, 1e-3, 1e-9;
  EXPECT_EQ(relative_truncation_rank(s, 10, 1e-6), 3u);
  EXPECT_EQ(relative_truncation_rank(s, 2, 0.0), 2u);
  EXPECT_EQ(relative_truncation_rank(s, 10, 10.0), 1u);
  EXPECT_NEAR(tail_mass(s, 2), std::sqrt(1e-6 + 1e-18), 1e-15);
  EXPECT_EQ(frobenius_truncation_rank(s, 10, 2e-3), 2u);
}

TEST(ContractFull, SingleCoreIsTheVector) {
  Tensor c({1, 3, 1}, {1.0, -2.0, 5.0});
  const TensorTrain tt({c});
  const Tensor full = contract_full(tt);
  EXPECT_EQ(full.values(), c.values());
}

TEST(ContractFull, UnitRankOneCoresGiveAllOnes) {
  std::vector<Tensor> cores;
  for (int j = 0; j < 4; ++j) cores.push_back(Tensor({1, 2, 1}, {1.0, 1.0}));
  const Tensor full = contract_full(TensorTrain(cores));
  ASSERT_EQ(full.size(), 16u);
  for (double v : full.values()) EXPECT_EQ(v, 1.0);
}

TEST(ContractFull, MatchesNaiveSummation) {
  const TensorTrain tt = random_tt({2, 2, 2, 2}, {2, 3, 2}, 7);
  EXPECT_LT(oracle::rel_diff(dense_of(tt), oracle::tt_dense(tt)), 1e-13);
}

TEST(ContractFull, CapExceededThrows) {
  const TensorTrain tt = random_tt({2, 2, 2, 2, 2}, {2, 2, 2, 2}, 1);
  EXPECT_THROW(contract_full(tt, 16), CapExceeded);
}

TEST(TensorTrain, RejectsBadShapes) {
  EXPECT_THROW(TensorTrain({Tensor({2, 2, 1})}), ShapeError);
  EXPECT_THROW(TensorTrain({Tensor({1, 2, 2}), Tensor({3, 2, 1})}), ShapeError);
}

TEST(Inner, MatchesDenseAndNormSquared) {
  const TensorTrain x = random_tt({2, 2, 2, 2, 2}, {3, 3, 3, 3}, 11);
  const TensorTrain y = random_tt({2, 2, 2, 2, 2}, {3, 3, 3, 3}, 12);
  const double dense = oracle::tt_dense(x).dot(oracle::tt_dense(y));
  EXPECT_NEAR(inner(x, y), dense, 1e-12 * std::abs(dense));
  EXPECT_GE(inner(x, x), 0.0);
  EXPECT_NEAR(norm(x) * norm(x), oracle::tt_dense(x).squaredNorm(), 1e-12 * inner(x, x));
}

TEST(Inner, LeftOrthogonalNormIsLastCore) {
  const TensorTrain x = orthogonalize(random_tt({2, 3, 2, 2}, {2, 3, 2}, 2), 3);
  EXPECT_NEAR(inner(x, x), x.core(3).vector().squaredNorm(), 1e-12 * inner(x, x));
}

TEST(Inner, DimensionMismatchThrows) {
  EXPECT_THROW(inner(random_tt({2, 2}, {2}, 1), random_tt({2, 3}, {2}, 1)), ShapeError);
}

TEST(Orthogonalize, CenterGramMatricesAreIdentity) {
  const TensorTrain tt = random_tt({2, 2, 2, 2, 2}, {2, 4, 4, 2}, 5);
  for (std::size_t c = 0; c < 5; ++c) {
    const TensorTrain o = orthogonalize(tt, c);
    EXPECT_TRUE(o.gauge().is_site(c));
    EXPECT_EQ(o.ranks(), tt.ranks());
    EXPECT_LT(orthogonality_defect(o, c), 1e-12);
    EXPECT_LT(oracle::rel_diff(oracle::tt_dense(o), oracle::tt_dense(tt)), 1e-12);
    // explicit Gram computation on the unfoldings
    for (std::size_t j = 0; j < 5; ++j) {
      if (j == c) continue;
      const Tensor& core = o.core(j);
      const RowMatrix g = j < c ? RowMatrix(core.matrix(2).transpose() * core.matrix(2))
                                : RowMatrix(core.matrix(1) * core.matrix(1).transpose());
      EXPECT_LT((g - RowMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Orthogonalize, IdempotentAtSameCenter) {
  const TensorTrain o = orthogonalize(random_tt({2, 2, 2, 2}, {2, 3, 2}, 9), 2);
  const TensorTrain o2 = orthogonalize(o, 2);
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(o2), oracle::tt_dense(o)), 1e-13);
}

TEST(Orthogonalize, ZeroTensorGivesZeroCores) {
  std::vector<Tensor> cores{Tensor({1, 2, 2}), Tensor({2, 2, 1})};
  const TensorTrain z = orthogonalize(TensorTrain(cores), 1);
  EXPECT_EQ(oracle::tt_dense(z).norm(), 0.0);
}

TEST(GaugeTransform, IdentityAndInvertibleMatricesPreserveTensor) {
  const TensorTrain tt = random_tt({2, 2, 2, 2}, {2, 3, 2}, 21);
  std::vector<RowMatrix> eye{RowMatrix::Identity(2, 2), RowMatrix::Identity(3, 3), RowMatrix::Identity(2, 2)};
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(gauge_transform(tt, eye)), oracle::tt_dense(tt)), 1e-14);
  std::mt19937_64 rng(22);
  std::vector<RowMatrix> mats;
  for (std::size_t r : {2u, 3u, 2u}) {
    mats.push_back(oracle::random_tensor({r, r}, rng).matrix(1) + 3.0 * RowMatrix::Identity(r, r));
  }
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(gauge_transform(tt, mats)), oracle::tt_dense(tt)), 1e-12);
}

TEST(OrthogonalFamily, AllConfigurationsAgreeAndAreSiteOrthogonal) {
  const TensorTrain tt = orthogonalize(random_tt({2, 2, 2, 2, 2, 2}, {2, 4, 4, 4, 2}, 31), 5);
  const OrthogonalFamily fam = orthogonal_family(tt);
  ASSERT_EQ(fam.order(), 6u);
  const Vector ref = oracle::tt_dense(tt);
  for (std::size_t i = 0; i < 6; ++i) {
    const TensorTrain c = fam.configuration(i);
    EXPECT_TRUE(c.gauge().is_site(i));
    EXPECT_LT(orthogonality_defect(c, i), 1e-12);
    EXPECT_LT(oracle::rel_diff(oracle::tt_dense(c), ref), 1e-12);
  }
}

TEST(OrthogonalFamily, TwoSitesAndProductState) {
  const TensorTrain tt = orthogonalize(random_tt({3, 3}, {3}, 4), 1);
  const OrthogonalFamily fam = orthogonal_family(tt);
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(fam.configuration(0)), oracle::tt_dense(fam.configuration(1))),
            1e-12);

  std::vector<Tensor> cores{Tensor({1, 2, 1}, {3.0, 4.0}), Tensor({1, 2, 1}, {1.0, 0.0}),
                            Tensor({1, 2, 1}, {0.0, 2.0})};
  const OrthogonalFamily pf = orthogonal_family(orthogonalize(TensorTrain(cores), 2));
  // centres are the slices scaled to carry the whole norm (10)
  EXPECT_NEAR(std::abs(pf.center[0][0]), 6.0, 1e-12);
  EXPECT_NEAR(std::abs(pf.center[0][1]), 8.0, 1e-12);
  EXPECT_NEAR(std::abs(pf.center[1][0]), 10.0, 1e-12);
  EXPECT_NEAR(std::abs(pf.center[2][1]), 10.0, 1e-12);
}

TEST(OrthogonalFamily, RequiresLeftOrthogonalInput) {
  EXPECT_THROW(orthogonal_family(random_tt({2, 2, 2}, {2, 2}, 1)), GaugeError);
}

TEST(Round, ExactAtFullRanks) {
  const TensorTrain tt = random_tt({2, 2, 2, 2}, {2, 3, 2}, 41);
  const TensorTrain r = round(tt, std::vector<std::size_t>{2, 3, 2}, 0.0);
  EXPECT_TRUE(r.is_left_orthogonal());
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(r), oracle::tt_dense(tt)), 1e-12);
}

TEST(Round, DoubledSumReturnsToOriginalRanks) {
  const TensorTrain tt = random_tt({2, 2, 2, 2, 2}, {2, 3, 3, 2}, 42);
  const TensorTrain twice = add(tt, tt);
  EXPECT_EQ(twice.rank(2), 6u);
  const TensorTrain r = round(twice, 100, 1e-14);
  EXPECT_EQ(r.ranks(), tt.ranks());
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(r), Vector(2.0 * oracle::tt_dense(tt))), 1e-12);
}

TEST(Round, RankOneIsExact) {
  std::vector<Tensor> cores{Tensor({1, 2, 1}, {1.0, 2.0}), Tensor({1, 2, 1}, {-1.0, 0.5})};
  const TensorTrain tt(cores);
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(round(tt, 1, 0.0)), oracle::tt_dense(tt)), 1e-14);
}

TEST(Round, QuasiOptimalAgainstDenseTruncation) {
  const std::vector<std::size_t> dims{2, 2, 2, 2, 2, 2};
  for (std::uint64_t seed = 50; seed < 55; ++seed) {
    const TensorTrain tt = random_tt(dims, {2, 4, 6, 4, 2}, seed);
    const Vector x = oracle::tt_dense(tt);
    const TensorTrain r = round(tt, 3, 0.0);
    EXPECT_LE(r.max_rank(), 3u);
    // best truncation error of any single unfolding is a lower bound on the
    // best rank-3 TT error; sqrt(d-1) times the largest is an upper bound
    double worst = 0.0;
    for (std::size_t b = 1; b < dims.size(); ++b) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(unfolding(x, dims, b)));
      const Vector s = svd.singularValues();
      worst = std::max(worst, tail_mass(s, std::min<std::size_t>(3, static_cast<std::size_t>(s.size()))));
    }
    const double err = (oracle::tt_dense(r) - x).norm();
    EXPECT_LE(err, std::sqrt(static_cast<double>(dims.size() - 1)) * worst * (1 + 1e-10));
  }
}

TEST(TtSvd, ReproducesDenseTensor) {
  const TensorTrain tt = random_tt({2, 3, 2, 2}, {2, 3, 2}, 61);
  const Tensor full = contract_full(tt);
  const TensorTrain back = tt_svd(full, 100, 1e-12);
  EXPECT_EQ(back.ranks(), tt.ranks());
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(back), full.vector()), 1e-12);
}

TEST(SeparationRanks, ProductZeroAndGeneric) {
  std::vector<Tensor> cores{Tensor({1, 2, 1}, {1.0, 2.0}), Tensor({1, 2, 1}, {3.0, 1.0}),
                            Tensor({1, 2, 1}, {1.0, 1.0})};
  EXPECT_EQ(separation_ranks(contract_full(TensorTrain(cores))), (std::vector<std::size_t>{1, 1}));
  EXPECT_EQ(separation_ranks(Tensor({2, 2, 2})), (std::vector<std::size_t>{0, 0}));
  EXPECT_EQ(separation_ranks(contract_full(random_tt({2, 2, 2}, {2, 2}, 1))), (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(separation_ranks(contract_full(random_tt({2, 2, 2, 2, 2}, {2, 3, 3, 2}, 8))),
            (std::vector<std::size_t>{2, 3, 3, 2}));
}

TEST(RandomTt, DeterministicPerSeed) {
  const TensorTrain a = random_tt({2, 3, 2}, {2, 2}, 99);
  const TensorTrain b = random_tt({2, 3, 2}, {2, 2}, 99);
  const TensorTrain c = random_tt({2, 3, 2}, {2, 2}, 100);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(a.core(j).values(), b.core(j).values());
  EXPECT_NE(a.core(0).values(), c.core(0).values());
  EXPECT_EQ(a.gauge(), Gauge::none());
}

TEST(Scale, KeepsLeftOrthogonalGauge) {
  const TensorTrain x = orthogonalize(random_tt({2, 2, 2}, {2, 2}, 3), 2);
  const TensorTrain y = scale(x, -2.5);
  EXPECT_TRUE(y.is_left_orthogonal());
  EXPECT_LT(oracle::rel_diff(oracle::tt_dense(y), Vector(-2.5 * oracle::tt_dense(x))), 1e-14);
}

TEST(MergeCores, MatchesPairProduct) {
  std::mt19937_64 rng(70);
  const Tensor a = oracle::random_tensor({2, 3, 4}, rng);
  const Tensor b = oracle::random_tensor({4, 2, 3}, rng);
  const Tensor m = merge_cores(a, b);
  ASSERT_EQ(m.shape(), (Shape{2, 3, 2, 3}));
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += a.at({1, 2, k}) * b.at({k, 1, 0});
  EXPECT_NEAR(m.at({1, 2, 1, 0}), s, 1e-13);
}
