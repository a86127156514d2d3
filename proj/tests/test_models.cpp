#include <gtest/gtest.h>

#include <cmath>

#include "a2dmrg/a2dmrg.hpp"
#include "a2dmrg/errors.hpp"
#include "a2dmrg/models.hpp"
#include "oracles.hpp"

using namespace a2dmrg;

TEST(Tfim, MatchesKroneckerConstruction) {
  for (std::size_t d = 2; d <= 8; ++d) {
    for (auto [J, h] : {std::pair{1.0, 1.0}, std::pair{0.7, 1.3}, std::pair{-1.0, 0.4}}) {
      const MpOperator op = build_tfim(d, J, h);
      EXPECT_TRUE(op.symmetric());
      EXPECT_EQ(op.rank(1), 3u);
      const RowMatrix ref = oracle::tfim_dense(d, J, h);
      EXPECT_LT((oracle::mpo_dense(op) - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Tfim, TwoSiteGroundEnergy) {
  EXPECT_NEAR(oracle::lowest_eigenvalue(mpo_to_dense(build_tfim(2, 1.0, 1.0))), -std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(dense_ground_state(build_tfim(2, 1.0, 1.0)).energy, -std::sqrt(5.0), 1e-12);
}

TEST(Tfim, ZeroFieldIsClassicalIsing) {
  const RowMatrix m = mpo_to_dense(build_tfim(5, 1.5, 0.0));
  EXPECT_LT((m - RowMatrix(m.diagonal().asDiagonal())).norm(), 1e-14);
  EXPECT_NEAR(dense_ground_state(build_tfim(5, 1.5, 0.0)).energy, -1.5 * 4, 1e-12);
}

TEST(Tfim, ZeroCouplingIsProductOperator) {
  EXPECT_NEAR(dense_ground_state(build_tfim(6, 0.0, 0.8)).energy, -0.8 * 6, 1e-12);
}

TEST(Heisenberg, MatchesKroneckerConstruction) {
  for (std::size_t d = 2; d <= 8; ++d) {
    const MpOperator op = build_heisenberg(d, 1.0);
    EXPECT_TRUE(op.symmetric());
    EXPECT_EQ(op.rank(1), 5u);
    const RowMatrix m = oracle::mpo_dense(op);
    EXPECT_LT((m - oracle::heisenberg_dense(d, 1.0)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Heisenberg, SingletAndThreeSiteChain) {
  EXPECT_NEAR(dense_ground_state(build_heisenberg(2, 1.0)).energy, -0.75, 1e-12);
  EXPECT_NEAR(dense_ground_state(build_heisenberg(3, 1.0)).energy,
              oracle::lowest_eigenvalue(oracle::heisenberg_dense(3, 1.0)), 1e-12);
  EXPECT_NEAR(dense_ground_state(build_heisenberg(3, 1.0)).energy, -1.0, 1e-12);
}

TEST(RandomSymmetric, SymmetricDeterministicAndSeedDependent) {
  const MpOperator a = build_random_symmetric(4, 2, 2, 17);
  const MpOperator b = build_random_symmetric(4, 2, 2, 17);
  const MpOperator c = build_random_symmetric(4, 2, 2, 18);
  EXPECT_TRUE(a.symmetric());
  EXPECT_EQ(a.rank(2), 4u);
  const RowMatrix da = oracle::mpo_dense(a);
  EXPECT_LT((da - da.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ((da - oracle::mpo_dense(b)).norm(), 0.0);
  EXPECT_GT((da - oracle::mpo_dense(c)).norm(), 1e-3);
}

TEST(RandomSymmetric, A2dmrgAgreesWithOracle) {
  const MpOperator op = build_random_symmetric(4, 2, 2, 3);
  const double ref = oracle::lowest_eigenvalue(oracle::mpo_dense(op));
  A2dmrgConfig cfg;
  cfg.mode = SiteMode::one_site;
  cfg.max_rank = 4;
  cfg.eig_tol = 1e-12;
  cfg.energy_rel_tol = 1e-14;
  cfg.max_iterations = 60;
  const A2dmrgResult r = run_a2dmrg(orthogonalize(random_tt({2, 2, 2, 2}, {2, 4, 2}, 5), 3), op, cfg);
  EXPECT_NEAR(r.energy, ref, 1e-7 * std::max(1.0, std::abs(ref)));
  EXPECT_GE(r.energy, ref - 1e-10);
}

TEST(DenseGroundState, IdentityAndSeparationRanks) {
  EXPECT_NEAR(dense_ground_state(identity_mpo({2, 2, 2})).energy, 1.0, 1e-12);
  const GroundState gs = dense_ground_state(build_heisenberg(6, 1.0));
  EXPECT_NEAR(gs.state.norm(), 1.0, 1e-12);
  EXPECT_EQ(gs.state.shape(), (Shape{2, 2, 2, 2, 2, 2}));
  const std::vector<std::size_t> ranks = separation_ranks(gs.state);
  ASSERT_EQ(ranks.size(), 5u);
  for (std::size_t b = 0; b < 5; ++b) {
    const std::size_t feasible = std::size_t{1} << std::min(b + 1, 5 - b);
    EXPECT_LE(ranks[b], feasible);
    EXPECT_GE(ranks[b], 1u);
  }
}

TEST(DenseGroundState, LanczosPathAboveDenseThreshold) {
  const GroundState gs = dense_ground_state(build_tfim(11, 1.0, 1.0));
  const MpOperator op = build_tfim(11, 1.0, 1.0);
  const Vector v = gs.state.vector();
  EXPECT_NEAR(v.dot(apply_mpo_dense(op, v)), gs.energy, 1e-10);
  EXPECT_LT((apply_mpo_dense(op, v) - gs.energy * v).norm(), 1e-9);
}

TEST(DenseGroundState, CapExceeded) {
  EXPECT_THROW(dense_ground_state(build_tfim(6, 1.0, 1.0), 32), CapExceeded);
}

TEST(ModelSpec, BuildDispatchesOnKind) {
  ModelSpec s;
  s.kind = ModelKind::heisenberg;
  s.d = 4;
  EXPECT_EQ(build_model(s).rank(1), 5u);
  s.kind = ModelKind::random_symmetric;
  s.n = 3;
  s.R = 2;
  EXPECT_EQ(build_model(s).dim(0), 3u);
  EXPECT_EQ(parse_model_kind("random-symmetric"), ModelKind::random_symmetric);
  EXPECT_EQ(model_kind_name(ModelKind::tfim), "tfim");
  EXPECT_THROW(parse_model_kind("hubbard"), ParseError);
}
