#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <sstream>

#include "gtmarkov/gtmarkov.hpp"

using namespace gtm;

namespace {

Eigen::VectorXd singular_values(const RowClassChain& c) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c.dense(64));
  return svd.singularValues();
}

int numerical_rank(const RowClassChain& c) {
  const auto s = singular_values(c);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-8 * s(0)) ++r;
  return r;
}

void expect_row_stochastic(const RowClassChain& c) {
  const auto P = c.dense(4096);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    EXPECT_NEAR(P.row(i).sum(), 1.0, 1e-12) << c.label() << " row " << i;
    EXPECT_GE(P.row(i).minCoeff(), 0.0);
  }
}

std::vector<RowClassChain> families() {
  std::vector<RowClassChain> out;
  for (std::size_t K : {4, 8, 16, 64})
    for (std::size_t K1 = 2; K1 <= K; K1 += 2) {
      out.push_back(build_p1(K, K1));
      out.push_back(build_p2(K, K1));
      out.push_back(build_p3(K, K1));
    }
  out.push_back(build_periodic_kronecker(4, 2));
  out.push_back(build_periodic_kronecker(12, 2));
  out.push_back(build_iid(Distribution::uniform(5)));
  out.push_back(build_iid(Distribution({0.5, 0.3, 0.2})));
  return out;
}

}  // namespace

TEST(Iid, UniformMatrix) {
  const auto c = build_iid(Distribution::uniform(4));
  const auto P = c.dense();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(P(i, j), 0.25);
  EXPECT_EQ(c.class_count(), 1u);
}

TEST(Iid, ZeroSupport) {
  Distribution point({1.0, 0.0, 0.0});
  EXPECT_THROW(build_iid(point, {.allow_zero_support = false}), InvalidArgument);
  const auto c = build_iid(point);
  ASSERT_EQ(c.warnings().size(), 1u);
  EXPECT_NE(c.warnings()[0].find("degenerate"), std::string::npos);
}

TEST(Iid, RejectsBadDistribution) {
  EXPECT_THROW(build_iid(Distribution({0.5, 0.6})), InvalidArgument);
  EXPECT_THROW(build_iid(Distribution({1.5, -0.5})), InvalidArgument);
}

TEST(Sticky, TwoStates) {
  const auto P = build_sticky(2, 0.1).dense();
  EXPECT_DOUBLE_EQ(P(0, 0), 0.9);
  EXPECT_DOUBLE_EQ(P(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(P(1, 0), 0.1);
  EXPECT_DOUBLE_EQ(P(1, 1), 0.9);
}

TEST(Sticky, FullRankIsNotRank2) {
  const auto c = build_sticky(3, 0.3);
  EXPECT_GT(singular_values(c)(2), 1e-8);
  EXPECT_THROW(rank2_decompose(c), NotRank2);
}

TEST(Sticky, HalfIsIid) {
  const auto c = build_sticky(2, 0.5);
  const auto d = rank2_decompose(c);
  EXPECT_TRUE(d.iid());
  EXPECT_EQ(d.lambda2, 0.0);
}

TEST(Sticky, RejectsEta) {
  EXPECT_THROW(build_sticky(3, 0.0), InvalidArgument);
  EXPECT_THROW(build_sticky(3, 1.0), InvalidArgument);
  EXPECT_THROW(build_sticky(1, 0.5), InvalidArgument);
}

TEST(Sticky, UniformStationary) {
  const auto pi = stationary_distribution(build_sticky(5, 0.37));
  for (double p : pi.probs) EXPECT_NEAR(p, 0.2, 1e-12);
}

TEST(P1, Blocks) {
  const auto c = build_p1(8, 4);
  const auto P = c.dense();
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const bool a_support = j < 6, b_support = j >= 2;
      const bool support = i < 4 ? a_support : b_support;
      EXPECT_DOUBLE_EQ(P(i, j), support ? 1.0 / 6.0 : 0.0) << i << "," << j;
    }
  EXPECT_EQ(numerical_rank(c), 2);
}

TEST(P1, Parity) {
  EXPECT_THROW(build_p1(8, 3), InvalidArgument);
  EXPECT_THROW(build_p1(7, 2), InvalidArgument);
  EXPECT_THROW(build_p1(8, 10), InvalidArgument);
}

TEST(P2, BlockOrder) {
  const auto c = build_p2(8, 4);
  // rows 0,1 first half; 2,3 second; 4,5 first; 6,7 second
  const std::vector<int> first{1, 1, 0, 0, 1, 1, 0, 0};
  const auto P = c.dense();
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(P(i, j), (j < 4) == (first[i] == 1) ? 0.25 : 0.0);
  EXPECT_EQ(numerical_rank(c), 2);
}

TEST(P3, MiddleStatesFullSupport) {
  const auto c = build_p3(8, 2);
  const auto P = c.dense();
  for (int i = 3; i <= 4; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(P(i, j), 0.125);
  for (int j = 0; j < 8; ++j) {
    EXPECT_DOUBLE_EQ(P(0, j), j < 4 ? 0.25 : 0.0);
    EXPECT_DOUBLE_EQ(P(7, j), j >= 4 ? 0.25 : 0.0);
  }
  EXPECT_EQ(numerical_rank(c), 2);
}

TEST(Periodic, Kronecker) {
  const auto P = build_periodic_kronecker(4, 2).dense();
  Eigen::Matrix4d want;
  want << 0, 0, .5, .5, 0, 0, .5, .5, .5, .5, 0, 0, .5, .5, 0, 0;
  EXPECT_EQ((P - want).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(build_periodic_kronecker(6, 4), InvalidArgument);
  EXPECT_THROW(build_periodic_kronecker(6, 1), InvalidArgument);
}

TEST(Periodic, RankR) {
  EXPECT_EQ(numerical_rank(build_periodic_kronecker(12, 3)), 3);
  EXPECT_EQ(numerical_rank(build_periodic_kronecker(12, 2)), 2);
}

TEST(Reducible, TwoBlock) {
  const auto P = build_reducible_two_block(4).dense();
  Eigen::Matrix4d want;
  want << .5, .5, 0, 0, .5, .5, 0, 0, 0, 0, .5, .5, 0, 0, .5, .5;
  EXPECT_EQ((P - want).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(build_reducible_two_block(5), InvalidArgument);
}

TEST(Reducible, NeedsFlagForStationary) {
  const auto c = build_reducible_two_block(6);
  EXPECT_FALSE(has_unique_stationary(c));
  EXPECT_THROW(stationary_distribution(c), ReducibleChain);
  const auto pi = stationary_distribution(c, {.allow_reducible = true});
  EXPECT_LE(detail::stationarity_residual(c, pi), 1e-10);
}

TEST(Families, RowStochastic) {
  for (const auto& c : families()) expect_row_stochastic(c);
  expect_row_stochastic(build_p1(4096, 512));
  expect_row_stochastic(build_p3(4096, 64));
}

TEST(Stationary, MatchesDenseSolve) {
  for (const auto& c : families()) {
    const auto a = stationary_distribution(c);
    const auto b = stationary_distribution_dense(c);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10) << c.label();
    EXPECT_LE(detail::stationarity_residual(c, a), 1e-10);
  }
}

TEST(Stationary, IidReturnsItsRow) {
  Distribution pi0({0.1, 0.2, 0.3, 0.4});
  const auto pi = stationary_distribution(build_iid(pi0));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(pi[i], pi0[i], 1e-14);
}

TEST(Stationary, PeriodicUniform) {
  const auto pi = stationary_distribution(build_periodic_kronecker(12, 3));
  for (double p : pi.probs) EXPECT_NEAR(p, 1.0 / 12.0, 1e-14);
}

TEST(ChainConstruction, Invariants) {
  // class 1 never referenced
  EXPECT_THROW(RowClassChain(2, {RowClass::uniform_block(0, 2), RowClass::uniform_block(0, 2)}, {0, 0}),
               InvalidArgument);
  // class does not sum to one
  EXPECT_THROW(RowClassChain(2, {RowClass({{0, 2, 0.4}})}, {0, 0}), InvalidArgument);
  // unknown class
  EXPECT_THROW(RowClassChain(2, {RowClass::uniform_block(0, 2)}, {0, 1}), InvalidArgument);
  // assignment length
  EXPECT_THROW(RowClassChain(3, {RowClass::uniform_block(0, 3)}, {0, 0}), InvalidArgument);
}

TEST(ChainConstruction, FromDenseGroupsRows) {
  const auto c = from_dense(build_p2(8, 4).dense());
  EXPECT_EQ(c.class_count(), 2u);
  EXPECT_EQ(c.dense(), build_p2(8, 4).dense());
}

TEST(TvDistance, MatchesDense) {
  const auto a = RowClass({{0, 3, 0.2}, {3, 2, 0.2}});
  const auto b = RowClass({{1, 4, 0.25}});
  const auto da = a.dense(6), db = b.dense(6);
  double s = 0;
  for (int j = 0; j < 6; ++j) s += std::abs(da[j] - db[j]);
  EXPECT_NEAR(tv_distance(a, b), 0.5 * s, 1e-15);
}

TEST(ChainIo, JsonRoundTrip) {
  for (const auto& c : families()) {
    const auto back = chain_from_json(chain_to_json(c));
    EXPECT_EQ(back.dense(), c.dense());
    EXPECT_EQ(back.label(), c.label());
  }
}

TEST(ChainIo, JsonErrors) {
  EXPECT_THROW(chain_from_json(nlohmann::json::parse(R"({"K": 2})")), InvalidArgument);
  EXPECT_THROW(chain_from_json(nlohmann::json::parse(R"({"K": 2, "row_classes": [[[0, 2, 0.5]]],
               "assignment": [[0, 3]]})")),
               InvalidArgument);
}

TEST(ChainIo, Csv) {
  std::istringstream in("0.5,0.5\n0.25, 0.75\n");
  const auto c = chain_from_csv(in);
  EXPECT_DOUBLE_EQ(c.entry(1, 1), 0.75);
  std::istringstream bad("0.5,0.5\n0.25,x\n");
  try {
    chain_from_csv(bad);
    FAIL() << "expected parse error";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(FamilyK1, RoundsToEven) {
  EXPECT_EQ(family_k1(1024, 0.5), 32u);
  EXPECT_EQ(family_k1(1000, 1.0), 1000u);
  EXPECT_EQ(family_k1(64, 0.25), 2u);  // 64^0.25 = 2.83
  EXPECT_EQ(family_k1(8, 0.1), 2u);
  for (std::size_t n : {64, 100, 256, 1000})
    for (double k : {0.25, 0.5, 0.75, 0.875, 1.0}) {
      const auto k1 = family_k1(n, k);
      EXPECT_EQ(k1 % 2, 0u);
      EXPECT_LE(k1, n);
      EXPECT_NO_THROW(build_p1(n, k1));
    }
}
