#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <complex>

#include "gtmarkov/gtmarkov.hpp"

using namespace gtm;

namespace {

struct Named {
  std::string name;
  RowClassChain chain;
};

std::vector<Named> rank2_chains() {
  std::vector<Named> out;
  for (std::size_t K : {4, 8, 16, 32})
    for (std::size_t K1 = 2; K1 <= K; K1 += 2) {
      const auto tag = "(" + std::to_string(K) + "," + std::to_string(K1) + ")";
      out.push_back({"p1" + tag, build_p1(K, K1)});
      out.push_back({"p2" + tag, build_p2(K, K1)});
      out.push_back({"p3" + tag, build_p3(K, K1)});
    }
  out.push_back({"periodic(4,2)", build_periodic_kronecker(4, 2)});
  out.push_back({"periodic(16,2)", build_periodic_kronecker(16, 2)});
  out.push_back({"sticky(2,0.1)", build_sticky(2, 0.1)});
  out.push_back({"iid", build_iid(Distribution({0.1, 0.2, 0.3, 0.4}))});
  out.push_back({"nondiag", from_dense_rows({{1.0 / 3 + 0.1, 1.0 / 3 - 0.1, 1.0 / 3},
                                             {1.0 / 3 + 0.1, 1.0 / 3 - 0.1, 1.0 / 3},
                                             {1.0 / 3 - 0.2, 1.0 / 3 + 0.2, 1.0 / 3}})});
  return out;
}

// Nonunit eigenvalue of largest modulus from a dense eigensolve.
double dense_lambda2(const RowClassChain& c) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(c.dense(64));
  std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a - 1.0) < std::abs(b - 1.0); });
  ev.erase(ev.begin());
  const auto it = std::max_element(ev.begin(), ev.end(), [](auto a, auto b) { return std::abs(a) < std::abs(b); });
  EXPECT_LT(std::abs(it->imag()), 1e-9);
  return it->real();
}

}  // namespace

TEST(Rank2, Invariants) {
  for (const auto& [name, c] : rank2_chains()) {
    SCOPED_TRACE(name);
    const auto d = rank2_decompose(c);
    const std::size_t K = c.state_count();
    long double pv = 0, u1 = 0, uv = 0, pi1 = 0;
    for (std::size_t x = 0; x < K; ++x) {
      pv += d.pi[x] * d.v[x];
      u1 += d.u[x];
      uv += d.u[x] * d.v[x];
      pi1 += d.pi[x];
    }
    EXPECT_NEAR(static_cast<double>(pi1), 1.0, 1e-12);
    EXPECT_NEAR(static_cast<double>(pv), 0.0, 1e-9);
    EXPECT_NEAR(static_cast<double>(u1), 0.0, 1e-9);
    if (d.kind == Rank2Kind::Diagonalizable) EXPECT_NEAR(static_cast<double>(uv), 1.0, 1e-9);
    if (d.kind == Rank2Kind::NonDiagonalizable) EXPECT_NEAR(static_cast<double>(uv), 0.0, 1e-9);

    const auto P = c.dense(64);
    const double beta = spectral_gap(d);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t j = 0; j < K; ++j) {
        EXPECT_NEAR(d.reconstruct(i, j), P(i, j), 1e-9);
        if (d.diagonalizable()) {
          const double e13 = d.pi[j] + (1.0 - beta) * d.v[i] * d.u[j];
          EXPECT_GE(e13, -1e-9);
          EXPECT_LE(e13, 1.0 + 1e-9);
        }
      }

    for (std::size_t x = 0; x < K; ++x)
      if (std::abs(d.v[x]) > 1e-9) {
        EXPECT_GT(d.v[x], 0.0) << "sign convention";
        break;
      }
  }
}

TEST(Rank2, Lambda2MatchesDenseEigen) {
  for (const auto& [name, c] : rank2_chains()) {
    const auto d = rank2_decompose(c);
    EXPECT_NEAR(d.lambda2, c.trace() - 1.0, 1e-12) << name;
    if (d.kind != Rank2Kind::Diagonalizable) continue;  // a Jordan block at 0 is ill-conditioned for eigensolvers
    EXPECT_NEAR(d.lambda2, dense_lambda2(c), 1e-9) << name;
  }
}

TEST(Rank2, Kinds) {
  EXPECT_EQ(rank2_decompose(build_iid(Distribution::uniform(4))).kind, Rank2Kind::Iid);
  // P2 with K1 = K/2 has trace 1
  EXPECT_EQ(rank2_decompose(build_p2(8, 4)).kind, Rank2Kind::NonDiagonalizable);
  EXPECT_EQ(rank2_decompose(build_p2(8, 2)).kind, Rank2Kind::Diagonalizable);
  const auto d = rank2_decompose(build_periodic_kronecker(4, 2));
  EXPECT_EQ(d.kind, Rank2Kind::Diagonalizable);
  EXPECT_DOUBLE_EQ(d.lambda2, -1.0);
}

TEST(Rank2, IidHasZeroFactors) {
  const auto d = rank2_decompose(build_iid(Distribution::uniform(5)));
  EXPECT_EQ(d.lambda2, 0.0);
  for (std::size_t x = 0; x < 5; ++x) {
    EXPECT_EQ(d.u[x], 0.0);
    EXPECT_EQ(d.v[x], 0.0);
  }
}

TEST(Rank2, P1Lambda2) {
  // trace = 8/6
  const auto d = rank2_decompose(build_p1(8, 4));
  EXPECT_NEAR(d.lambda2, 1.0 / 3.0, 1e-15);
}

TEST(Rank2, RejectsHigherRank) {
  EXPECT_THROW(rank2_decompose(build_sticky(3, 0.3)), NotRank2);
  EXPECT_THROW(rank2_decompose(build_periodic_kronecker(9, 3)), NotRank2);
}

TEST(Rank2, ReducibleNeedsExplicitPi) {
  const auto c = build_reducible_two_block(4);
  EXPECT_THROW(rank2_decompose(c), ReducibleChain);
  const auto d = rank2_decompose(c, {.allow_reducible = true});
  EXPECT_FALSE(d.unique_stationary);
  EXPECT_DOUBLE_EQ(d.lambda2, 1.0);
}

TEST(Rank2, GroupsCoverStates) {
  for (const auto& [name, c] : rank2_chains()) {
    const auto d = rank2_decompose(c);
    std::size_t total = 0;
    for (const auto& g : d.groups) {
      total += g.count;
      EXPECT_EQ(d.pi[g.representative], g.pi);
    }
    EXPECT_EQ(total, c.state_count()) << name;
    for (std::size_t x = 0; x < c.state_count(); ++x) {
      const auto& g = d.groups[d.group_of[x]];
      EXPECT_EQ(d.pi[x], g.pi);
      EXPECT_EQ(d.v[x], g.v);
      EXPECT_EQ(d.u[x], g.u);
    }
  }
}

TEST(Rank2, LargeFamilyIsCheap) {
  const auto d = rank2_decompose(build_p1(8192, 2048));
  // row class x column kind: (A, A only), (A, shared), (B, shared), (B, B only)
  EXPECT_EQ(d.groups.size(), 4u);
}
