#include <gtest/gtest.h>

#include <set>

#include "gtmarkov/gtmarkov.hpp"

using namespace gtm;

namespace {

SampleRun run_of(std::vector<State> seq, std::size_t K) {
  SampleRun r;
  r.occupancy.assign(K, 0);
  for (State x : seq) {
    const auto c = ++r.occupancy[x];
    if (c == 1) ++r.phi1;
    else if (c == 2) --r.phi1;
  }
  r.seq = std::move(seq);
  return r;
}

}  // namespace

TEST(Seeds, TrialSeedsDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(trial_seed(42, i));
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_NE(trial_seed(1, 0), trial_seed(2, 0));
  EXPECT_EQ(trial_seed(7, 3), trial_seed(7, 3));
}

TEST(Seeds, UniformRange) {
  std::mt19937_64 rng(5);
  double lo = 1, hi = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform01(rng);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
}

TEST(GoodTuring, SmallExamples) {
  EXPECT_DOUBLE_EQ(good_turing(run_of({0, 1, 2}, 4)), 1.0);
  EXPECT_DOUBLE_EQ(good_turing(run_of({0, 0, 0}, 4)), 0.0);
  EXPECT_DOUBLE_EQ(good_turing(run_of({0, 0, 1}, 4)), 1.0 / 3.0);
}

TEST(MissingMass, SmallExamples) {
  const auto pi = Distribution::uniform(4);
  EXPECT_DOUBLE_EQ(missing_mass(run_of({0, 0, 0}, 4), pi), 0.75);
  EXPECT_DOUBLE_EQ(missing_mass(run_of({3, 1, 0, 2}, 4), pi), 0.0);
}

TEST(MissingMass, ReducibleChainMissesHalf) {
  const auto c = build_reducible_two_block(8);
  const auto pi = Distribution::uniform(8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto run = sample_chain(c, pi, 2000, seed);
    EXPECT_DOUBLE_EQ(missing_mass(run, pi), 0.5);
  }
}

TEST(SampleChain, LawOfLargeNumbers) {
  const auto c = build_iid(Distribution::uniform(2));
  const std::uint64_t n = 100000;
  const auto run = sample_chain(c, Distribution::uniform(2), n, 99);
  const double freq = static_cast<double>(run.occupancy[0]) / static_cast<double>(n);
  EXPECT_NEAR(freq, 0.5, 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST(SampleChain, PeriodicAlternatesBlocks) {
  const auto c = build_periodic_kronecker(8, 2);
  const auto run = sample_chain(c, Distribution::uniform(8), 1000, 3);
  for (std::size_t i = 1; i < run.seq.size(); ++i) EXPECT_NE(run.seq[i] / 4, run.seq[i - 1] / 4);
}

TEST(SampleChain, FollowsSupport) {
  const auto c = build_p2(16, 4);
  const auto run = sample_chain(c, stationary_distribution(c), 5000, 11);
  for (std::size_t i = 1; i < run.seq.size(); ++i) EXPECT_GT(c.entry(run.seq[i - 1], run.seq[i]), 0.0);
}

TEST(SampleChain, PhiConsistency) {
  const auto c = build_p3(64, 16);
  const auto pi = stationary_distribution(c);
  for (std::uint64_t n : {1, 10, 100, 1000}) {
    const auto run = sample_chain(c, pi, n, n);
    std::uint64_t total = 0;
    for (std::uint32_t l = 1; l <= n; ++l) total += l * phi(run, l);
    EXPECT_EQ(total, n);
    EXPECT_EQ(phi(run, 1), run.phi1);
    const double g = good_turing(run), m = missing_mass(run, pi);
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 1.0);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(SampleChain, SameSeedSameSequence) {
  const auto c = build_p1(32, 8);
  const auto pi = stationary_distribution(c);
  EXPECT_EQ(sample_chain(c, pi, 500, 77).seq, sample_chain(c, pi, 500, 77).seq);
  EXPECT_NE(sample_chain(c, pi, 500, 77).seq, sample_chain(c, pi, 500, 78).seq);
}

TEST(Simulate, MatchesSingleTrialReplay) {
  const auto c = build_p1(64, 16);
  const auto pi = stationary_distribution(c);
  const auto errs = simulate_errors(c, pi, 64, 50, 5, 1);
  for (std::uint64_t t : {0, 17, 49}) {
    const auto run = sample_chain(c, pi, 64, trial_seed(5, t));
    EXPECT_DOUBLE_EQ(errs[t], good_turing(run) - missing_mass(run, pi));
  }
}

TEST(Simulate, DeterministicAcrossThreads) {
  const auto c = build_p3(128, 32);
  const auto pi = stationary_distribution(c);
  const auto a = estimate_bias_mse(c, pi, 128, 2000, 123, 1);
  for (unsigned th : {2u, 3u, 8u}) {
    const auto b = estimate_bias_mse(c, pi, 128, 2000, 123, th);
    EXPECT_EQ(a.mean_error, b.mean_error);
    EXPECT_EQ(a.mse, b.mse);
    EXPECT_EQ(a.stderr_me, b.stderr_me);
  }
  EXPECT_EQ(simulate_errors(c, pi, 128, 300, 9, 1), simulate_errors(c, pi, 128, 300, 9, 8));
}

TEST(Simulate, NeedsTwoTrials) {
  const auto c = build_iid(Distribution::uniform(4));
  EXPECT_THROW(estimate_bias_mse(c, Distribution::uniform(4), 10, 1, 0), InvalidArgument);
}

TEST(Simulate, CalibratedAgainstExact) {
  struct Case {
    RowClassChain chain;
    std::uint64_t n;
  };
  const std::vector<Case> cases{{build_iid(Distribution::uniform(64)), 64},
                                {build_p1(256, 256), 256},
                                {build_periodic_kronecker(64, 2), 64}};
  for (const auto& [c, n] : cases) {
    const auto d = rank2_decompose(c);
    const auto s = estimate_bias_mse(c, d.pi, n, 10000, kDefaultSeed);
    const double exact = exact_bias(d, n).exact_bias;
    EXPECT_LE(std::abs(s.mean_error - exact), 3.0 * s.stderr_me) << c.label();
    EXPECT_GE(s.mse, s.mean_error * s.mean_error);
  }
  EXPECT_NEAR(exact_bias(rank2_decompose(build_periodic_kronecker(64, 2)), 64).exact_bias,
              exact_bias_periodic(64, 2), 1e-12);
}
