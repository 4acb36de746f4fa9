#pragma once

// Monte Carlo for the Good-Turing estimator: G_0 = phi_1/n against the missing mass
// M_0 = sum of pi over unseen states, on sequences from the stationary chain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gtmarkov/chain.hpp"
#include "gtmarkov/distribution.hpp"
#include "gtmarkov/parallel.hpp"

namespace gtm {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for trial i; trial i can be replayed on its own.
constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t i) { return mix64(mix64(seed) ^ mix64(i + 1)); }

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Inverse-CDF sampling over the runs of a RowClass.
class RunSampler {
 public:
  explicit RunSampler(const RowClass& rc) : runs_(rc.runs()) {
    require(!runs_.empty(), "cannot sample from an empty distribution");
    long double acc = 0;
    cum_.reserve(runs_.size());
    for (const auto& r : runs_) {
      acc += static_cast<long double>(r.mass) * r.length;
      cum_.push_back(static_cast<double>(acc));
    }
    total_ = cum_.back();
  }

  State draw(std::mt19937_64& rng) const {
    const double u = uniform01(rng) * total_;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    if (k >= runs_.size()) k = runs_.size() - 1;
    const BlockRun& r = runs_[k];
    const double lo = k == 0 ? 0.0 : cum_[k - 1];
    auto off = static_cast<std::size_t>((u - lo) / r.mass);
    if (off >= r.length) off = r.length - 1;
    return static_cast<State>(r.start + off);
  }

 private:
  std::vector<BlockRun> runs_;
  std::vector<double> cum_;
  double total_ = 1.0;
};

/// X_1 ~ pi, then X_{i+1} drawn from the row class of X_i.
class ChainSampler {
 public:
  ChainSampler(const RowClassChain& chain, const Distribution& pi)
      : chain_(chain), initial_(RowClass::from_dense(pi.probs)) {
    validate(pi, 1e-9);
    require(pi.size() == chain.state_count(), "distribution length mismatch");
    rows_.reserve(chain.class_count());
    for (const auto& rc : chain.row_classes()) rows_.emplace_back(rc);
  }

  State first(std::mt19937_64& rng) const { return initial_.draw(rng); }
  State next(State x, std::mt19937_64& rng) const { return rows_[chain_.class_of(x)].draw(rng); }
  const RowClassChain& chain() const { return chain_; }

 private:
  const RowClassChain& chain_;
  RunSampler initial_;
  std::vector<RunSampler> rows_;
};

struct SampleRun {
  std::vector<State> seq;
  std::vector<std::uint32_t> occupancy;  // F_x, indexed by state
  std::uint64_t phi1 = 0;
};

inline SampleRun sample_chain(const RowClassChain& chain, const Distribution& pi, std::uint64_t n,
                              std::uint64_t seed) {
  require(n >= 1, "n must be positive");
  const ChainSampler sampler(chain, pi);
  std::mt19937_64 rng(seed);
  SampleRun run;
  run.seq.reserve(n);
  run.occupancy.assign(chain.state_count(), 0);
  State x = sampler.first(rng);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i > 0) x = sampler.next(x, rng);
    run.seq.push_back(x);
    const auto c = ++run.occupancy[x];
    if (c == 1) ++run.phi1;
    else if (c == 2) --run.phi1;
  }
  return run;
}

/// phi_l = number of states seen exactly l times.
inline std::uint64_t phi(const SampleRun& run, std::uint32_t l) {
  return static_cast<std::uint64_t>(std::count(run.occupancy.begin(), run.occupancy.end(), l));
}

inline double good_turing(const SampleRun& run, std::uint64_t n) {
  require(n >= 1, "n must be positive");
  return static_cast<double>(run.phi1) / static_cast<double>(n);
}

inline double good_turing(const SampleRun& run) { return good_turing(run, run.seq.size()); }

inline double missing_mass(const SampleRun& run, const Distribution& pi) {
  require(pi.size() == run.occupancy.size(), "distribution length mismatch");
  long double m = 0;
  for (std::size_t x = 0; x < pi.size(); ++x)
    if (run.occupancy[x] == 0) m += pi[x];
  return static_cast<double>(m);
}

struct SimResult {
  std::uint64_t n = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  double mean_error = 0.0;  // mean of G_0 - M_0
  double mse = 0.0;         // mean of (G_0 - M_0)^2, no variance correction
  double stderr_me = 0.0;
  double stderr_mse = 0.0;
};

/// Per-trial errors G_0 - M_0 in trial order; trial i uses trial_seed(seed, i).
inline std::vector<double> simulate_errors(const RowClassChain& chain, const Distribution& pi, std::uint64_t n,
                                           std::uint64_t trials, std::uint64_t seed, unsigned threads = 1) {
  require(n >= 1, "n must be positive");
  const ChainSampler sampler(chain, pi);
  const std::size_t K = chain.state_count();
  const double N = static_cast<double>(n);
  long double total_mass = 0;
  for (double p : pi.probs) total_mass += p;
  std::vector<double> err(trials);
  const unsigned workers = resolve_threads(threads);
  const std::uint64_t chunks = std::min<std::uint64_t>(trials, workers * 4ULL);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::uint64_t lo = trials * c / chunks, hi = trials * (c + 1) / chunks;
    std::vector<std::uint32_t> occ(K, 0);
    std::vector<State> touched;
    touched.reserve(std::min<std::uint64_t>(n, K));
    for (std::uint64_t t = lo; t < hi; ++t) {
      std::mt19937_64 rng(trial_seed(seed, t));
      long long phi1 = 0;
      long double seen = 0;
      State x = sampler.first(rng);
      for (std::uint64_t i = 0; i < n; ++i) {
        if (i > 0) x = sampler.next(x, rng);
        const auto cnt = ++occ[x];
        if (cnt == 1) {
          ++phi1;
          seen += pi[x];
          touched.push_back(x);
        } else if (cnt == 2) {
          --phi1;
        }
      }
      const double m0 = std::max(0.0, static_cast<double>(total_mass - seen));
      err[t] = static_cast<double>(phi1) / N - m0;
      for (State s : touched) occ[s] = 0;
      touched.clear();
    }
  });
  return err;
}

inline SimResult estimate_bias_mse(const RowClassChain& chain, const Distribution& pi, std::uint64_t n,
                                   std::uint64_t trials, std::uint64_t seed, unsigned threads = 1) {
  require(trials >= 2, "at least 2 trials are needed");
  const auto err = simulate_errors(chain, pi, n, trials, seed, threads);
  const long double T = static_cast<long double>(trials);
  long double s1 = 0, s2 = 0;
  for (double e : err) {
    s1 += e;
    s2 += static_cast<long double>(e) * e;
  }
  const long double mean = s1 / T, mse = s2 / T;
  long double v1 = 0, v2 = 0;
  for (double e : err) {
    const long double e2 = static_cast<long double>(e) * e;
    v1 += (e - mean) * (e - mean);
    v2 += (e2 - mse) * (e2 - mse);
  }
  SimResult r;
  r.n = n;
  r.trials = trials;
  r.seed = seed;
  r.mean_error = static_cast<double>(mean);
  r.mse = static_cast<double>(mse);
  r.stderr_me = std::sqrt(static_cast<double>(v1 / (T - 1) / T));
  r.stderr_mse = std::sqrt(static_cast<double>(v2 / (T - 1) / T));
  return r;
}

}  // namespace gtm
