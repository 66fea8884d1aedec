#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "wrcm/rng.hpp"

namespace wrcm {

// Monte Carlo estimate with seed provenance.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;  // sample sd / sqrt(n)
  uint64_t samples = 0;
  rng::Seed128 seed{};

  double lo3() const { return mean - 3.0 * se; }
  double hi3() const { return mean + 3.0 * se; }
};

namespace stats {

// Running mean/variance accumulator; merges deterministically.
struct Accumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  uint64_t n = 0;

  void add(double x) {
    sum += x;
    sumsq += x * x;
    ++n;
  }
  void merge(const Accumulator& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sumsq - static_cast<double>(n) * m * m) /
               static_cast<double>(n - 1);
    return v > 0 ? v : 0.0;
  }
  double se() const {
    return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
  Estimate estimate(rng::Seed128 seed = {}) const {
    return Estimate{mean(), se(), n, seed};
  }
};

inline double binomial_se(double phat, uint64_t n) {
  if (n == 0) return 0.0;
  double v = phat * (1.0 - phat) / static_cast<double>(n);
  return v > 0 ? std::sqrt(v) : 0.0;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  std::vector<double> residuals;
};

// Weighted least squares of y against x. Weights default to 1.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& w = {});

// Percentile bootstrap interval for a statistic of binomial proportions.
// `recompute` maps resampled proportions (same layout as `phat`) to the
// statistic; counts[i] trials per cell.
struct BootstrapCI {
  double lo = 0.0, hi = 0.0, sd = 0.0;
};
BootstrapCI bootstrap_proportions(
    const std::vector<double>& phat, const std::vector<uint64_t>& counts,
    const std::function<double(const std::vector<double>&)>& recompute,
    int resamples, rng::Seed128 seed);

// Runs fn(replica) for replica in [0, n) over a fixed number of chunks,
// merging per-chunk accumulators in chunk order: results do not depend on
// the thread count.
void parallel_replicas(uint64_t n, int threads,
                       const std::function<void(uint64_t begin, uint64_t end,
                                                int chunk_index)>& chunk_fn,
                       int chunks = 64);

int default_threads();

}  // namespace stats
}  // namespace wrcm
