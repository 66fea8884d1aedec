#include "wrcm/stats.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace wrcm::stats {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& w) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need >= 2 points");
  size_t n = x.size();
  std::vector<double> ww = w.empty() ? std::vector<double>(n, 1.0) : w;
  if (ww.size() != n) throw std::invalid_argument("linear_fit: weight size");

  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sw += ww[i];
    swx += ww[i] * x[i];
    swy += ww[i] * y[i];
    swxx += ww[i] * x[i] * x[i];
    swxy += ww[i] * x[i] * y[i];
  }
  double denom = sw * swxx - swx * swx;
  if (denom == 0) throw std::invalid_argument("linear_fit: degenerate x");

  LinearFit fit;
  fit.slope = (sw * swxy - swx * swy) / denom;
  fit.intercept = (swy - fit.slope * swx) / sw;

  double ybar = swy / sw;
  double ss_res = 0, ss_tot = 0;
  fit.residuals.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.residuals[i] = r;
    ss_res += ww[i] * r * r;
    ss_tot += ww[i] * (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (n > 2) {
    double s2 = ss_res / static_cast<double>(n - 2);
    fit.slope_se = std::sqrt(s2 * sw / denom);
  }
  return fit;
}

BootstrapCI bootstrap_proportions(
    const std::vector<double>& phat, const std::vector<uint64_t>& counts,
    const std::function<double(const std::vector<double>&)>& recompute,
    int resamples, rng::Seed128 seed) {
  if (phat.size() != counts.size())
    throw std::invalid_argument("bootstrap: size mismatch");
  rng::Stream st(seed, rng::Tag::bootstrap);
  std::vector<double> vals;
  vals.reserve(resamples);
  std::vector<double> p(phat.size());
  for (int r = 0; r < resamples; ++r) {
    for (size_t i = 0; i < phat.size(); ++i) {
      // parametric resample: Binomial(n_i, phat_i) / n_i
      uint64_t n = counts[i];
      if (n == 0) {
        p[i] = phat[i];
        continue;
      }
      // normal approximation is fine at the replica counts used here, but
      // stay exact for small n
      if (n <= 64) {
        uint64_t hits = 0;
        for (uint64_t t = 0; t < n; ++t)
          if (st.next_unit() < phat[i]) ++hits;
        p[i] = static_cast<double>(hits) / static_cast<double>(n);
      } else {
        double u1 = st.next_unit(), u2 = st.next_unit();
        if (u1 <= 0) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(6.283185307179586 * u2);
        double sd = binomial_se(phat[i], n);
        p[i] = std::clamp(phat[i] + z * sd, 0.0, 1.0);
      }
    }
    double v = recompute(p);
    if (std::isfinite(v)) vals.push_back(v);
  }
  BootstrapCI ci;
  if (vals.empty()) return ci;
  std::sort(vals.begin(), vals.end());
  auto pick = [&](double q) {
    double idx = q * (vals.size() - 1);
    size_t i0 = static_cast<size_t>(idx);
    size_t i1 = std::min(i0 + 1, vals.size() - 1);
    double frac = idx - static_cast<double>(i0);
    return vals[i0] * (1 - frac) + vals[i1] * frac;
  };
  ci.lo = pick(0.025);
  ci.hi = pick(0.975);
  Accumulator acc;
  for (double v : vals) acc.add(v);
  ci.sd = std::sqrt(acc.variance());
  return ci;
}

int default_threads() {
  unsigned int hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_replicas(uint64_t n, int threads,
                       const std::function<void(uint64_t, uint64_t, int)>& chunk_fn,
                       int chunks) {
  if (n == 0) return;
  if (threads <= 0) threads = default_threads();
  if (chunks <= 0) chunks = 64;
  uint64_t per = (n + chunks - 1) / static_cast<uint64_t>(chunks);
  if (per == 0) per = 1;
  int actual_chunks = static_cast<int>((n + per - 1) / per);

  if (threads == 1 || actual_chunks == 1) {
    for (int c = 0; c < actual_chunks; ++c) {
      uint64_t b = static_cast<uint64_t>(c) * per;
      chunk_fn(b, std::min(n, b + per), c);
    }
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    try {
      for (;;) {
        int c = next.fetch_add(1);
        if (c >= actual_chunks) break;
        uint64_t b = static_cast<uint64_t>(c) * per;
        chunk_fn(b, std::min(n, b + per), c);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  int nt = std::min<int>(threads, actual_chunks);
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace wrcm::stats
