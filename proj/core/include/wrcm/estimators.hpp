#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "wrcm/continuum.hpp"
#include "wrcm/lattice.hpp"
#include "wrcm/model.hpp"
#include "wrcm/stats.hpp"

namespace wrcm {

struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TailCurve {
  double lambda = 0.0;
  double L = 0.0;
  bool lattice = false;
  int n = -1;  // mesh exponent when lattice
  std::vector<uint64_t> ks;
  std::vector<Estimate> theta;
};

// theta_hat(k) for k = 1..k_max, all ks from the same replicas. Optional raw
// per-replica cluster sizes (capped at k_max) land in `raw_sizes`.
TailCurve estimate_tail(const ModelSpec& base, double lambda, double L,
                        uint64_t k_max, uint64_t samples, rng::Seed128 seed,
                        int threads = 0,
                        std::vector<uint32_t>* raw_sizes = nullptr);

// Intensity-coupled tail curves on a shared replica stream (thinning from
// the largest lambda). Cluster sizes are non-decreasing in lambda on every
// replica; a violation throws logic_error.
std::vector<TailCurve> estimate_tail_coupled(const ModelSpec& base,
                                             const std::vector<double>& lambdas,
                                             double L, uint64_t k_max,
                                             uint64_t samples, rng::Seed128 seed,
                                             int threads = 0);

struct ChiEstimate {
  Estimate chi;
  double cap_fraction = 0.0;
  bool divergence_warning = false;  // cap fraction above 10%
};

ChiEstimate estimate_chi(const ModelSpec& base, double lambda, double L,
                         uint64_t samples, rng::Seed128 seed,
                         uint64_t size_cap = 1'000'000, int threads = 0,
                         std::vector<uint32_t>* raw_sizes = nullptr);

struct PercolationPoint {
  double L = 0.0;
  Estimate reach;  // P(origin cluster touches the box boundary)
};

std::vector<PercolationPoint> estimate_percolation(
    const ModelSpec& base, double lambda, const std::vector<double>& L_list,
    uint64_t samples, rng::Seed128 seed, int threads = 0);

struct CriticalEstimate {
  double lambda_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double sd = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> L_list;
  // reach[i_L][i_lambda]
  std::vector<std::vector<Estimate>> reach;
  // raw touch indicators [i_L][i_lambda][replica] when requested
  std::vector<std::vector<std::vector<uint8_t>>> raw;
};

// Crossing point of the boundary-reach curves of the two largest volumes;
// bootstrap confidence interval. Throws BracketError when the curves do not
// cross inside the grid.
CriticalEstimate locate_critical(const ModelSpec& base,
                                 const std::vector<double>& lambda_grid,
                                 const std::vector<double>& L_list,
                                 uint64_t samples, rng::Seed128 seed,
                                 int threads = 0, int bootstrap = 1000,
                                 bool record_raw = false);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};

// Weighted least squares of log theta_hat(k) on k over [k_min, k_max].
// Throws when the window has zero estimates or relative errors above 25%.
RateFit fit_exponential_rate(const TailCurve& curve, uint64_t k_min,
                             uint64_t k_max);

struct RatioRow {
  double m = 1.0;
  double reach_pow_d = 1.0;
  Estimate delta_ratio;    // delta(u, m) / delta(u, 1) via magnetization
  Estimate pivotal_ratio;  // sum_u P^k(u,m) / sum_u P^k(u,1)
};

struct RatioDiagnostics {
  std::vector<RatioRow> rows;
  double delta_slope = 0.0;    // log delta-ratio against R(m)^d
  double pivotal_slope = 0.0;  // log pivotal-ratio against R(m)^d
  // raw per-replica observables [i_m][replica] when requested
  std::vector<std::vector<double>> raw_magnetization;
  std::vector<std::vector<uint32_t>> raw_pivotal_counts;
};

// min-reach weight-comparability diagnostics on a lattice approximation
RatioDiagnostics ratio_diagnostics(const ModelSpec& base, double lambda,
                                   double gamma_tilde,
                                   const std::vector<double>& m_list,
                                   uint64_t k, int L, int n, uint64_t samples,
                                   rng::Seed128 seed, int threads = 0,
                                   bool record_raw = false);

struct ConvergenceRow {
  int n = 0;
  Estimate theta_lattice;      // theta^{L,n}(k), coupled replicas
  Estimate theta_continuum;    // theta^L(k), same replicas
  Estimate diff;               // per-replica indicator difference
  Estimate edge_influence;     // I^{n, L, gamma~}
  double russo_gap = 0.0;      // |MC covariance-sum - coupled FD|
  double russo_fd = 0.0;
  double russo_mc = 0.0;
  uint64_t eligible_replicas = 0;  // all points in distinct cells
  uint64_t equal_replicas = 0;     // lattice == continuum cluster size
  double H = 1.0;                  // weight truncation level of the lattice
  // raw coupled indicators per replica when requested (bit0 lattice,
  // bit1 continuum)
  std::vector<uint8_t> raw;
};

// edge_influence_n_cap bounds the mesh exponents for which the (forest
// driven) edge-influence sum is measured; finer rows report zero there
std::vector<ConvergenceRow> convergence_study(
    const ModelSpec& base, double lambda, int L,
    const std::vector<int>& n_list, uint64_t k, double gamma_tilde,
    uint64_t samples, rng::Seed128 seed, int threads = 0,
    int edge_influence_n_cap = 1 << 20, bool record_raw = false);

struct DominationReport {
  uint64_t replicas = 0;
  uint64_t edge_violations = 0;
  uint64_t cluster_violations = 0;
  double lambda_restricted = 0.0;  // lambda pi(B)
  double point_count_z = 0.0;
  double eps = 0.0;
  // raw per-replica origin-cluster sizes when requested
  std::vector<uint32_t> raw_benchmark_sizes;
  std::vector<uint32_t> raw_restricted_sizes;
};

// Coupled unweighted finite-range model against the weight-restricted model:
// per replica every edge of the former must exist in the latter. Throws
// invalid_argument when (eps, r2, B) violates the uniform lower bound.
DominationReport domination_check(const ModelSpec& base, double b_lo,
                                  double b_hi, double r2, double eps,
                                  double lambda, double L, uint64_t samples,
                                  rng::Seed128 seed, int threads = 0,
                                  bool record_raw = false);

struct RussoGapReport {
  double finite_difference = 0.0;
  double fd_se = 0.0;
  Estimate insertion;  // (2L)^d E[f(xi^x) - f(xi)], x ~ uniform x pi
  double gap = 0.0;
};

// finite-volume continuum derivative check: coupled finite difference of
// theta^L(k) against the Poisson insertion integral
RussoGapReport continuum_russo_check(const ModelSpec& base, double lambda,
                                     double L, uint64_t k, uint64_t samples,
                                     double step, rng::Seed128 seed,
                                     int threads = 0);

}  // namespace wrcm
