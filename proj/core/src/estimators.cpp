#include "wrcm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "wrcm/osss.hpp"

namespace wrcm {

namespace {

std::shared_ptr<const ModelSpec> with_params(const ModelSpec& base,
                                             double lambda, double L) {
  auto m = std::make_shared<ModelSpec>(base);
  m->intensity = lambda;
  m->box_half_width = L;
  return m;
}

TailCurve curve_from_counts(const std::vector<uint64_t>& ge_counts,
                            uint64_t samples, double lambda, double L,
                            rng::Seed128 seed) {
  TailCurve c;
  c.lambda = lambda;
  c.L = L;
  for (uint64_t k = 1; k < ge_counts.size(); ++k) {
    double p = static_cast<double>(ge_counts[k]) / static_cast<double>(samples);
    c.ks.push_back(k);
    c.theta.push_back(
        Estimate{p, stats::binomial_se(p, samples), samples, seed});
  }
  return c;
}

}  // namespace

TailCurve estimate_tail(const ModelSpec& base, double lambda, double L,
                        uint64_t k_max, uint64_t samples, rng::Seed128 seed,
                        int threads, std::vector<uint32_t>* raw_sizes) {
  auto model = with_params(base, lambda, L);
  if (raw_sizes) raw_sizes->assign(samples, 0);
  const int chunks = 64;
  std::vector<std::vector<uint64_t>> counts(
      chunks, std::vector<uint64_t>(k_max + 1, 0));
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        ClusterOptions opts;
        opts.size_cap = k_max;
        opts.record_members = false;
        opts.record_generations = false;
        for (uint64_t rep = begin; rep < end; ++rep) {
          auto cfg = sample_ppp_with_origin(model, seed, rep);
          ClusterResult c = cluster_of_origin(cfg, opts);
          uint64_t s = std::min<uint64_t>(c.size, k_max);
          for (uint64_t k = 1; k <= s; ++k) ++counts[chunk][k];
          if (raw_sizes) (*raw_sizes)[rep] = static_cast<uint32_t>(s);
        }
      },
      chunks);
  std::vector<uint64_t> total(k_max + 1, 0);
  for (auto& c : counts)
    for (uint64_t k = 0; k <= k_max; ++k) total[k] += c[k];
  return curve_from_counts(total, samples, lambda, L, seed);
}

std::vector<TailCurve> estimate_tail_coupled(const ModelSpec& base,
                                             const std::vector<double>& lambdas,
                                             double L, uint64_t k_max,
                                             uint64_t samples, rng::Seed128 seed,
                                             int threads) {
  if (lambdas.empty()) return {};
  for (size_t i = 1; i < lambdas.size(); ++i)
    if (lambdas[i] < lambdas[i - 1])
      throw std::invalid_argument("estimate_tail_coupled: lambdas must ascend");
  double lam_max = lambdas.back();
  auto model = with_params(base, lam_max, L);
  const int chunks = 64;
  size_t nl = lambdas.size();
  std::vector<std::vector<std::vector<uint64_t>>> counts(
      chunks, std::vector<std::vector<uint64_t>>(
                  nl, std::vector<uint64_t>(k_max + 1, 0)));

  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        ClusterOptions opts;
        opts.size_cap = k_max;
        opts.record_members = false;
        opts.record_generations = false;
        for (uint64_t rep = begin; rep < end; ++rep) {
          auto cfg = sample_ppp_with_origin(model, seed, rep);
          std::vector<uint8_t> active(cfg.poisson_count(), 0);
          uint64_t prev = 0;
          for (size_t i = 0; i < nl; ++i) {
            double frac = lambdas[i] / lam_max;
            for (PointId p = 0; p < cfg.poisson_count(); ++p)
              active[p] = cfg.thin_variate(p) < frac ? 1 : 0;
            ClusterOptions o = opts;
            o.active = &active;
            ClusterResult c = cluster_of_origin(cfg, o);
            uint64_t s = std::min<uint64_t>(c.size, k_max);
            if (i > 0 && s < prev && !c.capped)
              throw std::logic_error(
                  "coupled tail: cluster size decreased in lambda");
            prev = s;
            for (uint64_t k = 1; k <= s; ++k) ++counts[chunk][i][k];
          }
        }
      },
      chunks);

  std::vector<TailCurve> out;
  for (size_t i = 0; i < nl; ++i) {
    std::vector<uint64_t> total(k_max + 1, 0);
    for (int c = 0; c < chunks; ++c)
      for (uint64_t k = 0; k <= k_max; ++k) total[k] += counts[c][i][k];
    out.push_back(curve_from_counts(total, samples, lambdas[i], L, seed));
  }
  return out;
}

ChiEstimate estimate_chi(const ModelSpec& base, double lambda, double L,
                         uint64_t samples, rng::Seed128 seed, uint64_t size_cap,
                         int threads, std::vector<uint32_t>* raw_sizes) {
  auto model = with_params(base, lambda, L);
  if (raw_sizes) raw_sizes->assign(samples, 0);
  const int chunks = 64;
  std::vector<stats::Accumulator> acc(chunks);
  std::vector<uint64_t> caps(chunks, 0);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        ClusterOptions opts;
        opts.size_cap = size_cap;
        opts.record_members = false;
        opts.record_generations = false;
        for (uint64_t rep = begin; rep < end; ++rep) {
          auto cfg = sample_ppp_with_origin(model, seed, rep);
          ClusterResult c = cluster_of_origin(cfg, opts);
          acc[chunk].add(static_cast<double>(c.size));
          if (c.capped) ++caps[chunk];
          if (raw_sizes) (*raw_sizes)[rep] = static_cast<uint32_t>(c.size);
        }
      },
      chunks);
  stats::Accumulator total;
  uint64_t cap_hits = 0;
  for (int c = 0; c < chunks; ++c) {
    total.merge(acc[c]);
    cap_hits += caps[c];
  }
  ChiEstimate out;
  out.chi = total.estimate(seed);
  out.cap_fraction =
      static_cast<double>(cap_hits) / static_cast<double>(samples);
  out.divergence_warning = out.cap_fraction > 0.10;
  return out;
}

std::vector<PercolationPoint> estimate_percolation(
    const ModelSpec& base, double lambda, const std::vector<double>& L_list,
    uint64_t samples, rng::Seed128 seed, int threads) {
  std::vector<PercolationPoint> out;
  for (size_t li = 0; li < L_list.size(); ++li) {
    double L = L_list[li];
    auto model = with_params(base, lambda, L);
    rng::Seed128 seed_l = rng::derive_seed(seed, 0x70, li);
    const int chunks = 64;
    std::vector<stats::Accumulator> acc(chunks);
    stats::parallel_replicas(
        samples, threads,
        [&](uint64_t begin, uint64_t end, int chunk) {
          ClusterOptions opts;
          opts.stop_at_boundary = true;
          opts.record_members = false;
          opts.record_generations = false;
          for (uint64_t rep = begin; rep < end; ++rep) {
            auto cfg = sample_ppp_with_origin(model, seed_l, rep);
            ClusterResult c = cluster_of_origin(cfg, opts);
            acc[chunk].add(c.touches_boundary ? 1.0 : 0.0);
          }
        },
        chunks);
    stats::Accumulator total;
    for (auto& a : acc) total.merge(a);
    out.push_back({L, total.estimate(seed_l)});
  }
  return out;
}

namespace {

// One-arm reach probabilities decrease with the volume at every intensity,
// so the raw curves never intersect. The transition shows up in their
// ratio: subcritical decay drives reach_big / reach_small to zero while
// both converge to theta > 0 supercritically. The estimate is the
// half-ratio crossing, i.e. the zero of D = reach_big - reach_small / 2.
double crossing_point(const std::vector<double>& grid,
                      const std::vector<double>& small_curve,
                      const std::vector<double>& big_curve) {
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    double d0 = big_curve[i] - 0.5 * small_curve[i];
    double d1 = big_curve[i + 1] - 0.5 * small_curve[i + 1];
    if (d0 <= 0.0 && d1 > 0.0) {
      double t = d1 == d0 ? 0.5 : -d0 / (d1 - d0);
      return grid[i] + t * (grid[i + 1] - grid[i]);
    }
  }
  return -1.0;
}

}  // namespace

CriticalEstimate locate_critical(const ModelSpec& base,
                                 const std::vector<double>& lambda_grid,
                                 const std::vector<double>& L_list,
                                 uint64_t samples, rng::Seed128 seed,
                                 int threads, int bootstrap, bool record_raw) {
  if (lambda_grid.size() < 2 || L_list.size() < 2)
    throw std::invalid_argument("locate_critical: need >= 2 lambdas and Ls");
  CriticalEstimate out;
  out.lambda_grid = lambda_grid;
  out.L_list = L_list;
  out.reach.resize(L_list.size());
  if (record_raw)
    out.raw.assign(L_list.size(),
                   std::vector<std::vector<uint8_t>>(
                       lambda_grid.size(), std::vector<uint8_t>(samples, 0)));

  // coupled across lambda within each L via thinning
  for (size_t li = 0; li < L_list.size(); ++li) {
    double L = L_list[li];
    double lam_max = lambda_grid.back();
    auto model = with_params(base, lam_max, L);
    rng::Seed128 seed_l = rng::derive_seed(seed, 0xC7, li);
    const int chunks = 64;
    std::vector<std::vector<uint64_t>> hits(
        chunks, std::vector<uint64_t>(lambda_grid.size(), 0));
    stats::parallel_replicas(
        samples, threads,
        [&](uint64_t begin, uint64_t end, int chunk) {
          ClusterOptions opts;
          opts.stop_at_boundary = true;
          opts.record_members = false;
          opts.record_generations = false;
          for (uint64_t rep = begin; rep < end; ++rep) {
            auto cfg = sample_ppp_with_origin(model, seed_l, rep);
            std::vector<uint8_t> active(cfg.poisson_count(), 0);
            // descend: under thinning, not touching at some lambda implies
            // not touching at any smaller one
            for (size_t i = lambda_grid.size(); i-- > 0;) {
              double frac = lambda_grid[i] / lam_max;
              for (PointId p = 0; p < cfg.poisson_count(); ++p)
                active[p] = cfg.thin_variate(p) < frac ? 1 : 0;
              ClusterOptions o = opts;
              o.active = &active;
              ClusterResult c = cluster_of_origin(cfg, o);
              if (!c.touches_boundary) break;
              ++hits[chunk][i];
              if (record_raw) out.raw[li][i][rep] = 1;
            }
          }
        },
        chunks);
    for (size_t i = 0; i < lambda_grid.size(); ++i) {
      uint64_t h = 0;
      for (int c = 0; c < chunks; ++c) h += hits[c][i];
      double p = static_cast<double>(h) / static_cast<double>(samples);
      out.reach[li].push_back(
          Estimate{p, stats::binomial_se(p, samples), samples, seed_l});
    }
  }

  size_t is = L_list.size() - 2, ib = L_list.size() - 1;
  auto values = [&](size_t li) {
    std::vector<double> v;
    for (auto& e : out.reach[li]) v.push_back(e.mean);
    return v;
  };
  double hat = crossing_point(lambda_grid, values(is), values(ib));
  if (hat < 0)
    throw BracketError("locate_critical: no crossing inside the lambda grid");
  out.lambda_hat = hat;

  // parametric bootstrap over all cells of the two largest volumes
  std::vector<double> phat;
  std::vector<uint64_t> ns;
  for (size_t li : {is, ib})
    for (auto& e : out.reach[li]) {
      phat.push_back(e.mean);
      ns.push_back(e.samples);
    }
  size_t ng = lambda_grid.size();
  auto ci = stats::bootstrap_proportions(
      phat, ns,
      [&](const std::vector<double>& p) {
        std::vector<double> sm(p.begin(), p.begin() + ng);
        std::vector<double> bg(p.begin() + ng, p.end());
        return crossing_point(lambda_grid, sm, bg);
      },
      bootstrap, rng::derive_seed(seed, 0xB007));
  out.ci_lo = ci.lo;
  out.ci_hi = ci.hi;
  out.sd = ci.sd;
  return out;
}

RateFit fit_exponential_rate(const TailCurve& curve, uint64_t k_min,
                             uint64_t k_max) {
  std::vector<double> x, y, w;
  for (size_t i = 0; i < curve.ks.size(); ++i) {
    uint64_t k = curve.ks[i];
    if (k < k_min || k > k_max) continue;
    const Estimate& e = curve.theta[i];
    if (e.mean <= 0.0)
      throw std::invalid_argument(
          "fit_exponential_rate: zero tail estimate in the window; increase "
          "samples or shrink the window");
    double rel = e.se / e.mean;
    if (rel >= 0.25)
      throw std::invalid_argument(
          "fit_exponential_rate: relative error above 25% in the window; "
          "increase samples");
    x.push_back(static_cast<double>(k));
    y.push_back(std::log(e.mean));
    double se_log = rel;
    w.push_back(se_log > 0 ? 1.0 / (se_log * se_log) : 1.0);
  }
  if (x.size() < 2)
    throw std::invalid_argument("fit_exponential_rate: window too small");
  bool all_equal_w = std::all_of(w.begin(), w.end(),
                                 [&](double v) { return v == w.front(); });
  auto fit = stats::linear_fit(x, y, all_equal_w ? std::vector<double>{} : w);
  return RateFit{fit.slope, fit.intercept, fit.r2, fit.slope_se};
}

// ---------------------------------------------------------------------------
// min-reach ratio diagnostics
// ---------------------------------------------------------------------------

namespace {

Estimate jackknife_ratio(const std::vector<double>& num_chunks,
                         const std::vector<double>& den_chunks,
                         rng::Seed128 seed) {
  double num = 0, den = 0;
  size_t n = num_chunks.size();
  for (size_t i = 0; i < n; ++i) {
    num += num_chunks[i];
    den += den_chunks[i];
  }
  double full = den != 0 ? num / den : 0.0;
  stats::Accumulator pseudo;
  for (size_t i = 0; i < n; ++i) {
    double nn = num - num_chunks[i], dd = den - den_chunks[i];
    double leave = dd != 0 ? nn / dd : full;
    pseudo.add(leave);
  }
  double var = 0.0;
  double mean = pseudo.mean();
  for (size_t i = 0; i < n; ++i) {
    double nn = num - num_chunks[i], dd = den - den_chunks[i];
    double leave = dd != 0 ? nn / dd : full;
    var += (leave - mean) * (leave - mean);
  }
  var *= static_cast<double>(n - 1) / static_cast<double>(n);
  Estimate e;
  e.mean = full;
  e.se = std::sqrt(var);
  e.samples = n;
  e.seed = seed;
  return e;
}

}  // namespace

RatioDiagnostics ratio_diagnostics(const ModelSpec& base, double lambda,
                                   double gamma_tilde,
                                   const std::vector<double>& m_list,
                                   uint64_t k, int L, int n, uint64_t samples,
                                   rng::Seed128 seed, int threads,
                                   bool record_raw) {
  if (!base.adjacency.reach.present())
    throw std::invalid_argument("ratio_diagnostics: min-reach spec required");
  if (m_list.empty() || m_list.front() != 1.0)
    throw std::invalid_argument("ratio_diagnostics: m_list must start at 1");
  auto model = with_params(base, lambda, base.box_half_width);
  LatticeSpec spec = build_lattice(model, L, n);

  // bins of the requested weights
  std::vector<int> bins;
  for (double m : m_list) {
    auto it = std::find_if(spec.bins.begin(), spec.bins.end(), [&](double b) {
      return std::fabs(b - m) < 1e-9;
    });
    if (it == spec.bins.end())
      throw std::invalid_argument("ratio_diagnostics: m not on the bin grid");
    bins.push_back(static_cast<int>(it - spec.bins.begin()));
  }
  // probe site one lattice step from the origin
  int64_t probe_site = spec.origin_site() + 1;

  const int chunks = 64;
  size_t nm = m_list.size();
  std::vector<std::vector<double>> mag_sum(chunks, std::vector<double>(nm, 0));
  std::vector<std::vector<double>> piv_sum(chunks, std::vector<double>(nm, 0));
  RatioDiagnostics out;
  if (record_raw) {
    out.raw_magnetization.assign(nm, std::vector<double>(samples, 0.0));
    out.raw_pivotal_counts.assign(nm, std::vector<uint32_t>(samples, 0));
  }
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        for (uint64_t rep = begin; rep < end; ++rep) {
          LatticeInstance inst = sample_instance(spec, lambda, seed, rep);
          ReplicaAnalysis an(inst);
          for (size_t i = 0; i < nm; ++i) {
            VertexId probe = spec.vertex_of(probe_site, bins[i]);
            double mag = -std::expm1(
                -gamma_tilde * static_cast<double>(an.cluster_size_of(probe)));
            mag_sum[chunk][i] += mag;
            // factorized pivotal sum: (1 - p_m) sum_u 1{(u, m) pivotal}
            uint64_t cnt = 0;
            for (int64_t s = 0; s < spec.n_sites; ++s)
              if (an.vertex_pivotal(spec.vertex_of(s, bins[i]), k)) ++cnt;
            piv_sum[chunk][i] += (1.0 - spec.p_open(bins[i], lambda)) *
                                 static_cast<double>(cnt);
            if (record_raw) {
              out.raw_magnetization[i][rep] = mag;
              out.raw_pivotal_counts[i][rep] = static_cast<uint32_t>(cnt);
            }
          }
        }
      },
      chunks);

  std::vector<double> xs, y_delta, y_piv;
  for (size_t i = 0; i < nm; ++i) {
    std::vector<double> num_m(chunks), den_m(chunks), num_p(chunks),
        den_p(chunks);
    for (int c = 0; c < chunks; ++c) {
      num_m[c] = mag_sum[c][i];
      den_m[c] = mag_sum[c][0];
      num_p[c] = piv_sum[c][i];
      den_p[c] = piv_sum[c][0];
    }
    RatioRow row;
    row.m = m_list[i];
    row.reach_pow_d =
        std::pow(base.adjacency.reach(m_list[i]), spec.d);
    row.delta_ratio = jackknife_ratio(num_m, den_m, seed);
    row.pivotal_ratio = jackknife_ratio(num_p, den_p, seed);
    out.rows.push_back(row);
    if (row.delta_ratio.mean > 0 && row.pivotal_ratio.mean > 0) {
      xs.push_back(row.reach_pow_d);
      y_delta.push_back(std::log(row.delta_ratio.mean));
      y_piv.push_back(std::log(row.pivotal_ratio.mean));
    }
  }
  if (xs.size() >= 2) {
    out.delta_slope = stats::linear_fit(xs, y_delta).slope;
    out.pivotal_slope = stats::linear_fit(xs, y_piv).slope;
  }
  return out;
}

// ---------------------------------------------------------------------------
// discretization convergence study
// ---------------------------------------------------------------------------

std::vector<ConvergenceRow> convergence_study(
    const ModelSpec& base, double lambda, int L,
    const std::vector<int>& n_list, uint64_t k, double gamma_tilde,
    uint64_t samples, rng::Seed128 seed, int threads,
    int edge_influence_n_cap, bool record_raw) {
  std::vector<ConvergenceRow> out;
  for (int n : n_list) {
    auto model = with_params(base, lambda, L);
    LatticeSpec spec = build_lattice(model, L, n);
    rng::Seed128 seed_n = rng::derive_seed(seed, 0xCE11, static_cast<uint64_t>(n));

    const int chunks = 64;
    std::vector<stats::Accumulator> lat(chunks), cont(chunks), diff(chunks);
    std::vector<uint64_t> eligible(chunks, 0), equal(chunks, 0);
    std::vector<uint8_t> raw_bits;
    if (record_raw) raw_bits.assign(samples, 0);
    stats::parallel_replicas(
        samples, threads,
        [&](uint64_t begin, uint64_t end, int chunk) {
          for (uint64_t rep = begin; rep < end; ++rep) {
            LatticeInstance inst =
                sample_instance(spec, lambda, seed_n, rep, /*coupled=*/true);
            LatticeCluster lc = lattice_cluster(inst);
            bool f_lat = lc.size >= k;

            const PointConfiguration& src = *inst.source;
            // theta^L uses only points inside [-L, L]^d
            std::vector<uint8_t> active(src.poisson_count(), 1);
            for (PointId p = 0; p < src.poisson_count(); ++p)
              for (int a = 0; a < src.dim(); ++a)
                if (std::fabs(src.coord(p, a)) > static_cast<double>(L)) {
                  active[p] = 0;
                  break;
                }
            ClusterOptions opts;
            opts.record_members = false;
            opts.record_generations = false;
            opts.active = &active;
            ClusterResult cc = cluster_of_origin(src, opts);
            bool f_cont = cc.size >= k;

            lat[chunk].add(f_lat ? 1.0 : 0.0);
            cont[chunk].add(f_cont ? 1.0 : 0.0);
            diff[chunk].add((f_lat ? 1.0 : 0.0) - (f_cont ? 1.0 : 0.0));
            if (record_raw)
              raw_bits[rep] = static_cast<uint8_t>((f_lat ? 1 : 0) |
                                                   (f_cont ? 2 : 0));

            // eligibility: every source point mapped and all cells distinct
            uint64_t mapped = 0;
            bool distinct = true;
            for (auto& pts : inst.cell_points) {
              mapped += pts.size();
              if (pts.size() > 1) distinct = false;
            }
            if (distinct && mapped == src.size()) {
              ++eligible[chunk];
              ClusterOptions full;
              full.record_members = false;
              full.record_generations = false;
              ClusterResult fullc = cluster_of_origin(src, full);
              if (fullc.size == lc.size) ++equal[chunk];
            }
          }
        },
        chunks);

    ConvergenceRow row;
    row.n = n;
    row.H = spec.H;
    stats::Accumulator alat, acont, adiff;
    for (int c = 0; c < chunks; ++c) {
      alat.merge(lat[c]);
      acont.merge(cont[c]);
      adiff.merge(diff[c]);
      row.eligible_replicas += eligible[c];
      row.equal_replicas += equal[c];
    }
    row.theta_lattice = alat.estimate(seed_n);
    row.theta_continuum = acont.estimate(seed_n);
    Estimate d = adiff.estimate(seed_n);
    row.diff = Estimate{std::fabs(d.mean), d.se, d.samples, seed_n};

    if (n <= edge_influence_n_cap)
      row.edge_influence = edge_influence_sum(
          spec, lambda, k, gamma_tilde, std::max<uint64_t>(samples / 4, 2000),
          8, rng::derive_seed(seed_n, 0xED6E), threads);

    // Russo gap: intensity-coupled central difference of the direct lattice
    // tail against the Monte Carlo covariance-sum form
    double h = 0.05 * lambda;
    rng::Seed128 seed_fd = rng::derive_seed(seed_n, 0xFD);
    uint64_t fd_samples = std::max<uint64_t>(samples, 2000);
    Estimate up = lattice_tail(spec, lambda + h, k, fd_samples, seed_fd, threads);
    Estimate dn = lattice_tail(spec, lambda - h, k, fd_samples, seed_fd, threads);
    row.russo_fd = (up.mean - dn.mean) / (2.0 * h);
    row.russo_mc =
        russo_rhs(spec, lambda, k, RussoMode::monte_carlo,
                  std::max<uint64_t>(samples / 2, 2000),
                  rng::derive_seed(seed_n, 0x500), threads);
    row.russo_gap = std::fabs(row.russo_fd - row.russo_mc);
    if (record_raw) row.raw = std::move(raw_bits);
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// stochastic domination coupling
// ---------------------------------------------------------------------------

DominationReport domination_check(const ModelSpec& base, double b_lo,
                                  double b_hi, double r2, double eps,
                                  double lambda, double L, uint64_t samples,
                                  rng::Seed128 seed, int threads,
                                  bool record_raw) {
  if (b_lo < 1.0 || b_hi < b_lo) throw std::invalid_argument("bad weight band");
  // uniform lower bound phi(r; a, b) >= eps on (0, r2] x B x B
  for (int ir = 1; ir <= 32; ++ir) {
    double r = r2 * ir / 32.0;
    for (double a : {b_lo, 0.5 * (b_lo + b_hi), b_hi})
      for (double b : {b_lo, 0.5 * (b_lo + b_hi), b_hi}) {
        double phi = base.adjacency.eval(r, a, b);
        if (phi < eps) {
          char buf[160];
          std::snprintf(buf, sizeof(buf),
                        "domination_check: phi(%.6g; %.6g, %.6g) = %.6g < eps",
                        r, a, b, phi);
          throw std::invalid_argument(buf);
        }
      }
  }

  auto model = with_params(base, lambda, L);
  DominationReport rep;
  if (record_raw) {
    rep.raw_benchmark_sizes.assign(samples, 0);
    rep.raw_restricted_sizes.assign(samples, 0);
  }
  const int chunks = 64;
  std::vector<uint64_t> edge_bad(chunks, 0), cluster_bad(chunks, 0),
      restricted_counts(chunks, 0);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        for (uint64_t rep_i = begin; rep_i < end; ++rep_i) {
          auto cfg0 = sample_ppp(model, seed, rep_i);
          std::vector<double> origin(cfg0.dim(), 0.0);
          auto cfg = augment(cfg0, {{origin, b_lo}});
          PointId origin_id = cfg.size() - 1;

          std::vector<PointId> restricted;
          for (PointId i = 0; i < cfg.size(); ++i)
            if (cfg.weight(i) >= b_lo && cfg.weight(i) <= b_hi)
              restricted.push_back(i);
          restricted_counts[chunk] += restricted.size() - 1;  // origin excluded

          // edge subset: g-edge at u < eps within (0, r2]; restricted edge at
          // u < phi
          size_t nr = restricted.size();
          std::vector<std::vector<uint32_t>> g_adj(nr), m_adj(nr);
          for (size_t i = 0; i < nr; ++i)
            for (size_t j = i + 1; j < nr; ++j) {
              PointId a = restricted[i], b = restricted[j];
              double r = cfg.dist(a, b);
              double u = cfg.edge_variate(a, b);
              bool ge = r > 0.0 && r <= r2 && u < eps;
              bool me = u < cfg.model().adjacency.eval(r, cfg.weight(a),
                                                       cfg.weight(b));
              if (ge && !me) ++edge_bad[chunk];
              if (ge) {
                g_adj[i].push_back(static_cast<uint32_t>(j));
                g_adj[j].push_back(static_cast<uint32_t>(i));
              }
              if (me) {
                m_adj[i].push_back(static_cast<uint32_t>(j));
                m_adj[j].push_back(static_cast<uint32_t>(i));
              }
            }
          auto bfs = [&](const std::vector<std::vector<uint32_t>>& adj,
                         size_t start) {
            std::vector<uint8_t> vis(nr, 0);
            std::vector<size_t> stack{start};
            vis[start] = 1;
            uint64_t cnt = 1;
            while (!stack.empty()) {
              size_t cur = stack.back();
              stack.pop_back();
              for (uint32_t nx : adj[cur])
                if (!vis[nx]) {
                  vis[nx] = 1;
                  ++cnt;
                  stack.push_back(nx);
                }
            }
            return cnt;
          };
          size_t origin_slot =
              std::find(restricted.begin(), restricted.end(), origin_id) -
              restricted.begin();
          uint64_t g_size = bfs(g_adj, origin_slot);
          uint64_t m_size = bfs(m_adj, origin_slot);
          if (g_size > m_size) ++cluster_bad[chunk];
          if (record_raw) {
            rep.raw_benchmark_sizes[rep_i] = static_cast<uint32_t>(g_size);
            rep.raw_restricted_sizes[rep_i] = static_cast<uint32_t>(m_size);
          }
        }
      },
      chunks);

  rep.replicas = samples;
  rep.eps = eps;
  double pi_b = base.weights.tail(b_lo) -
                base.weights.tail(std::nextafter(b_hi, 1e308));
  rep.lambda_restricted = lambda * pi_b;
  uint64_t total_pts = 0;
  for (int c = 0; c < chunks; ++c) {
    rep.edge_violations += edge_bad[c];
    rep.cluster_violations += cluster_bad[c];
    total_pts += restricted_counts[c];
  }
  double volume = std::pow(2.0 * L, base.adjacency.dimension);
  double mu = static_cast<double>(samples) * rep.lambda_restricted * volume;
  rep.point_count_z =
      mu > 0 ? (static_cast<double>(total_pts) - mu) / std::sqrt(mu) : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// continuum derivative check
// ---------------------------------------------------------------------------

RussoGapReport continuum_russo_check(const ModelSpec& base, double lambda,
                                     double L, uint64_t k, uint64_t samples,
                                     double step, rng::Seed128 seed,
                                     int threads) {
  double lam_hi = lambda + step, lam_lo = lambda - step;
  auto model_hi = with_params(base, lam_hi, L);
  auto model_mid = with_params(base, lambda, L);
  const int chunks = 64;
  std::vector<stats::Accumulator> fd(chunks), ins(chunks);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        ClusterOptions opts;
        opts.size_cap = k;
        opts.record_members = false;
        opts.record_generations = false;
        for (uint64_t rep = begin; rep < end; ++rep) {
          // coupled finite difference via thinning from lam_hi
          auto cfg = sample_ppp_with_origin(model_hi, seed, rep);
          std::vector<uint8_t> active(cfg.poisson_count(), 0);
          for (PointId p = 0; p < cfg.poisson_count(); ++p)
            active[p] = cfg.thin_variate(p) < lam_lo / lam_hi ? 1 : 0;
          ClusterOptions o = opts;
          o.active = &active;
          bool f_lo = cluster_of_origin(cfg, o).size >= k;
          bool f_hi = cluster_of_origin(cfg, opts).size >= k;
          fd[chunk].add(((f_hi ? 1.0 : 0.0) - (f_lo ? 1.0 : 0.0)) /
                        (2.0 * step));

          // Poisson insertion at the target intensity
          rng::Seed128 seed_m = rng::derive_seed(seed, 0x3C, rep);
          auto cfg2 = sample_ppp_with_origin(model_mid, seed_m, 0);
          rng::Stream xs(seed_m, rng::Tag::experiment, rep);
          std::vector<double> x(cfg2.dim());
          for (int a = 0; a < cfg2.dim(); ++a)
            x[a] = (2.0 * xs.next_unit() - 1.0) * L;
          double w = base.weights.sample(xs);
          bool f0 = cluster_of_origin(cfg2, opts).size >= k;
          auto cfg3 = augment(cfg2, {{x, w}});
          bool f1 = cluster_of_origin(cfg3, opts).size >= k;
          double volume = std::pow(2.0 * L, cfg2.dim());
          ins[chunk].add(volume * ((f1 ? 1.0 : 0.0) - (f0 ? 1.0 : 0.0)));
        }
      },
      chunks);
  stats::Accumulator afd, ains;
  for (int c = 0; c < chunks; ++c) {
    afd.merge(fd[c]);
    ains.merge(ins[c]);
  }
  RussoGapReport rep;
  rep.finite_difference = afd.mean();
  rep.fd_se = afd.se();
  rep.insertion = ains.estimate(seed);
  rep.gap = std::fabs(rep.finite_difference - rep.insertion.mean);
  return rep;
}

}  // namespace wrcm
