// Acceptance suite: one pass/fail line per criterion, every tolerance pinned
// in code. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "wrcm/estimators.hpp"
#include "wrcm/io.hpp"
#include "wrcm/oracle.hpp"
#include "wrcm/osss.hpp"
#include "wrcm/stats.hpp"

using namespace wrcm;
namespace fs = std::filesystem;

namespace {

const rng::Seed128 kSeed{0xacce97ed, 0x5eed0001};
int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

void report(int criterion, bool pass, const std::string& detail,
            double seconds) {
  std::printf("[%s] criterion %2d: %s (%.1f s)\n", pass ? "PASS" : "FAIL",
              criterion, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void note(const std::string& text) {
  std::printf("       note: %s\n", text.c_str());
  std::fflush(stdout);
}

ModelSpec gilbert(double lambda, double L) {
  ModelSpec m;
  m.adjacency = AdjacencySpec::make_disk(2, 1.0);
  m.weights = WeightDistribution::point_mass();
  m.intensity = lambda;
  m.box_half_width = L;
  return m;
}

ModelSpec long_range(double lambda, double L) {
  ModelSpec m;
  m.adjacency = AdjacencySpec::make_inverse_power(2, 3.0);
  m.weights = WeightDistribution::point_mass();
  m.intensity = lambda;
  m.box_half_width = L;
  return m;
}

ModelSpec min_reach(double lambda, double L, double m_max) {
  ModelSpec m;
  m.adjacency = AdjacencySpec::make_weighted_reach(2, 3.0);
  m.weights = WeightDistribution::pareto(4.5, m_max);
  m.intensity = lambda;
  m.box_half_width = L;
  return m;
}

// the closest admissible grid to "16x16": site grids are always odd-sided
LatticeSpec criterion_lattice(double lambda) {
  auto m = std::make_shared<ModelSpec>(gilbert(lambda, 4.0));
  return build_lattice(m, 4, 1);  // 17x17 = 289 sites
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion_1_exact_russo() {
  Timer t;
  double worst = 0.0;
  int instances = 0;
  for (int i = 0; i < 22; ++i) {
    auto tiny = oracle::random_tiny(kSeed, 10 + i, 6);
    double lambda = 0.5 + 0.07 * i;
    for (uint64_t k : {2u, 3u}) {
      auto d = oracle::exact_derivative(tiny, k, lambda, 1e-4);
      double scale = std::max(1.0, std::fabs(d.covariance_sum));
      worst = std::max(worst,
                       std::fabs(d.finite_difference - d.covariance_sum) /
                           scale);
    }
    ++instances;
  }
  bool pass = instances >= 20 && worst <= 1e-6 && t.seconds() < 120.0;
  report(1, pass,
         fmt("exact Russo covariance sum vs central difference on %d random "
             "instances, worst rel err %.2e (tol 1e-6)",
             instances, worst),
         t.seconds());
}

// shared state for criteria 2 and 3
struct LatticeBattery {
  // per-vertex z statistics of (forest revealment - exact law), per gamma
  std::vector<double> max_abs_z;
  std::vector<double> root_residual;  // literal-form minus exact law at root
  InequalityReport osss;
  InequalityReport ghost;
};

LatticeBattery run_lattice_battery() {
  LatticeBattery out;
  LatticeSpec spec = criterion_lattice(0.5);
  int64_t nv = spec.vertex_count();
  const uint64_t reps = 100000;

  for (double gamma_tilde : {0.05, 0.2}) {
    GhostField ghost{gamma_tilde};
    std::vector<stats::Accumulator> diff(nv);
    stats::Accumulator literal_root, law_root;
    const int chunks = 64;
    std::vector<std::vector<stats::Accumulator>> cd(
        chunks, std::vector<stats::Accumulator>(nv));
    std::vector<stats::Accumulator> clit(chunks), claw(chunks);
    stats::parallel_replicas(
        reps, 0,
        [&](uint64_t begin, uint64_t end, int chunk) {
          std::vector<uint8_t> revealed(nv);
          for (uint64_t rep = begin; rep < end; ++rep) {
            LatticeInstance inst =
                sample_instance(spec, 0.5, kSeed, rep);
            ForestOutcome fo = run_forest(inst, ghost);
            ReplicaAnalysis an(inst);
            std::fill(revealed.begin(), revealed.end(), 0);
            for (VertexId v : fo.revealed_vertices) revealed[v] = 1;
            for (int64_t v = 0; v < nv; ++v) {
              double law = -std::expm1(
                  -gamma_tilde *
                  static_cast<double>(an.cluster_size_excluding_root(
                      static_cast<VertexId>(v))));
              cd[chunk][v].add(static_cast<double>(revealed[v]) - law);
            }
            clit[chunk].add(-std::expm1(
                -gamma_tilde * static_cast<double>(an.root_cluster_size())));
            claw[chunk].add(-std::expm1(
                -gamma_tilde *
                static_cast<double>(an.root_cluster_size() - 1)));
          }
        },
        chunks);
    for (int c = 0; c < chunks; ++c) {
      for (int64_t v = 0; v < nv; ++v) diff[v].merge(cd[c][v]);
      literal_root.merge(clit[c]);
      law_root.merge(claw[c]);
    }
    double worst = 0.0;
    for (int64_t v = 0; v < nv; ++v) {
      double se = diff[v].se();
      double z = se > 0 ? std::fabs(diff[v].mean()) / se
                        : std::fabs(diff[v].mean()) > 0 ? 1e9 : 0.0;
      worst = std::max(worst, z);
    }
    out.max_abs_z.push_back(worst);
    out.root_residual.push_back(literal_root.mean() - law_root.mean());
  }

  out.osss = osss_check_monte_carlo(spec, 0.5, 3, 0.2, 100000, 16,
                                    rng::derive_seed(kSeed, 0x05),
                                    0);
  out.ghost = prop_ghost_lower_bound_monte_carlo(
      spec, 0.5, 3, 1.0, 100000, 16, rng::derive_seed(kSeed, 0x27), 0);
  return out;
}

void criterion_2_magnetization(const LatticeBattery& battery,
                               const std::vector<io::OracleFixture>& fixtures,
                               double battery_seconds) {
  Timer t;
  // exact part on enumerated fixtures
  double worst_exact = 0.0;
  for (const auto& f : fixtures) {
    auto ids = oracle::magnetization_identity_exact(f.tiny, f.lambda);
    for (const auto& row : ids)
      worst_exact =
          std::max(worst_exact, std::fabs(row.revealment - row.magnetization));
  }
  bool exact_ok = worst_exact <= 1e-12;
  bool mc_ok =
      battery.max_abs_z[0] <= 3.0 && battery.max_abs_z[1] <= 3.0;
  report(2, exact_ok && mc_ok,
         fmt("magnetization identity: exact worst |delta - law| = %.2e "
             "(tol 1e-12); Monte Carlo worst per-vertex |z| = %.2f / %.2f "
             "at gamma~ = 0.05 / 0.2 (tol 3)",
             worst_exact, battery.max_abs_z[0], battery.max_abs_z[1]),
         t.seconds() + battery_seconds * 0.6);
  note(fmt("identity checked in its exact root-excluded form; the root tree "
           "reveals only its copy, so the literal paper form differs at the "
           "root by %.4f / %.4f",
           battery.root_residual[0], battery.root_residual[1]));
}

void criterion_3_osss(const LatticeBattery& battery,
                      const std::vector<io::OracleFixture>& fixtures,
                      double battery_seconds) {
  Timer t;
  double worst_slack = 1e9;
  for (const auto& f : fixtures) {
    auto rep = oracle::osss_check_exact(f.tiny, f.lambda, f.k);
    auto rep2 =
        oracle::prop_ghost_lower_bound_exact(f.tiny, f.lambda, f.k, f.gamma);
    worst_slack = std::min({worst_slack, rep.slack, rep2.slack});
  }
  bool exact_ok = worst_slack >= -1e-12;
  bool mc_ok = battery.osss.slack >= -4.0 * battery.osss.sigma &&
               battery.ghost.slack >= -4.0 * battery.ghost.sigma;
  report(3, exact_ok && mc_ok,
         fmt("OSSS and ghost-field bounds: exact min slack %.2e (tol -1e-12); "
             "MC slack %.4f +- %.4f and %.4f +- %.4f (tol -4 sigma)",
             worst_slack, battery.osss.slack, battery.osss.sigma,
             battery.ghost.slack, battery.ghost.sigma),
         t.seconds() + battery_seconds * 0.4);
}

void criterion_4_subcritical() {
  Timer t;
  ModelSpec m = gilbert(0.2, 20.0);
  TailCurve curve = estimate_tail(m, 0.2, 20.0, 40, 100000, kSeed);
  bool stated_pass = false;
  std::string stated_detail;
  try {
    RateFit fit = fit_exponential_rate(curve, 5, 40);
    stated_pass = fit.slope < 0.0 && fit.r2 >= 0.98;
    stated_detail = fmt("slope %.4f, r2 %.4f on k in [5,40]", fit.slope,
                        fit.r2);
  } catch (const std::exception& e) {
    stated_detail = fmt("fit on k in [5,40] rejected: %s", e.what());
  }
  report(4, stated_pass,
         "subcritical tail fit at lambda 0.2, 1e5 replicas, window [5,40]: " +
             stated_detail,
         t.seconds());
  if (!stated_pass) {
    // the criterion window is unattainable: the measured decay rate (~0.8
    // per vertex) empties the tail beyond k ~ 13 at this replica count;
    // the branching-process rate 0.093 the window was calibrated against
    // overestimates theta(40) by 12 orders of magnitude
    size_t last_pos = 0;
    for (size_t i = 0; i < curve.ks.size(); ++i)
      if (curve.theta[i].mean > 0) last_pos = i;
    note(fmt("theta(10) = %.2e, last nonzero estimate at k = %llu; "
             "exp(-C k) content verified on the attainable window below",
             curve.theta[9].mean,
             static_cast<unsigned long long>(curve.ks[last_pos])));
    try {
      RateFit fit = fit_exponential_rate(curve, 3, 10);
      bool diag = fit.slope < 0.0 && fit.r2 >= 0.98;
      note(fmt("supplementary diagnostic (same run, window [3,10]): slope "
               "%.4f, r2 %.4f -> %s",
               fit.slope, fit.r2, diag ? "log-linear decay confirmed"
                                       : "UNEXPECTED"));
    } catch (const std::exception& e) {
      note(fmt("supplementary window failed too: %s", e.what()));
    }
  }
}

double criterion_5_gw_bounds() {
  Timer t;
  ModelSpec m = gilbert(1.0, 10.0);
  std::vector<double> grid{0.8, 1.0, 1.2, 1.45, 1.7, 2.0, 2.4};
  CriticalEstimate crit = locate_critical(
      m, grid, {10.0, 20.0, 40.0}, 3000, rng::derive_seed(kSeed, 5));
  double gw_lower = 1.0 / std::numbers::pi;
  bool lower_ok = crit.lambda_hat >= gw_lower - 3.0 * crit.sd;

  ChiEstimate chi = estimate_chi(gilbert(0.2, 20.0), 0.2, 20.0, 100000,
                                 rng::derive_seed(kSeed, 6));
  double chi_bound = 1.0 / (1.0 - 0.2 * std::numbers::pi);
  bool chi_ok = chi.chi.mean <= chi_bound + 3.0 * chi.chi.se;
  report(5, lower_ok && chi_ok,
         fmt("lambda_hat %.4f (sd %.4f) >= 1/pi - 3 sigma = %.4f; chi(0.2) "
             "%.4f +- %.4f <= %.4f + 3 se",
             crit.lambda_hat, crit.sd, gw_lower - 3 * crit.sd, chi.chi.mean,
             chi.chi.se, chi_bound),
         t.seconds());
  return crit.lambda_hat;
}

void criterion_6_supercritical(double lambda_hat) {
  Timer t;
  double lam = 1.5 * lambda_hat;
  ModelSpec m = gilbert(lam, 10.0);
  auto points = estimate_percolation(m, lam, {10.0, 20.0, 40.0}, 10000,
                                     rng::derive_seed(kSeed, 7));
  bool reach_ok = true;
  std::string reach_str;
  for (const auto& p : points) {
    reach_ok = reach_ok && p.reach.mean >= 0.5;
    reach_str += fmt("%.3f ", p.reach.mean);
  }

  // fitted reach(lambda) on [lambda_hat, 1.3 lambda_hat] at the largest L
  std::vector<double> lams, ys;
  for (int i = 0; i <= 4; ++i)
    lams.push_back(lambda_hat * (1.0 + 0.075 * i));
  for (size_t i = 0; i < lams.size(); ++i) {
    auto p = estimate_percolation(gilbert(lams[i], 40.0), lams[i], {40.0},
                                  3000, rng::derive_seed(kSeed, 8 + i));
    ys.push_back(p[0].reach.mean);
  }
  auto fit = stats::linear_fit(lams, ys);
  std::string resid;
  for (double r : fit.residuals) resid += fmt("%.3f ", r);
  bool slope_ok = fit.slope > 0.0;
  report(6, reach_ok && slope_ok,
         fmt("boundary reach at lambda = 1.5 lambda_hat = %.3f across L in "
             "{10,20,40}: %s(>= 0.5 each); reach(lambda) slope on "
             "[lambda_hat, 1.3 lambda_hat] = %.3f > 0",
             lam, reach_str.c_str(), fit.slope),
         t.seconds());
  note("linear-fit residuals at L = 40: " + resid);
}

std::vector<ConvergenceRow> criterion_7_convergence() {
  Timer t;
  ModelSpec m = long_range(0.5, 3.0);
  // the edge-influence sum is asserted for n <= 3 (criterion 8)
  auto rows = convergence_study(m, 0.5, 3, {0, 1, 2, 3, 4}, 3, 0.1, 20000,
                                rng::derive_seed(kSeed, 9), 0, 3);
  bool monotone = true;
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    double joint =
        1.96 * std::hypot(rows[i].diff.se, rows[i + 1].diff.se);
    if (rows[i + 1].diff.mean > rows[i].diff.mean + joint) monotone = false;
  }
  bool exact_ok = true;
  uint64_t eligible = 0;
  for (const auto& r : rows) {
    exact_ok = exact_ok && (r.equal_replicas == r.eligible_replicas);
    eligible += r.eligible_replicas;
  }
  std::string diffs;
  for (const auto& r : rows) diffs += fmt("%.4f ", r.diff.mean);
  report(7, monotone && exact_ok && eligible > 0,
         fmt("coupled |theta^{L,n}(3) - theta^L(3)| over n in {0..4}: %s"
             "non-increasing within pooled 95%% CIs; cluster sizes equal on "
             "all %llu distinct-cell replicas",
             diffs.c_str(), static_cast<unsigned long long>(eligible)),
         t.seconds());
  return rows;
}

void criterion_8_edge_influence(const std::vector<ConvergenceRow>& rows) {
  Timer t;
  bool monotone = true;
  std::vector<double> lx, ly;
  std::string vals;
  for (size_t i = 0; i + 1 < 4; ++i)
    if (rows[i + 1].edge_influence.mean >= rows[i].edge_influence.mean)
      monotone = false;
  for (size_t i = 0; i < 4; ++i) {
    vals += fmt("%.4g ", rows[i].edge_influence.mean);
    if (rows[i].edge_influence.mean > 0) {
      lx.push_back(std::log(std::ldexp(1.0, -2 * rows[i].n)));  // 2^{-nd}
      ly.push_back(std::log(rows[i].edge_influence.mean));
    }
  }
  double slope = 0.0;
  if (lx.size() >= 2) slope = stats::linear_fit(lx, ly).slope;
  report(8, monotone && slope > 0.0,
         fmt("edge-influence sum I^{n,L,gamma~} over n in {0..3}: %s"
             "strictly decreasing; log-log slope vs 2^{-nd} = %.2f > 0",
             vals.c_str(), slope),
         t.seconds());
}

void criterion_9_ratios() {
  Timer t;
  ModelSpec m = min_reach(0.5, 2.0, 12.0);
  auto diag =
      ratio_diagnostics(m, 0.5, 0.1, {1.0, 2.0, 4.0, 8.0}, 3, 2, 2, 20000,
                        rng::derive_seed(kSeed, 11));
  bool ratios_ok = true;
  std::string rows;
  for (const auto& r : diag.rows) {
    ratios_ok = ratios_ok &&
                r.delta_ratio.mean >= 1.0 - 3.0 * r.delta_ratio.se &&
                r.pivotal_ratio.mean >= 1.0 - 3.0 * r.pivotal_ratio.se;
    rows += fmt("m=%g: %.3f/%.3f ", r.m, r.delta_ratio.mean,
                r.pivotal_ratio.mean);
  }
  bool slopes_ok = diag.delta_slope >= 0.0 && diag.pivotal_slope >= 0.0;
  report(9, ratios_ok && slopes_ok,
         fmt("min-reach ratios (delta/pivotal) %s>= 1 - 3 sigma; log-ratio "
             "slopes vs R(m)^d: %.4f, %.4f >= 0 (fitted, not asserted as a "
             "bound)",
             rows.c_str(), diag.delta_slope, diag.pivotal_slope),
         t.seconds());
}

void criterion_10_domination() {
  Timer t;
  ModelSpec m = min_reach(1.0, 5.0, 8.0);
  double eps = -std::expm1(-4.0);  // phi(1; 2, 2)
  auto rep = domination_check(m, 2.0, 4.0, 1.0, eps, 1.0, 5.0, 10000,
                              rng::derive_seed(kSeed, 12));
  bool pass = rep.edge_violations == 0 && rep.cluster_violations == 0 &&
              std::fabs(rep.point_count_z) < 4.0;
  report(10, pass,
         fmt("coupled domination over %llu replicas: %llu edge and %llu "
             "cluster violations (must be 0); restricted point-count z = "
             "%.2f",
             static_cast<unsigned long long>(rep.replicas),
             static_cast<unsigned long long>(rep.edge_violations),
             static_cast<unsigned long long>(rep.cluster_violations),
             rep.point_count_z),
         t.seconds());
}

void criterion_11_determinism() {
  Timer t;
  fs::path dir = fs::temp_directory_path() / "wrcm_acceptance_det";
  fs::create_directories(dir);
  auto run_once = [&](const fs::path& csv, int threads) {
    ModelSpec m = gilbert(0.4, 8.0);
    std::vector<uint32_t> raw;
    TailCurve curve =
        estimate_tail(m, 0.4, 8.0, 20, 4000, kSeed, threads, &raw);
    io::CsvWriter w(csv, {"k", "theta_hat", "stderr", "samples"});
    for (size_t i = 0; i < curve.ks.size(); ++i) {
      w.field(curve.ks[i])
          .field(curve.theta[i].mean)
          .field(curve.theta[i].se)
          .field(curve.theta[i].samples);
      w.end_row();
    }
    io::CsvWriter r(fs::path(csv).replace_extension(".raw.csv"),
                    {"replica", "size"});
    for (size_t i = 0; i < raw.size(); ++i) {
      r.field(static_cast<uint64_t>(i)).field(static_cast<uint64_t>(raw[i]));
      r.end_row();
    }
  };
  auto bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  run_once(dir / "a.csv", 1);
  run_once(dir / "b.csv", 2);
  run_once(dir / "c.csv", 0);
  bool pass = bytes(dir / "a.csv") == bytes(dir / "b.csv") &&
              bytes(dir / "a.csv") == bytes(dir / "c.csv") &&
              bytes(dir / "a.raw.csv") == bytes(dir / "b.raw.csv") &&
              bytes(dir / "a.raw.csv") == bytes(dir / "c.raw.csv");
  report(11, pass,
         "byte-identical aggregate and raw CSVs across reruns and thread "
         "counts",
         t.seconds());
}

}  // namespace

int main() {
  std::printf("acceptance suite (seed %s)\n", kSeed.to_hex().c_str());

  criterion_1_exact_russo();

  // enumeration fixtures shared by criteria 2 and 3
  auto fixtures = io::generate_fixtures(rng::derive_seed(kSeed, 0xF1), 12);
  {
    // handcrafted fixtures alongside the random ones
    io::OracleFixture toy;
    toy.name = "two_site";
    toy.tiny.sites = {{1.0}, {1.0}};
    toy.tiny.edges = {{0, 1, 0.5}};
    toy.tiny.root = 0;
    toy.tiny.gamma_tilde = 0.1;
    toy.lambda = 1.0;
    toy.k = 2;
    toy.gamma = 1.0;
    fixtures.push_back(toy);
    io::OracleFixture path;
    path.name = "three_site_path";
    path.tiny.sites = {{1.0}, {0.8}, {1.2}};
    path.tiny.edges = {{0, 1, 0.6}, {1, 2, 0.4}};
    path.tiny.root = 0;
    path.tiny.gamma_tilde = 0.35;
    path.lambda = 0.9;
    path.k = 2;
    path.gamma = 0.7;
    fixtures.push_back(path);
  }

  Timer battery_timer;
  LatticeBattery battery = run_lattice_battery();
  double battery_seconds = battery_timer.seconds();

  criterion_2_magnetization(battery, fixtures, battery_seconds);
  criterion_3_osss(battery, fixtures, battery_seconds);
  criterion_4_subcritical();
  double lambda_hat = criterion_5_gw_bounds();
  criterion_6_supercritical(lambda_hat);
  auto rows = criterion_7_convergence();
  criterion_8_edge_influence(rows);
  criterion_9_ratios();
  criterion_10_domination();
  criterion_11_determinism();

  std::printf("%d of 11 criteria failed\n", g_failures);
  return g_failures;
}
