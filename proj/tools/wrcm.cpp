// Command line front end: every subcommand loads a config, runs one
// experiment, and writes raw CSV, aggregate CSV, and a JSON manifest into the
// output directory. Exit codes: 0 success, 1 usage or config error, 2 on
// assertion-style failures (a theorem slack below tolerance), with a
// machine-readable failure.json.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wrcm/config.hpp"
#include "wrcm/estimators.hpp"
#include "wrcm/io.hpp"
#include "wrcm/oracle.hpp"
#include "wrcm/osss.hpp"
#include "wrcm/svg.hpp"
#include "wrcm/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wrcm;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string seed;
  std::string out_dir;
  std::string format;
  int threads = 0;
  uint64_t samples = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "configuration file (JSON)")
        ->required();
    cmd->add_option("--seed", seed, "128-bit run seed (hex 0x... or decimal)");
    cmd->add_option("--threads", threads, "worker thread cap (0 = auto)");
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--format", format, "csv or json (overrides config)");
    cmd->add_option("--samples", samples, "replica count (overrides config)");
  }

  RunConfig load() const {
    RunConfig cfg = load_config(config_path);
    // precedence: flags > config > defaults
    if (!seed.empty()) cfg.seed = rng::Seed128::from_string(seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!format.empty()) cfg.output_format = format;
    if (samples > 0) cfg.experiment_scalars["samples"] = double(samples);
    return cfg;
  }
};

struct Run {
  RunConfig cfg;
  io::RunManifest manifest;
  fs::path dir;
  fs::path manifest_path;
  std::chrono::steady_clock::time_point t0;

  Run(const CommonArgs& args, const std::string& command, json params) {
    cfg = args.load();
    dir = cfg.output_dir;
    fs::create_directories(dir);
    manifest.artifact_version = kVersion;
    manifest.command = command;
    manifest.config_path = cfg.source_path;
    manifest.config_hash = cfg.config_hash;
    manifest.seed = cfg.seed;
    manifest.samples =
        cfg.has("samples") ? uint64_t(cfg.scalar("samples")) : 0;
    manifest.parameters_json = params.dump();
    manifest.timestamp = "";  // never in CSV; manifest carries it
    t0 = std::chrono::steady_clock::now();
    manifest_path = io::write_manifest(dir, manifest);
  }

  fs::path declare(const std::string& name) {
    manifest.outputs.push_back(name);
    return dir / name;
  }

  void finish() {
    manifest.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    io::finalize_manifest(manifest_path, manifest);
  }
};

int fail_assertion(const fs::path& dir, const std::string& what, json detail) {
  json j;
  j["failure"] = what;
  j["detail"] = detail;
  std::ofstream out(dir / "failure.json", std::ios::binary);
  out << j.dump(2) << '\n';
  std::cerr << "ASSERTION FAILURE: " << what << "\n";
  return 2;
}

uint64_t samples_or(const RunConfig& cfg, uint64_t dflt) {
  return cfg.has("samples") ? uint64_t(cfg.scalar("samples")) : dflt;
}

// ---------------------------------------------------------------------------

int cmd_sample(const CommonArgs& args) {
  Run run(args, "sample", {{"replica", 0}});
  auto model = std::make_shared<ModelSpec>(run.cfg.model);
  auto config = sample_ppp_with_origin(model, run.cfg.seed, 0);
  auto csv = run.declare("points.csv");
  auto hdr = run.declare("points.json");
  io::write_configuration_csv(config, csv, hdr);
  run.finish();
  return 0;
}

int cmd_render(const CommonArgs& args) {
  Run run(args, "render", json::object());
  auto model = std::make_shared<ModelSpec>(run.cfg.model);
  auto config = sample_ppp_with_origin(model, run.cfg.seed, 0);
  SvgOptions opts;
  opts.scale_radius_with_weight = run.cfg.model.adjacency.weighted;
  auto path = run.declare("realization.svg");
  write_svg(config, path, opts);
  run.finish();
  return 0;
}

int cmd_tail(const CommonArgs& args) {
  RunConfig cfg = args.load();
  uint64_t k_max = uint64_t(cfg.scalar("k_max", 50));
  uint64_t samples = samples_or(cfg, 10000);
  Run run(args, "tail", {{"k_max", k_max}, {"samples", samples}});
  std::vector<uint32_t> raw;
  TailCurve curve = estimate_tail(run.cfg.model, run.cfg.model.intensity,
                                  run.cfg.model.box_half_width, k_max, samples,
                                  run.cfg.seed, args.threads, &raw);
  {
    io::CsvWriter w(run.declare("tail_raw.csv"), {"replica", "cluster_size"});
    for (size_t i = 0; i < raw.size(); ++i) {
      w.field(uint64_t(i)).field(uint64_t(raw[i]));
      w.end_row();
    }
  }
  {
    io::CsvWriter w(run.declare("tail.csv"),
                    {"L", "lambda", "k", "theta_hat", "stderr", "samples"});
    for (size_t i = 0; i < curve.ks.size(); ++i) {
      w.field(curve.L)
          .field(curve.lambda)
          .field(curve.ks[i])
          .field(curve.theta[i].mean)
          .field(curve.theta[i].se)
          .field(curve.theta[i].samples);
      w.end_row();
    }
  }
  run.finish();
  return 0;
}

int cmd_chi(const CommonArgs& args) {
  RunConfig cfg = args.load();
  uint64_t samples = samples_or(cfg, 10000);
  uint64_t cap = uint64_t(cfg.scalar("size_cap", 1e6));
  Run run(args, "chi", {{"samples", samples}, {"size_cap", cap}});
  std::vector<uint32_t> raw;
  ChiEstimate chi =
      estimate_chi(run.cfg.model, run.cfg.model.intensity,
                   run.cfg.model.box_half_width, samples, run.cfg.seed, cap,
                   args.threads, &raw);
  {
    io::CsvWriter w(run.declare("chi_raw.csv"), {"replica", "cluster_size"});
    for (size_t i = 0; i < raw.size(); ++i) {
      w.field(uint64_t(i)).field(uint64_t(raw[i]));
      w.end_row();
    }
  }
  {
    io::CsvWriter w(
        run.declare("chi.csv"),
        {"lambda", "L", "chi_hat", "stderr", "samples", "cap_fraction"});
    w.field(run.cfg.model.intensity)
        .field(run.cfg.model.box_half_width)
        .field(chi.chi.mean)
        .field(chi.chi.se)
        .field(chi.chi.samples)
        .field(chi.cap_fraction);
    w.end_row();
  }
  run.finish();
  if (chi.divergence_warning)
    std::cerr << "warning: " << chi.cap_fraction * 100
              << "% of replicas hit the size cap (intensity near or above "
                 "lambda_T?)\n";
  return 0;
}

int cmd_scan(const CommonArgs& args) {
  RunConfig cfg = args.load();
  auto grid = cfg.list("lambda_grid");
  auto Ls = cfg.list("L_list");
  uint64_t samples = samples_or(cfg, 2000);
  Run run(args, "scan",
          {{"lambda_grid", grid}, {"L_list", Ls}, {"samples", samples}});
  CriticalEstimate crit =
      locate_critical(run.cfg.model, grid, Ls, samples, run.cfg.seed,
                      args.threads, 1000, /*record_raw=*/true);
  {
    io::CsvWriter w(run.declare("scan_raw.csv"),
                    {"L", "lambda", "replica", "touched"});
    for (size_t li = 0; li < crit.L_list.size(); ++li)
      for (size_t i = 0; i < crit.lambda_grid.size(); ++i)
        for (size_t rep = 0; rep < crit.raw[li][i].size(); ++rep) {
          w.field(crit.L_list[li])
              .field(crit.lambda_grid[i])
              .field(uint64_t(rep))
              .field(uint64_t(crit.raw[li][i][rep]));
          w.end_row();
        }
  }
  {
    io::CsvWriter w(run.declare("scan.csv"),
                    {"L", "lambda", "reach_prob", "stderr", "samples"});
    for (size_t li = 0; li < crit.L_list.size(); ++li)
      for (size_t i = 0; i < crit.lambda_grid.size(); ++i) {
        w.field(crit.L_list[li])
            .field(crit.lambda_grid[i])
            .field(crit.reach[li][i].mean)
            .field(crit.reach[li][i].se)
            .field(crit.reach[li][i].samples);
        w.end_row();
      }
  }
  {
    json j;
    j["lambda_hat"] = crit.lambda_hat;
    j["ci_lo"] = crit.ci_lo;
    j["ci_hi"] = crit.ci_hi;
    j["sd"] = crit.sd;
    std::ofstream out(run.declare("critical.json"), std::ios::binary);
    out << j.dump(2) << '\n';
  }
  run.finish();
  return 0;
}

int cmd_fit(const CommonArgs& args) {
  RunConfig cfg = args.load();
  // the fit window may be narrower than the sampled curve
  uint64_t k_max = uint64_t(cfg.scalar("k_max", 40));
  uint64_t k_min = uint64_t(cfg.scalar("fit_k_min", cfg.scalar("k_min", 5)));
  uint64_t k_fit = uint64_t(cfg.scalar("fit_k_max", double(k_max)));
  uint64_t samples = samples_or(cfg, 100000);
  Run run(args, "fit",
          {{"k_min", k_min}, {"k_max", k_fit}, {"samples", samples}});
  TailCurve curve = estimate_tail(run.cfg.model, run.cfg.model.intensity,
                                  run.cfg.model.box_half_width, k_max, samples,
                                  run.cfg.seed, args.threads);
  RateFit fit = fit_exponential_rate(curve, k_min, k_fit);
  {
    io::CsvWriter w(run.declare("fit.csv"),
                    {"k_min", "k_max", "slope", "intercept", "r2", "slope_se"});
    w.field(k_min).field(k_fit).field(fit.slope).field(fit.intercept).field(
        fit.r2);
    w.field(fit.slope_se);
    w.end_row();
  }
  run.finish();
  return 0;
}

int cmd_converge(const CommonArgs& args) {
  RunConfig cfg = args.load();
  auto nlist_d = cfg.list("n_list", std::vector<double>{0, 1, 2, 3});
  std::vector<int> n_list(nlist_d.begin(), nlist_d.end());
  uint64_t k = uint64_t(cfg.scalar("k", 3));
  double gamma_tilde = cfg.scalar("gamma_tilde", 0.1);
  uint64_t samples = samples_or(cfg, 4000);
  int L = int(cfg.model.box_half_width);
  Run run(args, "converge",
          {{"n_list", nlist_d},
           {"k", k},
           {"gamma_tilde", gamma_tilde},
           {"samples", samples}});
  int ei_cap = int(cfg.scalar("edge_influence_n_cap", 3));
  auto rows = convergence_study(run.cfg.model, run.cfg.model.intensity, L,
                                n_list, k, gamma_tilde, samples, run.cfg.seed,
                                args.threads, ei_cap, /*record_raw=*/true);
  {
    io::CsvWriter w(run.declare("converge_raw.csv"),
                    {"n", "replica", "lattice_ge_k", "continuum_ge_k"});
    for (const auto& r : rows)
      for (size_t rep = 0; rep < r.raw.size(); ++rep) {
        w.field(int64_t(r.n))
            .field(uint64_t(rep))
            .field(uint64_t(r.raw[rep] & 1))
            .field(uint64_t((r.raw[rep] >> 1) & 1));
        w.end_row();
      }
  }
  {
    // lattice experiment rows in the standard column order
    io::CsvWriter w(run.declare("lattice_tail.csv"),
                    {"L", "n", "lambda", "k", "theta_hat", "stderr", "samples",
                     "H", "seed"});
    for (const auto& r : rows) {
      w.field(int64_t(L))
          .field(int64_t(r.n))
          .field(run.cfg.model.intensity)
          .field(k)
          .field(r.theta_lattice.mean)
          .field(r.theta_lattice.se)
          .field(r.theta_lattice.samples)
          .field(r.H)
          .field(run.cfg.seed.to_hex());
      w.end_row();
    }
  }
  {
    io::CsvWriter w(
        run.declare("converge.csv"),
        {"n", "theta_lattice", "theta_lattice_se", "theta_continuum",
         "theta_continuum_se", "abs_diff", "diff_se", "edge_influence",
         "edge_influence_se", "russo_fd", "russo_mc", "russo_gap",
         "eligible_replicas", "equal_replicas"});
    for (const auto& r : rows) {
      w.field(int64_t(r.n))
          .field(r.theta_lattice.mean)
          .field(r.theta_lattice.se)
          .field(r.theta_continuum.mean)
          .field(r.theta_continuum.se)
          .field(r.diff.mean)
          .field(r.diff.se)
          .field(r.edge_influence.mean)
          .field(r.edge_influence.se)
          .field(r.russo_fd)
          .field(r.russo_mc)
          .field(r.russo_gap)
          .field(r.eligible_replicas)
          .field(r.equal_replicas);
      w.end_row();
    }
  }
  run.finish();
  for (const auto& r : rows)
    if (r.equal_replicas != r.eligible_replicas)
      return fail_assertion(
          run.dir, "coupled lattice/continuum cluster mismatch",
          {{"n", r.n},
           {"eligible", r.eligible_replicas},
           {"equal", r.equal_replicas}});
  return 0;
}

int cmd_osss_verify(const CommonArgs& args) {
  RunConfig cfg = args.load();
  // the fixtures file sits next to the config by default
  fs::path fp = fs::path(cfg.source_path).parent_path() /
                "fixtures/oracle_fixtures.json";
  if (!fs::exists(fp)) fp = "configs/fixtures/oracle_fixtures.json";
  Run run(args, "osss-verify", {{"fixtures", fp.string()}});
  auto fixtures = io::read_fixtures(fp);
  fs::create_directories(run.dir / "coordinate_tables");
  io::CsvWriter w(run.declare("osss_verify.csv"),
                  {"fixture", "osss_lhs", "osss_rhs", "osss_slack",
                   "ghost_lhs", "ghost_rhs", "ghost_slack"});
  bool ok = true;
  json bad = json::array();
  json reports = json::array();
  for (const auto& f : fixtures) {
    auto rep = oracle::osss_check_exact(f.tiny, f.lambda, f.k);
    auto rep2 =
        oracle::prop_ghost_lower_bound_exact(f.tiny, f.lambda, f.k, f.gamma);
    std::string table_rel = "coordinate_tables/" + f.name + ".csv";
    {
      io::CsvWriter tw(run.declare(table_rel),
                       {"coordinate", "kind", "delta", "influence"});
      for (const auto& c : rep.table) {
        const char* kind = c.coord.kind == Coordinate::Kind::vertex  ? "vertex"
                           : c.coord.kind == Coordinate::Kind::copy ? "copy"
                                                                    : "edge";
        tw.field(c.coord.label()).field(kind).field(c.delta).field(c.infl);
        tw.end_row();
      }
    }
    json jr;
    jr["fixture"] = f.name;
    jr["osss"] = {{"lhs", rep.lhs}, {"rhs", rep.rhs}, {"slack", rep.slack}};
    jr["ghost"] = {
        {"lhs", rep2.lhs}, {"rhs", rep2.rhs}, {"slack", rep2.slack}};
    jr["coordinate_table"] = table_rel;
    reports.push_back(jr);
    w.field(f.name)
        .field(rep.lhs)
        .field(rep.rhs)
        .field(rep.slack)
        .field(rep2.lhs)
        .field(rep2.rhs)
        .field(rep2.slack);
    w.end_row();
    if (rep.slack < -1e-12 || rep2.slack < -1e-12) {
      ok = false;
      bad.push_back(f.name);
    }
  }
  {
    std::ofstream out(run.declare("osss_verify.json"), std::ios::binary);
    out << reports.dump(2) << '\n';
  }
  run.finish();
  if (!ok)
    return fail_assertion(run.dir, "inequality slack below -1e-12",
                          {{"fixtures", bad}});
  return 0;
}

int cmd_oracle_fixtures(const CommonArgs& args) {
  RunConfig cfg = args.load();
  int count = int(cfg.scalar("count", 12));
  Run run(args, "oracle-fixtures", {{"count", count}});
  auto fixtures = io::generate_fixtures(run.cfg.seed, count);
  auto path = run.declare("oracle_fixtures.json");
  io::write_fixtures(fixtures, path);
  run.finish();
  return 0;
}

int cmd_bounds(const CommonArgs& args) {
  Run run(args, "bounds", json::object());
  const ModelSpec& m = run.cfg.model;
  SampleGrid grid;
  for (int i = 0; i <= 50; ++i) grid.r.push_back(0.1 + 0.1 * i);
  double cap = m.weight_cap();
  for (int i = 0; i <= 8; ++i)
    grid.a.push_back(1.0 + (cap - 1.0) * i / 8.0);
  auto rep = check_assumptions(m.adjacency, grid);

  std::vector<double> a_grid;
  for (int i = 0; i <= 16; ++i)
    a_grid.push_back(std::exp(std::log(cap) * i / 16.0));
  NbBounds nb = nb_bounds(m.adjacency, m.weights, a_grid);
  json j;
  j["a1_ok"] = rep.a1_ok;
  j["a2_ok"] = rep.a2_ok;
  j["a3_ok"] = rep.a3_ok;
  j["violations"] = rep.violations.size();
  j["I_inf"] = nb.I_inf;
  j["I_sup"] = nb.I_sup;
  j["nb_ok"] = nb.ok;
  j["diverged"] = nb.diverged;
  j["grid_certified_only"] = nb.grid_certified_only;
  if (nb.ok) {
    GwBounds gw = gw_bounds(nb, m.adjacency.dimension, m.intensity);
    j["lambda_T_lower"] = gw.lambda_T_lower;
    j["chi_upper"] = std::isfinite(gw.chi_upper) ? json(gw.chi_upper)
                                                 : json("inf");
    j["branching_mean"] = gw.branching_mean;
  }
  if (m.adjacency.reach.present()) {
    RunConfig cfg = args.load();
    double C = cfg.scalar("emc_C", 0.1);
    double eps = cfg.scalar("emc_eps", 0.5);
    double cutoff = cfg.scalar("emc_cutoff", 1e4);
    EmcReport emc = emc_check(m.adjacency, m.weights, C, eps, cutoff);
    j["emc_finite"] = emc.finite;
    j["emc_inconclusive"] = emc.inconclusive;
    j["emc_partial_sum"] = emc.partial_sum;
  }
  std::ofstream out(run.declare("bounds.json"), std::ios::binary);
  out << j.dump(2) << '\n';
  run.finish();
  return 0;
}

int cmd_diagnose_ratios(const CommonArgs& args) {
  RunConfig cfg = args.load();
  auto m_list = cfg.list("m_list", std::vector<double>{1, 2, 4, 8});
  uint64_t k = uint64_t(cfg.scalar("k", 3));
  double gamma_tilde = cfg.scalar("gamma_tilde", 0.1);
  int L = int(cfg.scalar("lattice_L", 2));
  int n = int(cfg.scalar("lattice_n", 2));
  uint64_t samples = samples_or(cfg, 5000);
  Run run(args, "diagnose-ratios",
          {{"m_list", m_list},
           {"k", k},
           {"gamma_tilde", gamma_tilde},
           {"lattice_L", L},
           {"lattice_n", n},
           {"samples", samples}});
  auto diag = ratio_diagnostics(run.cfg.model, run.cfg.model.intensity,
                                gamma_tilde, m_list, k, L, n, samples,
                                run.cfg.seed, args.threads,
                                /*record_raw=*/true);
  {
    io::CsvWriter w(run.declare("ratios_raw.csv"),
                    {"m", "replica", "magnetization", "pivotal_count"});
    for (size_t i = 0; i < m_list.size(); ++i)
      for (size_t rep = 0; rep < diag.raw_magnetization[i].size(); ++rep) {
        w.field(m_list[i])
            .field(uint64_t(rep))
            .field(diag.raw_magnetization[i][rep])
            .field(uint64_t(diag.raw_pivotal_counts[i][rep]));
        w.end_row();
      }
  }
  io::CsvWriter w(run.declare("ratios.csv"),
                  {"m", "reach_pow_d", "delta_ratio", "delta_ratio_se",
                   "pivotal_ratio", "pivotal_ratio_se"});
  for (const auto& r : diag.rows) {
    w.field(r.m)
        .field(r.reach_pow_d)
        .field(r.delta_ratio.mean)
        .field(r.delta_ratio.se)
        .field(r.pivotal_ratio.mean)
        .field(r.pivotal_ratio.se);
    w.end_row();
  }
  json j;
  j["delta_slope"] = diag.delta_slope;
  j["pivotal_slope"] = diag.pivotal_slope;
  std::ofstream out(run.declare("ratio_fit.json"), std::ios::binary);
  out << j.dump(2) << '\n';
  run.finish();
  return 0;
}

int cmd_dominate(const CommonArgs& args) {
  RunConfig cfg = args.load();
  double b_lo = cfg.scalar("weight_lo", 2.0);
  double b_hi = cfg.scalar("weight_hi", 4.0);
  double r2 = cfg.scalar("r2", 1.0);
  double eps = cfg.scalar("eps",
                          cfg.model.adjacency.eval(r2, b_lo, b_lo));
  uint64_t samples = samples_or(cfg, 10000);
  Run run(args, "dominate",
          {{"weight_lo", b_lo},
           {"weight_hi", b_hi},
           {"r2", r2},
           {"eps", eps},
           {"samples", samples}});
  auto rep = domination_check(run.cfg.model, b_lo, b_hi, r2, eps,
                              run.cfg.model.intensity,
                              run.cfg.model.box_half_width, samples,
                              run.cfg.seed, args.threads, /*record_raw=*/true);
  {
    io::CsvWriter w(run.declare("dominate_raw.csv"),
                    {"replica", "benchmark_cluster", "restricted_cluster"});
    for (size_t i = 0; i < rep.raw_benchmark_sizes.size(); ++i) {
      w.field(uint64_t(i))
          .field(uint64_t(rep.raw_benchmark_sizes[i]))
          .field(uint64_t(rep.raw_restricted_sizes[i]));
      w.end_row();
    }
  }
  io::CsvWriter w(run.declare("dominate.csv"),
                  {"replicas", "edge_violations", "cluster_violations",
                   "lambda_restricted", "point_count_z", "eps"});
  w.field(rep.replicas)
      .field(rep.edge_violations)
      .field(rep.cluster_violations)
      .field(rep.lambda_restricted)
      .field(rep.point_count_z)
      .field(rep.eps);
  w.end_row();
  run.finish();
  if (rep.edge_violations || rep.cluster_violations)
    return fail_assertion(run.dir, "stochastic domination violated",
                          {{"edge_violations", rep.edge_violations},
                           {"cluster_violations", rep.cluster_violations}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Simulation and verification laboratory for weighted random connection "
      "models"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string command;
  struct Cmd {
    const char* name;
    const char* help;
    int (*fn)(const CommonArgs&);
  };
  const Cmd cmds[] = {
      {"sample", "sample one marked point configuration", cmd_sample},
      {"render", "render a realization to SVG", cmd_render},
      {"tail", "estimate the cluster-size tail curve", cmd_tail},
      {"chi", "estimate the expected cluster size", cmd_chi},
      {"scan", "boundary-reach scan and critical-intensity estimate",
       cmd_scan},
      {"fit", "exponential decay-rate fit of the tail curve", cmd_fit},
      {"converge", "discretization convergence study", cmd_converge},
      {"osss-verify", "exact inequality checks on the shipped fixtures",
       cmd_osss_verify},
      {"oracle-fixtures", "regenerate the oracle fixture file",
       cmd_oracle_fixtures},
      {"bounds", "assumption report and analytic bounds", cmd_bounds},
      {"diagnose-ratios", "weight-comparability ratio diagnostics",
       cmd_diagnose_ratios},
      {"dominate", "coupled stochastic-domination check", cmd_dominate},
  };
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    args.attach(sub);
    sub->callback([&command, name = std::string(c.name)]() { command = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& c : cmds)
      if (command == c.name) return c.fn(args);
    std::cerr << "unknown command\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const BracketError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
