#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "wrcm/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kCli = WRCM_CLI_PATH;
const fs::path kSource = WRCM_SOURCE_DIR;

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run(const std::string& args) {
  fs::path log = fs::temp_directory_path() / "wrcm_cli_test.log";
  std::string cmd = std::string(kCli) + " " + args + " > " + log.string() +
                    " 2>&1";
  int rc = std::system(cmd.c_str());
  std::ifstream in(log);
  std::string out((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  return {WEXITSTATUS(rc), out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("wrcm_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("config schema: missing and unknown keys in one pass") {
  fs::path d = fresh_dir("schema");
  {
    std::ofstream out(d / "bad.json");
    out << R"({"model": {"dimension": 2, "adjacency": {"kind": "disk"},
               "weights": {"kind": "point_mass"}, "box_half_width": 2.0,
               "typo_key": 1}})";
  }
  auto r = run("bounds --config " + (d / "bad.json").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("missing model.intensity") != std::string::npos);
  CHECK(r.output.find("unknown model.typo_key") != std::string::npos);

  auto missing = run("bounds --config " + (d / "nope.json").string());
  CHECK(missing.exit_code == 1);
}

TEST_CASE("bounds command on the shipped weighted config") {
  fs::path d = fresh_dir("bounds");
  auto r = run("bounds --config " +
               (kSource / "configs/minreach_bounds.json").string() + " --out " +
               d.string());
  CHECK(r.exit_code == 0);
  json j = json::parse(slurp(d / "bounds.json"));
  CHECK(j["a2_ok"] == true);
  CHECK(j["a3_ok"] == true);
  CHECK(j["nb_ok"] == true);
  CHECK(j["emc_finite"] == true);
  double i_inf = j["I_inf"].get<double>();
  double i_sup = j["I_sup"].get<double>();
  CHECK(i_inf > 0);
  CHECK(i_sup >= i_inf);
  // manifest written and every output referenced
  json man = json::parse(slurp(d / "manifest.json"));
  CHECK(man["outputs"].size() >= 1);
  CHECK(man.contains("wall_time_s"));
}

TEST_CASE("render emits a clipped SVG with weight-scaled radii") {
  fs::path d = fresh_dir("render");
  auto r = run("render --config " +
               (kSource / "configs/render_weighted.json").string() + " --out " +
               d.string());
  CHECK(r.exit_code == 0);
  std::string svg = slurp(d / "realization.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("clip-path") != std::string::npos);
  CHECK(svg.find("circle") != std::string::npos);

  // non-weighted realizations use a constant radius
  fs::path d2 = fresh_dir("render2");
  auto r2 = run("render --config " +
                (kSource / "configs/render_nonweighted.json").string() +
                " --out " + d2.string());
  CHECK(r2.exit_code == 0);
  std::string svg2 = slurp(d2 / "realization.svg");
  CHECK(svg2.find("r=\"3.000\"") != std::string::npos);
}

TEST_CASE("tail runs are byte-identical under rerun and flag precedence "
          "holds") {
  fs::path a = fresh_dir("tail_a"), b = fresh_dir("tail_b"),
           c = fresh_dir("tail_c");
  std::string cfg = (kSource / "configs/gilbert_subcritical_tail.json").string();
  std::string common = "tail --config " + cfg + " --samples 800 --seed 0xabc ";
  CHECK(run(common + "--out " + a.string()).exit_code == 0);
  CHECK(run(common + "--out " + b.string()).exit_code == 0);
  CHECK(slurp(a / "tail.csv") == slurp(b / "tail.csv"));
  CHECK(slurp(a / "tail_raw.csv") == slurp(b / "tail_raw.csv"));

  // a different seed changes the raw observables (flags override config)
  CHECK(run("tail --config " + cfg + " --samples 800 --seed 0xdef --out " +
            c.string())
            .exit_code == 0);
  CHECK(slurp(a / "tail_raw.csv") != slurp(c / "tail_raw.csv"));

  // manifest references exactly the produced files
  json man = json::parse(slurp(a / "manifest.json"));
  for (const auto& out : man["outputs"])
    CHECK(fs::exists(a / out.get<std::string>()));
  CHECK(man["seed"] == "0x00000000000000000000000000000abc");
}

TEST_CASE("oracle fixtures regenerate deterministically and verify") {
  fs::path d = fresh_dir("fixtures");
  std::string cfg = (kSource / "configs/render_nonweighted.json").string();
  auto gen = run("oracle-fixtures --config " + cfg + " --seed 0xf1a7 --out " +
                 d.string());
  CHECK(gen.exit_code == 0);
  auto gen2 = run("oracle-fixtures --config " + cfg + " --seed 0xf1a7 --out " +
                  fresh_dir("fixtures2").string());
  CHECK(gen2.exit_code == 0);
  CHECK(slurp(d / "oracle_fixtures.json") ==
        slurp(fs::temp_directory_path() / "wrcm_cli_fixtures2" /
              "oracle_fixtures.json"));

  // shipped fixtures pass the exact inequality checks
  auto verify = run("osss-verify --config " +
                    (kSource / "configs/minreach_bounds.json").string() +
                    " --out " + fresh_dir("verify").string());
  CHECK(verify.exit_code == 0);
}

TEST_CASE("scan produces the critical estimate artifacts") {
  fs::path d = fresh_dir("scan");
  // a small grid keeps this quick; the estimate quality is tested elsewhere
  std::ofstream(d / "scan.json") << R"({
    "model": {"dimension": 2, "intensity": 1.0, "box_half_width": 4.0,
              "adjacency": {"kind": "disk", "radius": 1.0},
              "weights": {"kind": "point_mass"}},
    "experiment": {"samples": 400, "lambda_grid": [0.8, 1.4, 2.2],
                   "L_list": [3.0, 6.0]},
    "output": {"dir": "unused"}
  })";
  auto r = run("scan --config " + (d / "scan.json").string() + " --out " +
               d.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(d / "scan.csv"));
  json j = json::parse(slurp(d / "critical.json"));
  CHECK(j["lambda_hat"].get<double>() > 0.0);
}

TEST_CASE("dominate exits 2 with a failure report when the bound is violated") {
  fs::path d = fresh_dir("dominate");
  // eps above the uniform lower bound trips the precondition -> exit 1
  std::ofstream(d / "bad.json") << R"({
    "model": {"dimension": 2, "intensity": 1.0, "box_half_width": 3.0,
              "adjacency": {"kind": "weighted_reach", "eta": 3.0},
              "weights": {"kind": "pareto", "alpha": 4.5, "m_max": 8.0}},
    "experiment": {"samples": 50, "weight_lo": 2.0, "weight_hi": 4.0,
                   "r2": 3.0, "eps": 0.9},
    "output": {"dir": "unused"}
  })";
  auto bad = run("dominate --config " + (d / "bad.json").string() + " --out " +
                 d.string());
  CHECK(bad.exit_code == 1);

  auto good = run("dominate --config " +
                  (kSource / "configs/minreach_domination.json").string() +
                  " --samples 300 --out " + fresh_dir("dominate2").string());
  CHECK(good.exit_code == 0);
}

TEST_CASE("chi, fit, converge and diagnose-ratios produce their artifacts") {
  fs::path d = fresh_dir("chi");
  auto chi = run("chi --config " +
                 (kSource / "configs/gilbert_subcritical_tail.json").string() +
                 " --samples 500 --out " + d.string());
  CHECK(chi.exit_code == 0);
  CHECK(fs::exists(d / "chi.csv"));
  CHECK(fs::exists(d / "chi_raw.csv"));

  fs::path df = fresh_dir("fit");
  std::ofstream(df / "fit.json") << R"({
    "model": {"dimension": 2, "intensity": 0.2, "box_half_width": 12.0,
              "adjacency": {"kind": "disk", "radius": 1.0},
              "weights": {"kind": "point_mass"}},
    "experiment": {"samples": 20000, "k_min": 3, "k_max": 8},
    "output": {"dir": "unused"}
  })";
  auto fit = run("fit --config " + (df / "fit.json").string() + " --out " +
                 df.string());
  CHECK(fit.exit_code == 0);
  std::string fit_csv = slurp(df / "fit.csv");
  CHECK(fit_csv.find("slope") != std::string::npos);

  // an unattainable window is refused with guidance, exit 1
  auto rejected =
      run("fit --config " +
          (kSource / "configs/gilbert_subcritical_tail.json").string() +
          " --samples 20000 --out " + fresh_dir("fit_rej").string());
  CHECK(rejected.exit_code == 1);
  CHECK(rejected.output.find("increase samples") != std::string::npos);

  fs::path dc = fresh_dir("converge");
  std::ofstream(dc / "conv.json") << R"({
    "model": {"dimension": 2, "intensity": 0.5, "box_half_width": 2.0,
              "adjacency": {"kind": "inverse_power", "eta": 3.0},
              "weights": {"kind": "point_mass"}},
    "experiment": {"samples": 300, "n_list": [0, 1], "k": 3,
                   "gamma_tilde": 0.1},
    "output": {"dir": "unused"}
  })";
  auto conv = run("converge --config " + (dc / "conv.json").string() +
                  " --out " + dc.string());
  CHECK(conv.exit_code == 0);
  CHECK(fs::exists(dc / "converge.csv"));
  CHECK(fs::exists(dc / "converge_raw.csv"));
  std::string lat = slurp(dc / "lattice_tail.csv");
  CHECK(lat.rfind("L,n,lambda,k,theta_hat,stderr,samples,H,seed", 0) == 0);

  fs::path dr = fresh_dir("ratios");
  auto ratios = run("diagnose-ratios --config " +
                    (kSource / "configs/minreach_ratios.json").string() +
                    " --samples 400 --out " + dr.string());
  CHECK(ratios.exit_code == 0);
  CHECK(fs::exists(dr / "ratios.csv"));
  CHECK(fs::exists(dr / "ratios_raw.csv"));
  CHECK(fs::exists(dr / "ratio_fit.json"));
}

TEST_CASE("sample writes the columnar CSV with a JSON header") {
  fs::path d = fresh_dir("sample");
  auto r = run("sample --config " +
               (kSource / "configs/render_weighted.json").string() + " --out " +
               d.string());
  CHECK(r.exit_code == 0);
  std::string csv = slurp(d / "points.csv");
  CHECK(csv.rfind("id,x1,x2,weight,augmented", 0) == 0);
  json hdr = json::parse(slurp(d / "points.json"));
  CHECK(hdr.contains("seed"));
  CHECK(hdr.contains("model_hash"));
  CHECK(hdr["poisson_points"].get<int>() + 1 == hdr["points"].get<int>());
}
