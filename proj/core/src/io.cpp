#include "wrcm/io.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace wrcm::io {

using nlohmann::json;

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path.string());
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter& CsvWriter::field(const std::string& s) {
  if (in_row_) out_ << ',';
  out_ << s;
  ++in_row_;
  return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }
CsvWriter& CsvWriter::field(uint64_t v) { return field(std::to_string(v)); }
CsvWriter& CsvWriter::field(int64_t v) { return field(std::to_string(v)); }

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw std::logic_error("CsvWriter: row width mismatch");
  out_ << '\n';
  in_row_ = 0;
}

std::string hash_bytes(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return hash_bytes(bytes);
}

namespace {

json manifest_json(const RunManifest& m) {
  json j;
  j["artifact_version"] = m.artifact_version;
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed.to_hex();
  j["samples"] = m.samples;
  j["outputs"] = m.outputs;
  if (!m.parameters_json.empty())
    j["parameters"] = json::parse(m.parameters_json);
  if (m.wall_time_s >= 0) j["wall_time_s"] = m.wall_time_s;
  j["timestamp"] = m.timestamp;
  return j;
}

}  // namespace

std::filesystem::path write_manifest(const std::filesystem::path& out_dir,
                                     const RunManifest& m) {
  std::filesystem::create_directories(out_dir);
  auto path = out_dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << manifest_json(m).dump(2) << '\n';
  return path;
}

void finalize_manifest(const std::filesystem::path& manifest_path,
                       const RunManifest& m) {
  std::ofstream out(manifest_path, std::ios::binary);
  out << manifest_json(m).dump(2) << '\n';
}

void write_configuration_csv(const PointConfiguration& config,
                             const std::filesystem::path& csv_path,
                             const std::filesystem::path& header_path) {
  std::vector<std::string> cols{"id"};
  for (int a = 0; a < config.dim(); ++a)
    cols.push_back("x" + std::to_string(a + 1));
  cols.push_back("weight");
  cols.push_back("augmented");
  CsvWriter csv(csv_path, cols);
  for (PointId i = 0; i < config.size(); ++i) {
    csv.field(static_cast<uint64_t>(i));
    for (int a = 0; a < config.dim(); ++a) csv.field(config.coord(i, a));
    csv.field(config.weight(i));
    csv.field(static_cast<uint64_t>(config.is_augmented(i) ? 1 : 0));
    csv.end_row();
  }
  json j;
  j["seed"] = config.seed().to_hex();
  j["replica"] = config.replica();
  j["model_hash"] = config.model().hash();
  j["points"] = config.size();
  j["poisson_points"] = config.poisson_count();
  j["box_half_width"] = config.box();
  j["dimension"] = config.dim();
  std::ofstream out(header_path, std::ios::binary);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// oracle fixtures
// ---------------------------------------------------------------------------

std::vector<OracleFixture> generate_fixtures(rng::Seed128 seed, int count) {
  std::vector<OracleFixture> out;
  for (int i = 0; i < count; ++i) {
    OracleFixture f;
    f.name = "random_" + std::to_string(i);
    f.tiny = oracle::random_tiny(seed, static_cast<uint64_t>(i), 5,
                                 /*with_ghost=*/true, 0.25 + 0.05 * (i % 5));
    rng::Stream st(seed, rng::Tag::experiment, 1000 + i);
    f.lambda = 0.5 + st.next_unit();
    f.k = 2 + st.next_below(2);
    f.gamma = 0.5 + st.next_unit();
    auto dist = oracle::enumerate(f.tiny, f.lambda);
    f.theta = oracle::exact_theta(dist, f.k);
    f.derivative =
        oracle::exact_derivative(f.tiny, f.k, f.lambda).covariance_sum;
    auto rep = oracle::osss_check_exact(f.tiny, f.lambda, f.k);
    f.osss_lhs = rep.lhs;
    f.osss_rhs = rep.rhs;
    auto rep2 =
        oracle::prop_ghost_lower_bound_exact(f.tiny, f.lambda, f.k, f.gamma);
    f.ghost_lhs = rep2.lhs;
    f.ghost_rhs = rep2.rhs;
    out.push_back(std::move(f));
  }
  return out;
}

void write_fixtures(const std::vector<OracleFixture>& fixtures,
                    const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& f : fixtures) {
    json j;
    j["name"] = f.name;
    j["lambda"] = f.lambda;
    j["k"] = f.k;
    j["gamma"] = f.gamma;
    j["gamma_tilde"] = f.tiny.gamma_tilde;
    j["root"] = f.tiny.root;
    json sites = json::array();
    for (const auto& s : f.tiny.sites) sites.push_back(s.nu);
    j["sites_nu"] = sites;
    json edges = json::array();
    for (const auto& e : f.tiny.edges)
      edges.push_back({e.a, e.b, e.q});
    j["edges"] = edges;
    j["theta"] = f.theta;
    j["derivative"] = f.derivative;
    j["osss_lhs"] = f.osss_lhs;
    j["osss_rhs"] = f.osss_rhs;
    j["ghost_lhs"] = f.ghost_lhs;
    j["ghost_rhs"] = f.ghost_rhs;
    arr.push_back(j);
  }
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << arr.dump(2) << '\n';
}

std::vector<OracleFixture> read_fixtures(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json arr = json::parse(in);
  std::vector<OracleFixture> out;
  for (const auto& j : arr) {
    OracleFixture f;
    f.name = j.at("name").get<std::string>();
    f.lambda = j.at("lambda").get<double>();
    f.k = j.at("k").get<uint64_t>();
    f.gamma = j.at("gamma").get<double>();
    f.tiny.gamma_tilde = j.at("gamma_tilde").get<double>();
    f.tiny.root = j.at("root").get<int>();
    for (const auto& nu : j.at("sites_nu"))
      f.tiny.sites.push_back({nu.get<double>()});
    for (const auto& e : j.at("edges"))
      f.tiny.edges.push_back(
          {e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    f.theta = j.at("theta").get<double>();
    f.derivative = j.at("derivative").get<double>();
    f.osss_lhs = j.at("osss_lhs").get<double>();
    f.osss_rhs = j.at("osss_rhs").get<double>();
    f.ghost_lhs = j.at("ghost_lhs").get<double>();
    f.ghost_rhs = j.at("ghost_rhs").get<double>();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace wrcm::io
