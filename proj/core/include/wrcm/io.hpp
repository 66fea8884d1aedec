#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wrcm/continuum.hpp"
#include "wrcm/oracle.hpp"
#include "wrcm/rng.hpp"

namespace wrcm::io {

// Locale-independent CSV writer with a fixed column order and %.17g doubles;
// output bytes depend only on the data.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& columns);

  CsvWriter& field(const std::string& s);
  CsvWriter& field(double v);
  CsvWriter& field(uint64_t v);
  CsvWriter& field(int64_t v);
  CsvWriter& field(int v) { return field(static_cast<int64_t>(v)); }
  void end_row();

 private:
  std::ofstream out_;
  size_t columns_ = 0;
  size_t in_row_ = 0;
};

std::string format_double(double v);

// 64-bit FNV-1a of a file's bytes, hex encoded
std::string hash_file(const std::filesystem::path& path);
std::string hash_bytes(const std::string& bytes);

struct RunManifest {
  std::string artifact_version;
  std::string command;
  std::string config_path;
  std::string config_hash;
  rng::Seed128 seed;
  uint64_t samples = 0;
  std::vector<std::string> outputs;
  std::string parameters_json;  // free-form parameter echo
  double wall_time_s = -1.0;    // filled by finalize
  std::string timestamp;
};

// written before any result file; finalize rewrites it with the wall time
std::filesystem::path write_manifest(const std::filesystem::path& out_dir,
                                     const RunManifest& m);
void finalize_manifest(const std::filesystem::path& manifest_path,
                       const RunManifest& m);

// configuration serialization: columnar CSV plus a JSON header
void write_configuration_csv(const PointConfiguration& config,
                             const std::filesystem::path& csv_path,
                             const std::filesystem::path& header_path);

// oracle fixtures
struct OracleFixture {
  std::string name;
  oracle::TinyInstance tiny;
  double lambda = 1.0;
  uint64_t k = 2;
  double gamma = 1.0;  // ghost strength for the inequality fixtures
  // frozen expectations
  double theta = 0.0;
  double derivative = 0.0;
  double osss_lhs = 0.0;
  double osss_rhs = 0.0;
  double ghost_lhs = 0.0;
  double ghost_rhs = 0.0;
};

std::vector<OracleFixture> generate_fixtures(rng::Seed128 seed, int count);
void write_fixtures(const std::vector<OracleFixture>& fixtures,
                    const std::filesystem::path& path);
std::vector<OracleFixture> read_fixtures(const std::filesystem::path& path);

}  // namespace wrcm::io
