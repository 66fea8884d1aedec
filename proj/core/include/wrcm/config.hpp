#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wrcm/model.hpp"
#include "wrcm/rng.hpp"

namespace wrcm {

// Parsed run configuration. The file is JSON with three sections:
//   model      dimension, intensity, box_half_width, adjacency{...},
//              weights{...}, optional reach{...}
//   experiment free-form per-command parameters (validated per command)
//   output     dir, format, prefix
// Unknown keys anywhere are rejected; missing keys are reported in one pass.
struct RunConfig {
  ModelSpec model;
  rng::Seed128 seed{0x5eed, 0x1};
  std::map<std::string, double> experiment_scalars;
  std::map<std::string, std::vector<double>> experiment_lists;
  std::string output_dir = "out";
  std::string output_format = "csv";
  std::string source_path;
  std::string config_hash;

  double scalar(const std::string& key, std::optional<double> fallback = {}) const;
  std::vector<double> list(const std::string& key,
                           std::optional<std::vector<double>> fallback = {}) const;
  bool has(const std::string& key) const;
};

// throws std::invalid_argument with every missing/unknown key listed
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& source_name);

}  // namespace wrcm
