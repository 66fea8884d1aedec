#include "wrcm/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "wrcm/io.hpp"

namespace wrcm {

using nlohmann::json;

namespace {

struct Issues {
  std::vector<std::string> missing;
  std::vector<std::string> unknown;

  void require(const json& j, const std::string& section,
               const std::vector<std::string>& keys) {
    for (const auto& k : keys)
      if (!j.contains(k)) missing.push_back(section + "." + k);
  }
  void allow_only(const json& j, const std::string& section,
                  const std::vector<std::string>& keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const auto& k : keys)
        if (it.key() == k) ok = true;
      if (!ok) unknown.push_back(section + "." + it.key());
    }
  }
  void raise_if_any() const {
    if (missing.empty() && unknown.empty()) return;
    std::ostringstream os;
    os << "config errors:";
    for (const auto& m : missing) os << " missing " << m << ";";
    for (const auto& u : unknown) os << " unknown " << u << ";";
    throw std::invalid_argument(os.str());
  }
};

ReachFunction parse_reach(const json& j, Issues& iss) {
  ReachFunction r;
  iss.require(j, "model.reach", {"kind"});
  iss.allow_only(j, "model.reach", {"kind", "scale"});
  if (!j.contains("kind")) return r;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity")
    r.kind = ReachKind::identity;
  else if (kind == "constant")
    r.kind = ReachKind::constant;
  else if (kind == "scaled")
    r.kind = ReachKind::scaled;
  else if (kind == "log1p")
    r.kind = ReachKind::log1p;
  else
    throw std::invalid_argument("config: unknown reach.kind '" + kind + "'");
  if (j.contains("scale")) r.scale = j.at("scale").get<double>();
  return r;
}

AdjacencySpec parse_adjacency(const json& j, int dimension, Issues& iss) {
  iss.require(j, "model.adjacency", {"kind"});
  if (!j.contains("kind")) {
    iss.raise_if_any();
  }
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "disk") {
    iss.allow_only(j, "model.adjacency", {"kind", "radius"});
    double radius = j.value("radius", 1.0);
    return AdjacencySpec::make_disk(dimension, radius);
  }
  if (kind == "inverse_power") {
    iss.allow_only(j, "model.adjacency", {"kind", "eta"});
    return AdjacencySpec::make_inverse_power(dimension, j.value("eta", 3.0));
  }
  if (kind == "rational_decay") {
    iss.allow_only(j, "model.adjacency", {"kind", "eta"});
    return AdjacencySpec::make_rational_decay(dimension, j.value("eta", 1.0));
  }
  if (kind == "weighted_reach") {
    iss.allow_only(j, "model.adjacency", {"kind", "eta"});
    return AdjacencySpec::make_weighted_reach(dimension, j.value("eta", 3.0));
  }
  if (kind == "tabulated") {
    iss.allow_only(j, "model.adjacency",
                   {"kind", "r_grid", "a_grid", "values", "weighted"});
    TabulatedGrid g;
    g.r = j.at("r_grid").get<std::vector<double>>();
    g.a = j.value("a_grid", std::vector<double>{1.0});
    g.values = j.at("values").get<std::vector<double>>();
    bool weighted = j.value("weighted", g.a.size() > 1);
    return AdjacencySpec::make_tabulated(dimension, std::move(g), weighted);
  }
  throw std::invalid_argument("config: unknown adjacency.kind '" + kind + "'");
}

WeightDistribution parse_weights(const json& j, Issues& iss) {
  iss.require(j, "model.weights", {"kind"});
  if (!j.contains("kind")) iss.raise_if_any();
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "point_mass") {
    iss.allow_only(j, "model.weights", {"kind"});
    return WeightDistribution::point_mass();
  }
  if (kind == "pareto") {
    iss.allow_only(j, "model.weights", {"kind", "alpha", "m_max"});
    iss.require(j, "model.weights", {"alpha"});
    std::optional<double> m_max;
    if (j.contains("m_max")) m_max = j.at("m_max").get<double>();
    return WeightDistribution::pareto(j.value("alpha", 2.0), m_max);
  }
  if (kind == "discrete") {
    iss.allow_only(j, "model.weights", {"kind", "atoms"});
    iss.require(j, "model.weights", {"atoms"});
    std::vector<std::pair<double, double>> atoms;
    if (j.contains("atoms"))
      for (const auto& a : j.at("atoms"))
        atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    return WeightDistribution::discrete(std::move(atoms));
  }
  throw std::invalid_argument("config: unknown weights.kind '" + kind + "'");
}

}  // namespace

double RunConfig::scalar(const std::string& key,
                         std::optional<double> fallback) const {
  auto it = experiment_scalars.find(key);
  if (it != experiment_scalars.end()) return it->second;
  if (fallback) return *fallback;
  throw std::invalid_argument("config: missing experiment." + key);
}

std::vector<double> RunConfig::list(
    const std::string& key, std::optional<std::vector<double>> fallback) const {
  auto it = experiment_lists.find(key);
  if (it != experiment_lists.end()) return it->second;
  if (fallback) return *fallback;
  throw std::invalid_argument("config: missing experiment." + key);
}

bool RunConfig::has(const std::string& key) const {
  return experiment_scalars.count(key) || experiment_lists.count(key);
}

RunConfig parse_config(const std::string& text, const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument("config: invalid JSON in " + source_name +
                                ": " + e.what());
  }
  Issues iss;
  iss.require(j, "", {"model"});
  iss.allow_only(j, "", {"model", "experiment", "output", "seed", "note"});
  iss.raise_if_any();

  const json& jm = j.at("model");
  iss.require(jm, "model",
              {"dimension", "intensity", "box_half_width", "adjacency",
               "weights"});
  iss.allow_only(jm, "model",
                 {"dimension", "intensity", "box_half_width", "adjacency",
                  "weights", "reach", "note"});
  iss.raise_if_any();

  RunConfig cfg;
  cfg.source_path = source_name;
  int dimension = jm.at("dimension").get<int>();
  cfg.model.adjacency = parse_adjacency(jm.at("adjacency"), dimension, iss);
  cfg.model.weights = parse_weights(jm.at("weights"), iss);
  cfg.model.intensity = jm.at("intensity").get<double>();
  cfg.model.box_half_width = jm.at("box_half_width").get<double>();
  if (jm.contains("reach"))
    cfg.model.adjacency.reach = parse_reach(jm.at("reach"), iss);
  iss.raise_if_any();
  cfg.model.validate();

  if (j.contains("seed"))
    cfg.seed = rng::Seed128::from_string(j.at("seed").get<std::string>());

  if (j.contains("experiment")) {
    for (auto it = j.at("experiment").begin(); it != j.at("experiment").end();
         ++it) {
      if (it.value().is_array())
        cfg.experiment_lists[it.key()] =
            it.value().get<std::vector<double>>();
      else if (it.value().is_number())
        cfg.experiment_scalars[it.key()] = it.value().get<double>();
      else if (it.value().is_string())
        continue;  // string entries are annotations
      else
        throw std::invalid_argument("config: experiment." + it.key() +
                                    " must be a number, an array, or a note");
    }
  }
  if (j.contains("output")) {
    const json& jo = j.at("output");
    iss.allow_only(jo, "output", {"dir", "format", "note"});
    iss.raise_if_any();
    cfg.output_dir = jo.value("dir", std::string("out"));
    cfg.output_format = jo.value("format", std::string("csv"));
    if (cfg.output_format != "csv" && cfg.output_format != "json")
      throw std::invalid_argument("config: output.format must be csv or json");
  }
  cfg.config_hash = io::hash_bytes(text);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::invalid_argument("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  RunConfig cfg = parse_config(text, path.string());
  return cfg;
}

}  // namespace wrcm
