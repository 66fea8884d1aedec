#include "wrcm/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wrcm {

PointConfiguration::PointConfiguration(std::shared_ptr<const ModelSpec> model,
                                       rng::Seed128 seed, uint64_t replica)
    : model_(std::move(model)),
      seed_(seed),
      replica_(replica),
      dim_(model_->adjacency.dimension),
      box_(model_->box_half_width),
      edge_hash_(seed, rng::Tag::edge, replica),
      thin_hash_(seed, rng::Tag::thin, replica) {}

double PointConfiguration::dist(PointId i, PointId j) const {
  const double* pi = coords_.data() + static_cast<size_t>(i) * dim_;
  const double* pj = coords_.data() + static_cast<size_t>(j) * dim_;
  double s = 0;
  for (int a = 0; a < dim_; ++a) {
    double d = pi[a] - pj[a];
    s += d * d;
  }
  return std::sqrt(s);
}

double PointConfiguration::min_face_distance(PointId i) const {
  double best = box_;
  for (int a = 0; a < dim_; ++a) {
    double x = coord(i, a);
    best = std::min(best, std::min(box_ - x, x + box_));
  }
  return best;
}

bool PointConfiguration::edge_present(PointId i, PointId j) const {
  if (i == j) return false;
  double phi = model_->adjacency.eval(dist(i, j), weights_[i], weights_[j]);
  if (phi <= 0.0) return false;
  if (phi >= 1.0) return true;
  return edge_hash_.at_pair(i, j) < phi;
}

MarkedPoint PointConfiguration::point(PointId i) const {
  MarkedPoint p;
  p.position.assign(position(i).begin(), position(i).end());
  p.weight = weights_[i];
  p.id = i;
  p.augmented = is_augmented(i);
  return p;
}

PointConfiguration sample_ppp(std::shared_ptr<const ModelSpec> model,
                              rng::Seed128 seed, uint64_t replica) {
  model->validate();
  PointConfiguration cfg(std::move(model), seed, replica);
  const ModelSpec& m = cfg.model();
  rng::Stream stream(seed, rng::Tag::points, replica);
  double volume = std::pow(2.0 * m.box_half_width, m.adjacency.dimension);
  uint64_t n = stream.poisson(m.intensity * volume);
  cfg.coords_.reserve(n * cfg.dim_);
  cfg.weights_.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    for (int a = 0; a < cfg.dim_; ++a)
      cfg.coords_.push_back((2.0 * stream.next_unit() - 1.0) * cfg.box_);
    cfg.weights_.push_back(m.weights.sample(stream));
  }
  cfg.n_poisson_ = static_cast<PointId>(n);
  return cfg;
}

PointConfiguration augment(
    const PointConfiguration& config,
    const std::vector<std::pair<std::vector<double>, double>>& points) {
  PointConfiguration out = config;
  for (const auto& [pos, w] : points) {
    if (static_cast<int>(pos.size()) != out.dim_)
      throw std::invalid_argument("augment: wrong dimension");
    for (double x : pos)
      if (std::fabs(x) > out.box_)
        throw std::invalid_argument("augment: position outside box");
    if (w < 1.0) throw std::invalid_argument("augment: weight < 1");
    for (PointId i = 0; i < out.size(); ++i) {
      bool same = out.weight(i) == w;
      for (int a = 0; same && a < out.dim_; ++a)
        same = out.coord(i, a) == pos[a];
      if (same)
        throw std::invalid_argument("augment: duplicate position and weight");
    }
    out.coords_.insert(out.coords_.end(), pos.begin(), pos.end());
    out.weights_.push_back(w);
  }
  return out;
}

PointConfiguration sample_ppp_with_origin(std::shared_ptr<const ModelSpec> model,
                                          rng::Seed128 seed, uint64_t replica) {
  PointConfiguration cfg = sample_ppp(std::move(model), seed, replica);
  std::vector<double> origin(cfg.dim(), 0.0);
  return augment(cfg, {{origin, 1.0}});
}

// ---------------------------------------------------------------------------
// CellGrid
// ---------------------------------------------------------------------------

CellGrid::CellGrid(const PointConfiguration& config, double cell_size)
    : dim_(config.dim()), origin_(-config.box()), cell_(cell_size) {
  double width = 2.0 * config.box();
  per_axis_ = std::max(1, static_cast<int>(std::floor(width / cell_)));
  // keep the table small for tiny cells
  while (std::pow(static_cast<double>(per_axis_), dim_) > 4.0e6 &&
         per_axis_ > 1)
    per_axis_ /= 2;
  cell_ = width / per_axis_;

  size_t ncells = 1;
  for (int a = 0; a < dim_; ++a) ncells *= static_cast<size_t>(per_axis_);
  std::vector<uint32_t> counts(ncells + 1, 0);
  auto cell_of = [&](PointId i) {
    size_t c = 0;
    for (int a = 0; a < dim_; ++a) {
      int k = cell_coord(config.coord(i, a));
      c = c * per_axis_ + static_cast<size_t>(k);
    }
    return c;
  };
  PointId n = config.size();
  for (PointId i = 0; i < n; ++i) ++counts[cell_of(i) + 1];
  for (size_t c = 1; c <= ncells; ++c) counts[c] += counts[c - 1];
  starts_ = counts;
  ids_.resize(n);
  std::vector<uint32_t> cursor(starts_.begin(), starts_.end() - 1);
  for (PointId i = 0; i < n; ++i) ids_[cursor[cell_of(i)]++] = i;
}

int CellGrid::cell_coord(double x) const {
  double t = (x - origin_) / cell_;
  int k = static_cast<int>(std::floor(t));
  return std::clamp(k, 0, per_axis_ - 1);
}

size_t CellGrid::flat_index(const std::vector<int>& idx) const {
  size_t c = 0;
  for (int a = 0; a < dim_; ++a) c = c * per_axis_ + static_cast<size_t>(idx[a]);
  return c;
}

// ---------------------------------------------------------------------------
// neighbor search and clusters
// ---------------------------------------------------------------------------

namespace {

bool point_active(const ClusterOptions& opts, const PointConfiguration& cfg,
                  PointId i) {
  if (!opts.active || cfg.is_augmented(i)) return true;
  return (*opts.active)[i] != 0;
}

}  // namespace

std::vector<PointId> neighbors(const PointConfiguration& config, PointId id) {
  if (id >= config.size()) throw std::out_of_range("neighbors: bad id");
  const ModelSpec& m = config.model();
  std::vector<PointId> out;
  auto support = m.adjacency.support_radius(m.weight_cap());
  if (support && config.size() > 64) {
    double query_radius =
        m.adjacency.support_radius(config.weight(id)).value_or(*support);
    CellGrid grid(config, std::max(*support, 1e-9));
    grid.for_each_near(config.position(id), query_radius, [&](PointId j) {
      if (j != id && config.edge_present(id, j)) out.push_back(j);
    });
  } else {
    for (PointId j = 0; j < config.size(); ++j)
      if (j != id && config.edge_present(id, j)) out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double boundary_margin(const ModelSpec& model) {
  return model.adjacency.effective_range(model.weight_cap());
}

namespace {

ClusterResult bfs_cluster(const PointConfiguration& config, PointId start,
                          const ClusterOptions& opts) {
  const ModelSpec& m = config.model();
  const PointId n = config.size();
  double margin = boundary_margin(m) + 1e-9;

  std::vector<uint8_t> visited(n, 0);
  std::vector<PointId> frontier{start}, next;
  visited[start] = 1;

  ClusterResult res;
  res.size = 1;
  if (opts.record_members) res.members.push_back(start);
  if (opts.record_generations) res.generations.push_back(1);
  res.touches_boundary = config.min_face_distance(start) <= margin;

  auto support = m.adjacency.support_radius(m.weight_cap());
  std::unique_ptr<CellGrid> grid;
  if (support && n > 64)
    grid = std::make_unique<CellGrid>(config, std::max(*support, 1e-9));

  bool done = false;
  while (!frontier.empty() && !done) {
    next.clear();
    for (PointId cur : frontier) {
      auto visit = [&](PointId j) {
        if (visited[j] || !point_active(opts, config, j)) return;
        if (!config.edge_present(cur, j)) return;
        visited[j] = 1;
        next.push_back(j);
        res.size += 1;
        if (opts.record_members) res.members.push_back(j);
        if (config.min_face_distance(j) <= margin) res.touches_boundary = true;
        if (res.size >= opts.size_cap) {
          res.capped = true;
          done = true;
        }
      };
      if (grid) {
        double qr = m.adjacency.support_radius(config.weight(cur))
                        .value_or(*support);
        grid->for_each_near(config.position(cur), qr, [&](PointId j) {
          if (!done) visit(j);
        });
      } else {
        for (PointId j = 0; j < n && !done; ++j)
          if (j != cur) visit(j);
      }
      if (done) break;
      if (opts.stop_at_boundary && res.touches_boundary) {
        done = true;
        break;
      }
    }
    if (!next.empty() && opts.record_generations)
      res.generations.push_back(next.size());
    frontier.swap(next);
  }
  if (opts.record_members) std::sort(res.members.begin(), res.members.end());
  return res;
}

}  // namespace

ClusterResult cluster_of_point(const PointConfiguration& config, PointId start,
                               const ClusterOptions& opts) {
  if (start >= config.size())
    throw std::out_of_range("cluster_of_point: bad id");
  return bfs_cluster(config, start, opts);
}

ClusterResult cluster_of_origin(const PointConfiguration& config,
                                const ClusterOptions& opts) {
  // the origin is the first augmented point by convention
  if (config.poisson_count() == config.size())
    throw std::invalid_argument("cluster_of_origin: no augmented origin");
  return bfs_cluster(config, config.poisson_count(), opts);
}

std::vector<ClusterResult> all_clusters(const PointConfiguration& config) {
  const ModelSpec& m = config.model();
  const PointId n = config.size();
  std::vector<PointId> parent(n);
  std::vector<uint32_t> rank_(n, 0);
  for (PointId i = 0; i < n; ++i) parent[i] = i;
  std::function<PointId(PointId)> find = [&](PointId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](PointId a, PointId b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  };

  auto support = m.adjacency.support_radius(m.weight_cap());
  if (support && n > 64) {
    CellGrid grid(config, std::max(*support, 1e-9));
    for (PointId i = 0; i < n; ++i) {
      double qr = m.adjacency.support_radius(config.weight(i)).value_or(*support);
      grid.for_each_near(config.position(i), qr, [&](PointId j) {
        if (j > i && config.edge_present(i, j)) unite(i, j);
      });
    }
  } else {
    for (PointId i = 0; i < n; ++i)
      for (PointId j = i + 1; j < n; ++j)
        if (config.edge_present(i, j)) unite(i, j);
  }

  double margin = boundary_margin(m) + 1e-9;
  std::vector<int64_t> root_slot(n, -1);
  std::vector<ClusterResult> out;
  for (PointId i = 0; i < n; ++i) {
    PointId r = find(i);
    if (root_slot[r] < 0) {
      root_slot[r] = static_cast<int64_t>(out.size());
      out.emplace_back();
    }
    ClusterResult& c = out[static_cast<size_t>(root_slot[r])];
    c.members.push_back(i);
    c.size += 1;
    if (config.min_face_distance(i) <= margin) c.touches_boundary = true;
  }
  return out;
}

}  // namespace wrcm
