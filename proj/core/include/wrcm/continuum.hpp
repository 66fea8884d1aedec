#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "wrcm/model.hpp"
#include "wrcm/rng.hpp"

namespace wrcm {

using PointId = uint32_t;
inline constexpr PointId kNoPoint = UINT32_MAX;

struct MarkedPoint {
  std::vector<double> position;
  double weight = 1.0;
  PointId id = kNoPoint;
  bool augmented = false;
};

// A sampled marked point set in [-L, L]^d plus the deterministic lazy edge
// oracle. Immutable after sampling; all cluster queries are read only.
class PointConfiguration {
 public:
  PointConfiguration(std::shared_ptr<const ModelSpec> model, rng::Seed128 seed,
                     uint64_t replica);

  const ModelSpec& model() const { return *model_; }
  std::shared_ptr<const ModelSpec> model_ptr() const { return model_; }
  rng::Seed128 seed() const { return seed_; }
  uint64_t replica() const { return replica_; }
  int dim() const { return dim_; }
  double box() const { return box_; }

  PointId size() const { return static_cast<PointId>(weights_.size()); }
  PointId poisson_count() const { return n_poisson_; }
  bool is_augmented(PointId i) const { return i >= n_poisson_; }

  std::span<const double> position(PointId i) const {
    return {coords_.data() + static_cast<size_t>(i) * dim_,
            static_cast<size_t>(dim_)};
  }
  double coord(PointId i, int axis) const {
    return coords_[static_cast<size_t>(i) * dim_ + axis];
  }
  double weight(PointId i) const { return weights_[i]; }

  double dist(PointId i, PointId j) const;
  double min_face_distance(PointId i) const;

  // lazy edge oracle: present iff u_{ij} < phi(|xi-xj|; ai, aj)
  bool edge_present(PointId i, PointId j) const;
  double edge_variate(PointId i, PointId j) const {
    return edge_hash_.at_pair(i, j);
  }

  // thinning variate for intensity coupling (uniform per Poisson point)
  double thin_variate(PointId i) const { return thin_hash_.at(i); }

  MarkedPoint point(PointId i) const;

 private:
  friend PointConfiguration sample_ppp(std::shared_ptr<const ModelSpec>,
                                       rng::Seed128, uint64_t);
  friend PointConfiguration augment(
      const PointConfiguration&,
      const std::vector<std::pair<std::vector<double>, double>>&);

  std::shared_ptr<const ModelSpec> model_;
  rng::Seed128 seed_;
  uint64_t replica_ = 0;
  int dim_ = 2;
  double box_ = 1.0;
  std::vector<double> coords_;
  std::vector<double> weights_;
  PointId n_poisson_ = 0;
  rng::KeyedUniform edge_hash_;
  rng::KeyedUniform thin_hash_;
};

// Poisson(lambda (2L)^d) points, uniform positions, i.i.d. weights.
PointConfiguration sample_ppp(std::shared_ptr<const ModelSpec> model,
                              rng::Seed128 seed, uint64_t replica);

// Appends fixed points; existing ids and edge variates are unchanged.
// Rejects exact duplicates of position and weight.
PointConfiguration augment(
    const PointConfiguration& config,
    const std::vector<std::pair<std::vector<double>, double>>& points);

// sample_ppp followed by augmenting the origin (0,...,0) with weight 1
PointConfiguration sample_ppp_with_origin(std::shared_ptr<const ModelSpec> model,
                                          rng::Seed128 seed, uint64_t replica);

struct ClusterResult {
  std::vector<PointId> members;  // sorted
  uint64_t size = 0;
  bool touches_boundary = false;
  std::vector<uint64_t> generations;  // BFS layer sizes Z_n
  bool capped = false;
};

struct ClusterOptions {
  uint64_t size_cap = 1'000'000;
  bool stop_at_boundary = false;
  bool record_members = true;
  bool record_generations = true;
  // nullptr: all Poisson points active; else active[i] per Poisson point
  // (augmented points are always active)
  const std::vector<uint8_t>* active = nullptr;
};

// Exact neighbor list of one point (sorted by id). Cell-list accelerated for
// finite-support adjacencies, all-pairs otherwise.
std::vector<PointId> neighbors(const PointConfiguration& config, PointId id);

// BFS cluster of the augmented origin; the origin is always a member.
ClusterResult cluster_of_origin(const PointConfiguration& config,
                                const ClusterOptions& opts = {});

// cluster of an arbitrary point id
ClusterResult cluster_of_point(const PointConfiguration& config, PointId start,
                               const ClusterOptions& opts = {});

// Union-find partition of all points over realized edges.
std::vector<ClusterResult> all_clusters(const PointConfiguration& config);

// margin used by the boundary-reach percolation proxy: a member within this
// distance of a face could connect past it
double boundary_margin(const ModelSpec& model);

// Fixed-radius neighbor grid over a configuration.
class CellGrid {
 public:
  CellGrid(const PointConfiguration& config, double cell_size);

  template <typename Fn>
  void for_each_near(std::span<const double> center, double radius,
                     Fn&& fn) const {
    std::vector<int> lo(dim_), hi(dim_);
    for (int a = 0; a < dim_; ++a) {
      lo[a] = cell_coord(center[a] - radius);
      hi[a] = cell_coord(center[a] + radius);
    }
    std::vector<int> idx(lo);
    for (;;) {
      size_t c = flat_index(idx);
      for (uint32_t k = starts_[c]; k < starts_[c + 1]; ++k) fn(ids_[k]);
      int a = 0;
      while (a < dim_) {
        if (++idx[a] <= hi[a]) break;
        idx[a] = lo[a];
        ++a;
      }
      if (a == dim_) break;
    }
  }

 private:
  int cell_coord(double x) const;
  size_t flat_index(const std::vector<int>& idx) const;

  int dim_;
  double origin_;
  double cell_;
  int per_axis_;
  std::vector<uint32_t> starts_;
  std::vector<PointId> ids_;
};

}  // namespace wrcm
