#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "wrcm/continuum.hpp"
#include "wrcm/model.hpp"
#include "wrcm/rng.hpp"
#include "wrcm/stats.hpp"

namespace wrcm {

using VertexId = uint32_t;

// Finite lattice approximation: sites 2^-n Z^d in [-L,L]^d crossed with
// weight bins, inhomogeneous Bernoulli on sites and on the edges of the
// complete graph. Edges are never materialized; their states come from the
// keyed pair hash.
struct LatticeSpec {
  std::shared_ptr<const ModelSpec> model;
  int L = 1;
  int n = 0;  // mesh exponent, spacing 2^-n
  int d = 2;
  double trunc_tol = 1e-6;

  double spacing = 1.0;          // 2^-n
  double cell_volume = 1.0;      // 2^-nd
  int sites_per_axis = 3;        // 2^{n+1} L + 1
  int64_t n_sites = 9;
  std::vector<double> bins;      // M_n values kept (<= H)
  std::vector<double> bin_mass;  // Pi(m, n)
  double H = 1.0;                // truncation level
  double tail_mass_above_H = 0.0;

  int64_t vertex_count() const {
    return n_sites * static_cast<int64_t>(bins.size());
  }
  int bin_count() const { return static_cast<int>(bins.size()); }
  int bin_of(VertexId v) const { return static_cast<int>(v % bins.size()); }
  int64_t site_of(VertexId v) const {
    return static_cast<int64_t>(v / bins.size());
  }
  VertexId vertex_of(int64_t site, int bin) const {
    return static_cast<VertexId>(site * static_cast<int64_t>(bins.size()) +
                                 bin);
  }
  double site_coord(int64_t site, int axis) const;
  void site_coords(int64_t site, double* out) const;
  double vertex_weight(VertexId v) const { return bins[bin_of(v)]; }

  // hash key stable under truncation-level changes: the bin component is the
  // grid offset l (continuous) or the atom index (discrete), both unchanged
  // when more bins are appended
  uint64_t stable_key(VertexId v) const {
    if (stable_keys) return (*stable_keys)[v];
    return static_cast<uint64_t>(site_of(v)) << 20 |
           static_cast<uint64_t>(bin_of(v));
  }

  // site open probability 1 - exp(-lambda 2^{-nd} Pi(m,n))
  double p_open(int bin, double lambda) const;
  // d/dlambda of p_open
  double dp_open(int bin, double lambda) const;
  // residual P(A_H) = exp(-lambda 2^{-nd} |U| pi(H, inf))
  double residual(double lambda) const;

  double edge_prob(VertexId a, VertexId b) const;
  double site_dist(int64_t sa, int64_t sb) const;

  // site distances are discrete, so phi values are precomputed per
  // (absolute offset, bin pair) when the table fits; per-site integer
  // coordinates and per-vertex hash keys avoid divisions on the hot paths
  std::shared_ptr<const std::vector<double>> edge_prob_table;
  std::shared_ptr<const std::vector<int32_t>> site_grid_coords;  // n_sites * d
  std::shared_ptr<const std::vector<uint64_t>> stable_keys;      // per vertex
  int64_t offset_index(int64_t sa, int64_t sb) const;
  int bin_pair_index(int b1, int b2) const {
    if (b1 > b2) std::swap(b1, b2);
    int nb = bin_count();
    return b1 * nb - b1 * (b1 - 1) / 2 + (b2 - b1);
  }

  VertexId root() const { return vertex_of(origin_site(), 0); }
  int64_t origin_site() const;
};

// errors on pathological weight tails where no H reaches the residual target
LatticeSpec build_lattice(std::shared_ptr<const ModelSpec> model, int L, int n,
                          double trunc_tol = 1e-6);

// One sampled configuration. Open vertices are materialized; edges stay lazy.
struct LatticeInstance {
  const LatticeSpec* spec = nullptr;
  double lambda = 0.0;
  rng::Seed128 seed;
  uint64_t replica = 0;
  bool coupled = false;

  std::vector<VertexId> open;        // ascending
  std::vector<uint64_t> open_bits;   // bitset over vertex ids
  rng::KeyedUniform edge_hash;
  rng::KeyedUniform ghost_hash;

  // coupled mode: the continuum source and the point ids per open vertex
  std::shared_ptr<const PointConfiguration> source;
  std::vector<std::vector<PointId>> cell_points;  // parallel to `open`
  std::vector<int32_t> open_slot;  // vertex -> index into `open`, -1 closed

  bool vertex_open(VertexId v) const {
    return (open_bits[v >> 6] >> (v & 63)) & 1;
  }
  bool edge_open(VertexId a, VertexId b) const;
  bool ghost_green(VertexId v, double h) const {
    return ghost_hash.at(spec->stable_key(v)) < h;
  }
};

// coupled = true samples the continuum process on the cylinder and derives
// site and edge states from the cells (points with weights beyond the
// truncation level are dropped; probability <= trunc_tol)
LatticeInstance sample_instance(const LatticeSpec& spec, double lambda,
                                rng::Seed128 seed, uint64_t replica,
                                bool coupled = false);

struct LatticeCluster {
  std::vector<VertexId> members;  // includes the root, sorted
  uint64_t size = 0;
  std::vector<uint64_t> generations;
};

// BFS cluster of the root (0bar, 1); the root is always included regardless
// of its own state.
LatticeCluster lattice_cluster(const LatticeInstance& inst,
                               uint64_t size_cap = 1'000'000);

// Per-replica cluster decomposition used by revealment, influence and
// pivotality estimators. Root handling follows the root-inclusion convention.
class ReplicaAnalysis {
 public:
  ReplicaAnalysis(const LatticeInstance& inst);

  // |C(v)| with the root-inclusion convention (v itself always counts)
  uint64_t cluster_size_of(VertexId v) const;
  // |C(v) \ {root}|: the exact witness count of the exploration forest,
  // whose tree at the root reveals only its copy
  uint64_t cluster_size_excluding_root(VertexId v) const;
  // members of C(root) (root first, then open members)
  const std::vector<VertexId>& root_members() const { return root_members_; }
  uint64_t root_cluster_size() const { return root_members_.size(); }

  // is vertex v pivotal for {|C(root)| >= k}? (independent of v's own state)
  bool vertex_pivotal(VertexId v, uint64_t k) const;

  // closed edges whose opening and open edges whose closing flip the event;
  // returns packed keys (min, max) of pivotal edges
  std::vector<uint64_t> pivotal_edges(uint64_t k) const;

  bool event_holds(uint64_t k) const { return root_members_.size() >= k; }

  const LatticeInstance& instance() const { return *inst_; }

  static constexpr VertexId kNoVertex = UINT32_MAX;
  static constexpr VertexId kNoEdge = UINT32_MAX;

 private:
  std::vector<int32_t> adjacent_comps(VertexId v) const;
  bool on_root_side(int32_t comp) const;
  uint64_t root_side_size_without(VertexId skip, VertexId ea, VertexId eb) const;

  const LatticeInstance* inst_;
  // clustering of open vertices (root included when open)
  std::vector<int32_t> comp_of_open_;        // per open-slot component id
  std::vector<uint64_t> comp_size_;
  int32_t root_comp_ = -1;                   // root's component when open
  std::vector<VertexId> root_members_;       // root + open members of C(root)
  std::vector<int32_t> root_adjacent_comps_; // closed root: comps glued to root
};

// Exact covariance-sum derivative (Russo) on tiny lattices, Monte Carlo
// pivotal form otherwise.
enum class RussoMode { exact_tiny, monte_carlo };

double russo_rhs(const LatticeSpec& spec, double lambda, uint64_t k,
                 RussoMode mode, uint64_t samples, rng::Seed128 seed,
                 int threads = 0);

// Estimate of P((u,m) closed and pivotal for {|C(root)| >= k})
Estimate pivotal_probability(const LatticeSpec& spec, double lambda,
                             VertexId vertex, uint64_t k, uint64_t samples,
                             rng::Seed128 seed, int threads = 0);

// theta^{L,n}(k) estimate over replicas
Estimate lattice_tail(const LatticeSpec& spec, double lambda, uint64_t k,
                      uint64_t samples, rng::Seed128 seed, int threads = 0);

}  // namespace wrcm
