#include "wrcm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wrcm/oracle.hpp"

namespace wrcm {

double LatticeSpec::site_coord(int64_t site, int axis) const {
  int64_t rest = site;
  for (int a = d - 1; a > axis; --a) rest /= sites_per_axis;
  int64_t k = rest % sites_per_axis;
  int64_t half = (sites_per_axis - 1) / 2;
  return static_cast<double>(k - half) * spacing;
}

void LatticeSpec::site_coords(int64_t site, double* out) const {
  int64_t half = (sites_per_axis - 1) / 2;
  for (int a = d - 1; a >= 0; --a) {
    out[a] = static_cast<double>(site % sites_per_axis - half) * spacing;
    site /= sites_per_axis;
  }
}

int64_t LatticeSpec::origin_site() const {
  int64_t half = (sites_per_axis - 1) / 2;
  int64_t site = 0;
  for (int a = 0; a < d; ++a) site = site * sites_per_axis + half;
  return site;
}

double LatticeSpec::p_open(int bin, double lambda) const {
  return -std::expm1(-lambda * cell_volume * bin_mass[bin]);
}

double LatticeSpec::dp_open(int bin, double lambda) const {
  double nu = cell_volume * bin_mass[bin];
  return nu * std::exp(-lambda * nu);
}

double LatticeSpec::residual(double lambda) const {
  return std::exp(-lambda * cell_volume * static_cast<double>(n_sites) *
                  tail_mass_above_H);
}

double LatticeSpec::site_dist(int64_t sa, int64_t sb) const {
  if (site_grid_coords) {
    const int32_t* ca = site_grid_coords->data() + sa * d;
    const int32_t* cb = site_grid_coords->data() + sb * d;
    double s = 0;
    for (int a = 0; a < d; ++a) {
      double dx = static_cast<double>(ca[a] - cb[a]) * spacing;
      s += dx * dx;
    }
    return std::sqrt(s);
  }
  double s = 0;
  int64_t ra = sa, rb = sb;
  for (int a = d - 1; a >= 0; --a) {
    double dx = static_cast<double>(ra % sites_per_axis) -
                static_cast<double>(rb % sites_per_axis);
    dx *= spacing;
    s += dx * dx;
    ra /= sites_per_axis;
    rb /= sites_per_axis;
  }
  return std::sqrt(s);
}

int64_t LatticeSpec::offset_index(int64_t sa, int64_t sb) const {
  if (site_grid_coords) {
    const int32_t* ca = site_grid_coords->data() + sa * d;
    const int32_t* cb = site_grid_coords->data() + sb * d;
    int64_t idx = 0;
    for (int a = 0; a < d; ++a) {
      int32_t da = ca[a] - cb[a];
      idx = idx * sites_per_axis + (da < 0 ? -da : da);
    }
    return idx;
  }
  int64_t idx = 0;
  for (int a = 0; a < d; ++a) {
    int64_t da = sa % sites_per_axis - sb % sites_per_axis;
    if (da < 0) da = -da;
    idx = idx * sites_per_axis + da;
    sa /= sites_per_axis;
    sb /= sites_per_axis;
  }
  return idx;
}

double LatticeSpec::edge_prob(VertexId a, VertexId b) const {
  int nb = bin_count();
  if (edge_prob_table) {
    int64_t off;
    int ba, bb;
    if (nb == 1) {
      off = offset_index(a, b);
      ba = bb = 0;
    } else {
      off = offset_index(site_of(a), site_of(b));
      ba = bin_of(a);
      bb = bin_of(b);
    }
    int64_t pairs = static_cast<int64_t>(nb) * (nb + 1) / 2;
    return (*edge_prob_table)[off * pairs + bin_pair_index(ba, bb)];
  }
  double r = site_dist(site_of(a), site_of(b));
  return model->adjacency.eval(r, bins[bin_of(a)], bins[bin_of(b)]);
}

LatticeSpec build_lattice(std::shared_ptr<const ModelSpec> model, int L, int n,
                          double trunc_tol) {
  if (L < 1 || n < 0) throw std::invalid_argument("build_lattice: bad L or n");
  if (trunc_tol <= 0 || trunc_tol > 0.01)
    throw std::invalid_argument("build_lattice: trunc_tol must be in (0, 0.01]");
  model->validate();

  LatticeSpec spec;
  spec.model = model;
  spec.L = L;
  spec.n = n;
  spec.d = model->adjacency.dimension;
  spec.trunc_tol = trunc_tol;
  spec.spacing = std::ldexp(1.0, -n);
  spec.cell_volume = std::pow(spec.spacing, spec.d);
  spec.sites_per_axis = (1 << (n + 1)) * L + 1;
  spec.n_sites = 1;
  for (int a = 0; a < spec.d; ++a) spec.n_sites *= spec.sites_per_axis;

  const WeightDistribution& pi = model->weights;
  double lambda = model->intensity;
  double budget = -std::log1p(-trunc_tol) /
                  (lambda * spec.cell_volume * static_cast<double>(spec.n_sites));

  if (pi.is_discrete()) {
    const auto& atoms =
        pi.kind == WeightKind::point_mass
            ? std::vector<std::pair<double, double>>{{1.0, 1.0}}
            : pi.atoms;
    // H minimal over the atom list with strict-tail mass within budget
    double tail = 0.0;
    size_t keep = atoms.size();
    for (size_t i = atoms.size(); i-- > 0;) {
      if (tail + atoms[i].second > budget) break;
      tail += atoms[i].second;
      keep = i;
    }
    if (keep == 0)
      keep = 1;  // always keep the first atom; tail recomputed below
    spec.H = atoms[keep - 1].first;
    spec.tail_mass_above_H = 0.0;
    for (size_t i = keep; i < atoms.size(); ++i)
      spec.tail_mass_above_H += atoms[i].second;
    if (spec.tail_mass_above_H > budget)
      throw std::runtime_error("build_lattice: truncation target unreachable");
    for (size_t i = 0; i < keep; ++i) {
      spec.bins.push_back(atoms[i].first);
      spec.bin_mass.push_back(atoms[i].second);
    }
  } else {
    // M_n = {1 + l 2^-n}; H minimal on that grid with pi([H + 2^-n, inf))
    // within budget
    double step = spec.spacing;
    double H = 1.0;
    int64_t max_bins = 1 << 26;
    int64_t l = 0;
    while (pi.tail(H + step) > budget) {
      H += step;
      if (++l > max_bins)
        throw std::runtime_error("build_lattice: weight tail decays too slowly");
    }
    spec.H = H;
    spec.tail_mass_above_H = pi.tail(H + step);
    for (double m = 1.0; m <= H + 0.5 * step; m += step) {
      spec.bins.push_back(m);
      spec.bin_mass.push_back(weight_mass(pi, m, n));
    }
  }
  if (spec.bins.empty() || spec.bins.front() != 1.0)
    throw std::runtime_error("build_lattice: weight support must start at 1");
  if (spec.bins.size() >= (1u << 20))
    throw std::runtime_error("build_lattice: too many weight bins");

  // per-site integer grid coordinates and per-vertex stable hash keys
  if (spec.n_sites * spec.d <= (int64_t(1) << 26)) {
    auto coords = std::make_shared<std::vector<int32_t>>(
        static_cast<size_t>(spec.n_sites * spec.d));
    for (int64_t site = 0; site < spec.n_sites; ++site) {
      int64_t rest = site;
      for (int a = spec.d - 1; a >= 0; --a) {
        (*coords)[site * spec.d + a] =
            static_cast<int32_t>(rest % spec.sites_per_axis);
        rest /= spec.sites_per_axis;
      }
    }
    spec.site_grid_coords = coords;
  }
  if (spec.vertex_count() <= (int64_t(1) << 26)) {
    auto keys = std::make_shared<std::vector<uint64_t>>(
        static_cast<size_t>(spec.vertex_count()));
    for (int64_t v = 0; v < spec.vertex_count(); ++v)
      (*keys)[v] = static_cast<uint64_t>(v / spec.bin_count()) << 20 |
                   static_cast<uint64_t>(v % spec.bin_count());
    spec.stable_keys = keys;
  }

  // precomputed phi table over (absolute site offset, bin pair)
  int64_t nb = spec.bin_count();
  int64_t pairs = nb * (nb + 1) / 2;
  if (spec.n_sites * pairs <= (int64_t(1) << 26)) {
    auto table = std::make_shared<std::vector<double>>(
        static_cast<size_t>(spec.n_sites * pairs));
    for (int64_t off = 0; off < spec.n_sites; ++off) {
      double r2 = 0.0;
      int64_t rest = off;
      for (int a = 0; a < spec.d; ++a) {
        double dx = static_cast<double>(rest % spec.sites_per_axis) *
                    spec.spacing;
        r2 += dx * dx;
        rest /= spec.sites_per_axis;
      }
      double r = std::sqrt(r2);
      for (int b1 = 0; b1 < nb; ++b1)
        for (int b2 = b1; b2 < nb; ++b2)
          (*table)[off * pairs + spec.bin_pair_index(b1, b2)] =
              model->adjacency.eval(r, spec.bins[b1], spec.bins[b2]);
    }
    spec.edge_prob_table = table;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

bool LatticeInstance::edge_open(VertexId a, VertexId b) const {
  if (a == b) return false;
  if (coupled) {
    int32_t sa = open_slot[a], sb = open_slot[b];
    if (sa < 0 || sb < 0) {
      // closed cells carry no points: fall back to the Bernoulli rule so the
      // edge marginal is still well defined (never reached by clusters)
      double q = spec->edge_prob(a, b);
      if (q <= 0) return false;
      if (q >= 1) return true;
      return edge_hash.at_pair(spec->stable_key(a), spec->stable_key(b)) < q;
    }
    for (PointId i : cell_points[sa])
      for (PointId j : cell_points[sb])
        if (source->edge_present(i, j)) return true;
    return false;
  }
  double q = spec->edge_prob(a, b);
  if (q <= 0) return false;
  if (q >= 1) return true;
  return edge_hash.at_pair(spec->stable_key(a), spec->stable_key(b)) < q;
}

LatticeInstance sample_instance(const LatticeSpec& spec, double lambda,
                                rng::Seed128 seed, uint64_t replica,
                                bool coupled) {
  LatticeInstance inst;
  inst.spec = &spec;
  inst.lambda = lambda;
  inst.seed = seed;
  inst.replica = replica;
  inst.coupled = coupled;
  inst.edge_hash = rng::KeyedUniform(seed, rng::Tag::edge, replica);
  inst.ghost_hash = rng::KeyedUniform(seed, rng::Tag::ghost, replica);
  int64_t nv = spec.vertex_count();
  inst.open_bits.assign(static_cast<size_t>((nv + 63) / 64), 0);

  if (!coupled) {
    rng::KeyedUniform site_hash(seed, rng::Tag::site, replica);
    int nb = spec.bin_count();
    std::vector<double> p(nb);
    for (int b = 0; b < nb; ++b) p[b] = spec.p_open(b, lambda);
    for (int64_t v = 0; v < nv; ++v) {
      int b = static_cast<int>(v % nb);
      if (site_hash.at(spec.stable_key(static_cast<VertexId>(v))) < p[b]) {
        inst.open.push_back(static_cast<VertexId>(v));
        inst.open_bits[v >> 6] |= (1ULL << (v & 63));
      }
    }
    return inst;
  }

  // coupled: continuum process on the cylinder [-L - 2^{-n-1}, L + 2^{-n-1}]^d
  // with the origin (0,1) added; cells half open in each coordinate
  auto wide = std::make_shared<ModelSpec>(*spec.model);
  wide->intensity = lambda;
  wide->box_half_width =
      spec.model->box_half_width + 0.5 * spec.spacing;
  auto cfg = std::make_shared<PointConfiguration>(
      sample_ppp_with_origin(wide, seed, replica));
  inst.source = cfg;

  int64_t half = (spec.sites_per_axis - 1) / 2;
  std::vector<std::pair<VertexId, PointId>> hits;
  for (PointId i = 0; i < cfg->size(); ++i) {
    int64_t site = 0;
    bool ok = true;
    for (int a = 0; a < spec.d; ++a) {
      // cell of x: [k 2^-n - 2^{-n-1}, k 2^-n + 2^{-n-1})
      int64_t k = static_cast<int64_t>(
          std::floor(cfg->coord(i, a) / spec.spacing + 0.5));
      if (k < -half || k > half) {
        ok = false;
        break;
      }
      site = site * spec.sites_per_axis + (k + half);
    }
    if (!ok) continue;
    // weight bin [m, m + 2^-n); beyond-truncation weights are dropped
    double w = cfg->weight(i);
    int bin;
    if (spec.model->weights.is_discrete()) {
      auto it = std::lower_bound(spec.bins.begin(), spec.bins.end(), w - 1e-12);
      if (it == spec.bins.end() || std::fabs(*it - w) > 1e-9) continue;
      bin = static_cast<int>(it - spec.bins.begin());
    } else {
      bin = static_cast<int>(std::floor((w - 1.0) / spec.spacing));
      if (bin < 0 || bin >= spec.bin_count()) continue;
    }
    hits.emplace_back(spec.vertex_of(site, bin), i);
  }
  std::sort(hits.begin(), hits.end());
  inst.open_slot.assign(static_cast<size_t>(nv), -1);
  for (size_t i = 0; i < hits.size();) {
    VertexId v = hits[i].first;
    inst.open_slot[v] = static_cast<int32_t>(inst.open.size());
    inst.open.push_back(v);
    inst.open_bits[v >> 6] |= (1ULL << (v & 63));
    inst.cell_points.emplace_back();
    while (i < hits.size() && hits[i].first == v)
      inst.cell_points.back().push_back(hits[i++].second);
  }
  return inst;
}

// ---------------------------------------------------------------------------
// clusters and pivotality
// ---------------------------------------------------------------------------

namespace {

// candidate filter: skip pairs that are out of reach before hashing; the
// slack absorbs coupled-mode offsets (cell points sit off the site centers
// and bin weights are lower edges)
inline double pair_slack(const LatticeInstance& inst) {
  if (!inst.coupled) return 0.0;
  return inst.spec->spacing * (std::sqrt(static_cast<double>(inst.spec->d)) + 2.0);
}

inline bool maybe_adjacent(const LatticeSpec& spec, VertexId a, VertexId b,
                           double reach_cap, double slack) {
  if (reach_cap <= 0) return true;
  double cut =
      std::min(reach_cap,
               std::min(spec.model->adjacency
                            .support_radius(spec.vertex_weight(a))
                            .value_or(reach_cap),
                        spec.model->adjacency
                            .support_radius(spec.vertex_weight(b))
                            .value_or(reach_cap)));
  return spec.site_dist(spec.site_of(a), spec.site_of(b)) <= cut + slack;
}

}  // namespace

LatticeCluster lattice_cluster(const LatticeInstance& inst, uint64_t size_cap) {
  const LatticeSpec& spec = *inst.spec;
  VertexId root = spec.root();
  LatticeCluster res;
  res.members.push_back(root);
  res.size = 1;
  res.generations.push_back(1);

  std::vector<uint8_t> in_cluster(inst.open.size(), 0);
  std::vector<VertexId> frontier{root}, next;
  double reach_cap =
      spec.model->adjacency.support_radius(spec.model->weight_cap())
          .value_or(0.0);
  double slack = pair_slack(inst);

  while (!frontier.empty() && res.size < size_cap) {
    next.clear();
    for (VertexId cur : frontier) {
      for (size_t s = 0; s < inst.open.size(); ++s) {
        if (in_cluster[s]) continue;
        VertexId w = inst.open[s];
        if (w == cur || w == root) continue;
        if (reach_cap > 0 && !maybe_adjacent(spec, cur, w, reach_cap, slack)) continue;
        if (!inst.edge_open(cur, w)) continue;
        in_cluster[s] = 1;
        next.push_back(w);
        res.members.push_back(w);
        if (++res.size >= size_cap) break;
      }
      if (res.size >= size_cap) break;
    }
    if (!next.empty()) res.generations.push_back(next.size());
    frontier.swap(next);
  }
  std::sort(res.members.begin(), res.members.end());
  return res;
}

ReplicaAnalysis::ReplicaAnalysis(const LatticeInstance& inst) : inst_(&inst) {
  const LatticeSpec& spec = *inst.spec;
  VertexId root = spec.root();
  size_t no = inst.open.size();
  double reach_cap =
      spec.model->adjacency.support_radius(spec.model->weight_cap())
          .value_or(0.0);
  double slack = pair_slack(inst);

  // union-find over open vertices (root participates when open)
  std::vector<int32_t> parent(no);
  for (size_t i = 0; i < no; ++i) parent[i] = static_cast<int32_t>(i);
  std::function<int32_t(int32_t)> find = [&](int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (size_t i = 0; i < no; ++i) {
    for (size_t j = i + 1; j < no; ++j) {
      VertexId a = inst.open[i], b = inst.open[j];
      if (reach_cap > 0 && !maybe_adjacent(spec, a, b, reach_cap, slack)) continue;
      if (!inst.edge_open(a, b)) continue;
      int32_t ra = find(static_cast<int32_t>(i)),
              rb = find(static_cast<int32_t>(j));
      if (ra != rb) parent[rb] = ra;
    }
  }
  comp_of_open_.resize(no);
  std::vector<int32_t> comp_index(no, -1);
  for (size_t i = 0; i < no; ++i) {
    int32_t r = find(static_cast<int32_t>(i));
    if (comp_index[r] < 0) {
      comp_index[r] = static_cast<int32_t>(comp_size_.size());
      comp_size_.push_back(0);
    }
    comp_of_open_[i] = comp_index[r];
    comp_size_[comp_of_open_[i]] += 1;
  }

  // root side
  bool root_open = inst.vertex_open(root);
  root_members_.push_back(root);
  if (root_open) {
    size_t slot = static_cast<size_t>(
        std::lower_bound(inst.open.begin(), inst.open.end(), root) -
        inst.open.begin());
    root_comp_ = comp_of_open_[slot];
    for (size_t i = 0; i < no; ++i)
      if (comp_of_open_[i] == root_comp_ && inst.open[i] != root)
        root_members_.push_back(inst.open[i]);
  } else {
    std::vector<uint8_t> seen(comp_size_.size(), 0);
    for (size_t i = 0; i < no; ++i) {
      VertexId w = inst.open[i];
      if (reach_cap > 0 && !maybe_adjacent(spec, root, w, reach_cap, slack)) continue;
      if (!inst.edge_open(root, w)) continue;
      if (!seen[comp_of_open_[i]]) {
        seen[comp_of_open_[i]] = 1;
        root_adjacent_comps_.push_back(comp_of_open_[i]);
      }
    }
    for (size_t i = 0; i < no; ++i)
      if (seen[comp_of_open_[i]]) root_members_.push_back(inst.open[i]);
  }
}

// components adjacent to v via an open edge to an open vertex (the root is a
// normal open vertex here when it is open)
std::vector<int32_t> ReplicaAnalysis::adjacent_comps(VertexId v) const {
  const LatticeInstance& inst = *inst_;
  const LatticeSpec& spec = *inst.spec;
  double reach_cap =
      spec.model->adjacency.support_radius(spec.model->weight_cap())
          .value_or(0.0);
  double slack = pair_slack(inst);
  std::vector<int32_t> comps;
  for (size_t i = 0; i < inst.open.size(); ++i) {
    VertexId w = inst.open[i];
    if (w == v) continue;
    if (reach_cap > 0 && !maybe_adjacent(spec, v, w, reach_cap, slack)) continue;
    if (!inst.edge_open(v, w)) continue;
    int32_t c = comp_of_open_[i];
    if (std::find(comps.begin(), comps.end(), c) == comps.end())
      comps.push_back(c);
  }
  return comps;
}

uint64_t ReplicaAnalysis::cluster_size_of(VertexId v) const {
  const LatticeInstance& inst = *inst_;
  VertexId root = inst.spec->root();
  if (v == root) return root_members_.size();
  if (inst.vertex_open(v)) {
    size_t slot = static_cast<size_t>(
        std::lower_bound(inst.open.begin(), inst.open.end(), v) -
        inst.open.begin());
    return comp_size_[comp_of_open_[slot]];
  }
  // closed vertex: itself plus the components it touches by open edges;
  // closed vertices (including a closed root) are never members of other
  // clusters
  uint64_t sz = 1;
  for (int32_t c : adjacent_comps(v)) sz += comp_size_[c];
  return sz;
}

uint64_t ReplicaAnalysis::cluster_size_excluding_root(VertexId v) const {
  const LatticeInstance& inst = *inst_;
  VertexId root = inst.spec->root();
  uint64_t sz = cluster_size_of(v);
  if (v == root) return sz - 1;
  if (root_comp_ < 0) return sz;  // a closed root is never a member
  if (inst.vertex_open(v)) {
    size_t slot = static_cast<size_t>(
        std::lower_bound(inst.open.begin(), inst.open.end(), v) -
        inst.open.begin());
    return comp_of_open_[slot] == root_comp_ ? sz - 1 : sz;
  }
  for (int32_t c : adjacent_comps(v))
    if (c == root_comp_) return sz - 1;
  return sz;
}

bool ReplicaAnalysis::on_root_side(int32_t comp) const {
  if (root_comp_ >= 0) return comp == root_comp_;
  return std::find(root_adjacent_comps_.begin(), root_adjacent_comps_.end(),
                   comp) != root_adjacent_comps_.end();
}

bool ReplicaAnalysis::vertex_pivotal(VertexId v, uint64_t k) const {
  const LatticeInstance& inst = *inst_;
  VertexId root = inst.spec->root();
  if (v == root) return false;  // the event ignores the root's own state
  uint64_t base = root_members_.size();
  bool f_base = base >= k;

  if (!inst.vertex_open(v)) {
    // opening a vertex only grows the root side: never pivotal once the
    // event already holds
    if (f_base) return false;
    auto comps = adjacent_comps(v);
    bool connects = false;
    if (root_comp_ < 0) {
      // closed root: a direct edge root-v attaches v when v opens
      const LatticeSpec& spec = *inst.spec;
      double reach_cap =
          spec.model->adjacency.support_radius(spec.model->weight_cap())
              .value_or(0.0);
      double slack = pair_slack(inst);
      if (reach_cap <= 0 || maybe_adjacent(spec, v, root, reach_cap, slack))
        connects = inst.edge_open(v, root);
    }
    uint64_t extra = 0;
    for (int32_t c : comps) {
      if (on_root_side(c))
        connects = true;
      else
        extra += comp_size_[c];
    }
    if (!connects) return false;
    bool f_open = (base + 1 + extra) >= k;
    return f_open != f_base;
  }

  // open vertex: closing only matters on the root side, and only when the
  // event currently holds
  if (!f_base) return false;
  if (std::find(root_members_.begin(), root_members_.end(), v) ==
      root_members_.end())
    return false;
  uint64_t reduced = root_side_size_without(v, kNoEdge, kNoEdge);
  return reduced < k;
}

// Size of C(root) recomputed with vertex `skip` treated as closed and/or the
// edge (ea, eb) treated as closed. kNoVertex / kNoEdge disable the overrides.
uint64_t ReplicaAnalysis::root_side_size_without(VertexId skip, VertexId ea,
                                                 VertexId eb) const {
  const LatticeInstance& inst = *inst_;
  const auto& M = root_members_;
  std::vector<uint8_t> seen(M.size(), 0);
  std::vector<int> stack{0};  // M[0] == root
  seen[0] = 1;
  uint64_t count = 1;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    VertexId a = M[cur];
    for (size_t j = 1; j < M.size(); ++j) {
      if (seen[j]) continue;
      VertexId b = M[j];
      if (b == skip) continue;
      if ((a == ea && b == eb) || (a == eb && b == ea)) continue;
      // a == root works here: root-incident edges are valid first steps
      if (!inst.edge_open(a, b)) continue;
      seen[j] = 1;
      ++count;
      stack.push_back(static_cast<int>(j));
    }
  }
  return count;
}

std::vector<uint64_t> ReplicaAnalysis::pivotal_edges(uint64_t k) const {
  const LatticeInstance& inst = *inst_;
  const LatticeSpec& spec = *inst.spec;
  VertexId root = spec.root();
  const auto& M = root_members_;
  uint64_t base = M.size();
  std::vector<uint64_t> out;
  auto pack = [](VertexId a, VertexId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<uint64_t>(a) << 32) | b;
  };
  auto stochastic = [&](VertexId a, VertexId b) {
    double q = spec.edge_prob(a, b);
    return q > 0.0 && q < 1.0;  // deterministic coordinates carry no influence
  };

  if (base >= k) {
    // open edges inside the root side whose removal cuts it below k
    for (size_t i = 0; i < M.size(); ++i) {
      for (size_t j = i + 1; j < M.size(); ++j) {
        if (!inst.edge_open(M[i], M[j])) continue;
        if (!stochastic(M[i], M[j])) continue;
        if (root_side_size_without(kNoVertex, M[i], M[j]) < k)
          out.push_back(pack(M[i], M[j]));
      }
    }
    return out;
  }

  // event fails: closed cross edges to outside components large enough to
  // push the root side to k (all root-side-to-outside-open edges are closed
  // in the realization)
  for (size_t i = 0; i < inst.open.size(); ++i) {
    VertexId w = inst.open[i];
    int32_t c = comp_of_open_[i];
    if (on_root_side(c) || w == root) continue;
    if (base + comp_size_[c] < k) continue;
    for (VertexId x : M) {
      if (x == w) continue;
      if (stochastic(x, w)) out.push_back(pack(x, w));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Russo derivative and pivotal probabilities
// ---------------------------------------------------------------------------

namespace {

// exact covariance-sum derivative via full enumeration (<= 24 coordinates)
double exact_russo_rhs(const LatticeSpec& spec, double lambda, uint64_t k) {
  oracle::TinyInstance tiny = oracle::from_lattice(spec);
  return oracle::exact_derivative(tiny, k, lambda).covariance_sum;
}

}  // namespace

double russo_rhs(const LatticeSpec& spec, double lambda, uint64_t k,
                 RussoMode mode, uint64_t samples, rng::Seed128 seed,
                 int threads) {
  if (mode == RussoMode::exact_tiny)
    return exact_russo_rhs(spec, lambda, k);
  int64_t nv = spec.vertex_count();
  // per-vertex pivotal frequencies via one all-vertex scan per replica
  int chunks = 64;
  std::vector<std::vector<double>> pivot_sums(
      chunks, std::vector<double>(static_cast<size_t>(nv), 0.0));
  std::vector<uint64_t> counts(chunks, 0);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        auto& sums = pivot_sums[chunk];
        for (uint64_t rep = begin; rep < end; ++rep) {
          LatticeInstance inst = sample_instance(spec, lambda, seed, rep);
          ReplicaAnalysis an(inst);
          for (int64_t v = 0; v < nv; ++v)
            if (an.vertex_pivotal(static_cast<VertexId>(v), k)) sums[v] += 1.0;
          ++counts[chunk];
        }
      },
      chunks);
  double total = 0.0;
  uint64_t n = 0;
  for (int c = 0; c < chunks; ++c) n += counts[c];
  for (int64_t v = 0; v < nv; ++v) {
    double s = 0.0;
    for (int c = 0; c < chunks; ++c) s += pivot_sums[c][v];
    int bin = spec.bin_of(static_cast<VertexId>(v));
    total += spec.dp_open(bin, lambda) * (s / static_cast<double>(n));
  }
  return total;
}

Estimate pivotal_probability(const LatticeSpec& spec, double lambda,
                             VertexId vertex, uint64_t k, uint64_t samples,
                             rng::Seed128 seed, int threads) {
  int chunks = 64;
  std::vector<stats::Accumulator> acc(chunks);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        for (uint64_t rep = begin; rep < end; ++rep) {
          LatticeInstance inst = sample_instance(spec, lambda, seed, rep);
          ReplicaAnalysis an(inst);
          bool hit = !inst.vertex_open(vertex) && an.vertex_pivotal(vertex, k);
          acc[chunk].add(hit ? 1.0 : 0.0);
        }
      },
      chunks);
  stats::Accumulator total;
  for (auto& a : acc) total.merge(a);
  return total.estimate(seed);
}

Estimate lattice_tail(const LatticeSpec& spec, double lambda, uint64_t k,
                      uint64_t samples, rng::Seed128 seed, int threads) {
  int chunks = 64;
  std::vector<stats::Accumulator> acc(chunks);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        for (uint64_t rep = begin; rep < end; ++rep) {
          LatticeInstance inst = sample_instance(spec, lambda, seed, rep);
          ReplicaAnalysis an(inst);
          acc[chunk].add(an.event_holds(k) ? 1.0 : 0.0);
        }
      },
      chunks);
  stats::Accumulator total;
  for (auto& a : acc) total.merge(a);
  return total.estimate(seed);
}

}  // namespace wrcm
