#include "wrcm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wrcm/detail/forest.hpp"

namespace wrcm::oracle {

std::vector<int> TinyInstance::stochastic_edges() const {
  std::vector<int> out;
  for (int e = 0; e < static_cast<int>(edges.size()); ++e)
    if (edges[e].q > 0.0 && edges[e].q < 1.0) out.push_back(e);
  return out;
}

int TinyInstance::total_coordinates() const {
  int n = site_count() + static_cast<int>(stochastic_edges().size());
  if (gamma_tilde > 0.0) n += site_count();
  return n;
}

void TinyInstance::validate() const {
  if (sites.empty()) throw std::invalid_argument("tiny: no sites");
  if (root < 0 || root >= site_count())
    throw std::invalid_argument("tiny: bad root");
  if (total_coordinates() > 24)
    throw std::invalid_argument("tiny: more than 24 coordinates");
  for (const auto& s : sites)
    if (s.nu <= 0) throw std::invalid_argument("tiny: nu must be positive");
  for (const auto& e : edges) {
    if (e.a == e.b || e.a < 0 || e.b < 0 || e.a >= site_count() ||
        e.b >= site_count())
      throw std::invalid_argument("tiny: bad edge");
    if (e.q < 0 || e.q > 1) throw std::invalid_argument("tiny: bad edge prob");
  }
}

bool ExactDistribution::edge_open(uint32_t mask, int edge_index) const {
  const TinyEdge& e = tiny->edges[edge_index];
  if (e.q <= 0.0) return false;
  if (e.q >= 1.0) return true;
  for (int s = 0; s < n_stoch; ++s)
    if (stoch_index[s] == edge_index) return (mask >> (n_sites + s)) & 1;
  return false;
}

ExactDistribution enumerate(const TinyInstance& tiny, double lambda) {
  tiny.validate();
  ExactDistribution d;
  d.tiny = &tiny;
  d.lambda = lambda;
  d.n_sites = tiny.site_count();
  d.stoch_index = tiny.stochastic_edges();
  d.n_stoch = static_cast<int>(d.stoch_index.size());
  d.n_copies = tiny.gamma_tilde > 0.0 ? d.n_sites : 0;
  d.n_coords = d.n_sites + d.n_stoch + d.n_copies;

  d.p_coord.resize(d.n_coords);
  for (int i = 0; i < d.n_sites; ++i)
    d.p_coord[i] = -std::expm1(-lambda * tiny.sites[i].nu);
  for (int s = 0; s < d.n_stoch; ++s)
    d.p_coord[d.n_sites + s] = tiny.edges[d.stoch_index[s]].q;
  double h = -std::expm1(-tiny.gamma_tilde);
  for (int c = 0; c < d.n_copies; ++c)
    d.p_coord[d.n_sites + d.n_stoch + c] = h;

  uint32_t total = 1u << d.n_coords;
  d.probs.resize(total);
  for (uint32_t mask = 0; mask < total; ++mask) {
    double p = 1.0;
    for (int i = 0; i < d.n_coords; ++i)
      p *= ((mask >> i) & 1) ? d.p_coord[i] : 1.0 - d.p_coord[i];
    d.probs[mask] = p;
  }
  return d;
}

namespace {

// BFS membership of C(start) with the root-inclusion convention
void cluster_members(const ExactDistribution& dist, uint32_t mask, int start,
                     std::vector<uint8_t>& in) {
  const TinyInstance& t = *dist.tiny;
  in.assign(t.site_count(), 0);
  std::vector<int> stack{start};
  in[start] = 1;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    for (int e = 0; e < static_cast<int>(t.edges.size()); ++e) {
      const TinyEdge& ed = t.edges[e];
      int other;
      if (ed.a == cur)
        other = ed.b;
      else if (ed.b == cur)
        other = ed.a;
      else
        continue;
      if (in[other]) continue;
      if (!dist.site_open(mask, other)) continue;
      if (!dist.edge_open(mask, e)) continue;
      in[other] = 1;
      stack.push_back(other);
    }
  }
}

}  // namespace

uint64_t cluster_size(const ExactDistribution& dist, uint32_t mask, int start) {
  std::vector<uint8_t> in;
  cluster_members(dist, mask, start, in);
  uint64_t size = 0;
  for (uint8_t b : in) size += b;
  return size;
}

uint64_t cluster_size_excluding_root(const ExactDistribution& dist,
                                     uint32_t mask, int start) {
  std::vector<uint8_t> in;
  cluster_members(dist, mask, start, in);
  uint64_t size = 0;
  for (uint8_t b : in) size += b;
  if (in[dist.tiny->root]) --size;
  return size;
}

double exact_theta(const ExactDistribution& dist, uint64_t k) {
  double s = 0.0;
  for (uint32_t m = 0; m < dist.config_count(); ++m)
    if (cluster_size(dist, m, dist.tiny->root) >= k) s += dist.prob(m);
  return s;
}

double exact_magnetization(const ExactDistribution& dist, int site) {
  double g = dist.tiny->gamma_tilde;
  double s = 0.0;
  for (uint32_t m = 0; m < dist.config_count(); ++m)
    s += dist.prob(m) *
         -std::expm1(-g * static_cast<double>(cluster_size(dist, m, site)));
  return s;
}

namespace {

// graph adapter over one enumerated configuration
struct TinyGraph {
  const ExactDistribution* dist;
  uint32_t mask;
  std::vector<std::vector<std::pair<int, int>>> adj;  // site -> (other, edge)

  uint32_t vertex_count() const {
    return static_cast<uint32_t>(dist->n_sites);
  }
  bool vertex_open(uint32_t v) const { return dist->site_open(mask, v); }
  bool ghost_green(uint32_t v) const {
    return dist->n_copies > 0 && dist->copy_green(mask, v);
  }
  bool edge_open(uint32_t a, uint32_t b) const {
    for (auto [other, e] : adj[a])
      if (other == static_cast<int>(b)) return dist->edge_open(mask, e);
    return false;
  }
};

std::vector<std::vector<std::pair<int, int>>> build_adjacency(
    const TinyInstance& t) {
  std::vector<std::vector<std::pair<int, int>>> adj(t.site_count());
  for (int e = 0; e < static_cast<int>(t.edges.size()); ++e) {
    adj[t.edges[e].a].emplace_back(t.edges[e].b, e);
    adj[t.edges[e].b].emplace_back(t.edges[e].a, e);
  }
  // deterministic partner order: ascending site id
  for (auto& l : adj) std::sort(l.begin(), l.end());
  return adj;
}

struct MaskRecorder {
  uint32_t revealed_sites = 0;
  std::vector<uint64_t> revealed_edges;

  void tree_begin(uint32_t) {}
  void tree_end(uint32_t) {}
  void query_copy(uint32_t, bool) {}
  void query_vertex(uint32_t u, bool) { revealed_sites |= (1u << u); }
  void query_edge(uint32_t a, uint32_t b, bool) {
    uint64_t key = detail::pack_edge(a, b);
    if (std::find(revealed_edges.begin(), revealed_edges.end(), key) ==
        revealed_edges.end())
      revealed_edges.push_back(key);
  }
};

struct ForestConfigResult {
  bool g = false;
  uint32_t revealed_sites = 0;
  std::vector<uint64_t> revealed_edges;
};

ForestConfigResult run_tiny_forest(const ExactDistribution& dist, uint32_t mask,
                                   const std::vector<std::vector<std::pair<int, int>>>& adj,
                                   detail::ForestScratch& scratch) {
  TinyGraph g{&dist, mask, adj};
  MaskRecorder rec;
  bool gv = detail::run_forest(
      g, static_cast<uint32_t>(dist.tiny->root), rec, scratch);
  return ForestConfigResult{gv, rec.revealed_sites,
                            std::move(rec.revealed_edges)};
}

}  // namespace

double exact_revealment(const ExactDistribution& dist, const Coordinate& s) {
  if (s.kind == Coordinate::Kind::copy) return 1.0;
  auto adj = build_adjacency(*dist.tiny);
  detail::ForestScratch scratch;
  double total = 0.0;
  uint64_t want =
      s.kind == Coordinate::Kind::edge ? detail::pack_edge(s.a, s.b) : 0;
  for (uint32_t m = 0; m < dist.config_count(); ++m) {
    auto res = run_tiny_forest(dist, m, adj, scratch);
    bool hit = s.kind == Coordinate::Kind::vertex
                   ? (res.revealed_sites >> s.a) & 1
                   : std::find(res.revealed_edges.begin(),
                               res.revealed_edges.end(),
                               want) != res.revealed_edges.end();
    if (hit) total += dist.prob(m);
  }
  return total;
}

namespace {

int coordinate_bit(const ExactDistribution& dist, const Coordinate& s) {
  switch (s.kind) {
    case Coordinate::Kind::vertex:
      return static_cast<int>(s.a);
    case Coordinate::Kind::copy:
      if (dist.n_copies == 0) return -1;
      return dist.n_sites + dist.n_stoch + static_cast<int>(s.a);
    case Coordinate::Kind::edge: {
      for (int t = 0; t < dist.n_stoch; ++t) {
        const TinyEdge& e = dist.tiny->edges[dist.stoch_index[t]];
        if ((static_cast<VertexId>(e.a) == s.a &&
             static_cast<VertexId>(e.b) == s.b) ||
            (static_cast<VertexId>(e.a) == s.b &&
             static_cast<VertexId>(e.b) == s.a))
          return dist.n_sites + t;
      }
      return -1;  // deterministic edge: resampling never changes it
    }
  }
  return -1;
}

}  // namespace

double exact_influence(const ExactDistribution& dist, const Coordinate& s,
                       uint64_t k) {
  int bit = coordinate_bit(dist, s);
  if (bit < 0) return 0.0;
  if (s.kind == Coordinate::Kind::copy) return 0.0;  // f ignores copies
  double total = 0.0;
  for (uint32_t m = 0; m < dist.config_count(); ++m) {
    uint32_t flipped = m ^ (1u << bit);
    bool f0 = cluster_size(dist, m, dist.tiny->root) >= k;
    bool f1 = cluster_size(dist, flipped, dist.tiny->root) >= k;
    if (f0 == f1) continue;
    // resample lands on the opposite value
    double p = dist.p_coord[bit];
    total += dist.prob(m) * (((m >> bit) & 1) ? 1.0 - p : p);
  }
  return total;
}

double exact_cov_fg(const ExactDistribution& dist, uint64_t k) {
  auto adj = build_adjacency(*dist.tiny);
  detail::ForestScratch scratch;
  double ef = 0, eg = 0, efg = 0;
  for (uint32_t m = 0; m < dist.config_count(); ++m) {
    double p = dist.prob(m);
    bool f = cluster_size(dist, m, dist.tiny->root) >= k;
    auto res = run_tiny_forest(dist, m, adj, scratch);
    if (f) ef += p;
    if (res.g) eg += p;
    if (f && res.g) efg += p;
  }
  return efg - ef * eg;
}

DerivativeCheck exact_derivative(const TinyInstance& tiny, uint64_t k,
                                 double lambda, double step) {
  if (step < 1e-6 || step > 1e-3)
    throw std::invalid_argument("exact_derivative: step outside [1e-6, 1e-3]");
  DerivativeCheck out;
  ExactDistribution lo = enumerate(tiny, lambda - step);
  ExactDistribution hi = enumerate(tiny, lambda + step);
  out.finite_difference =
      (exact_theta(hi, k) - exact_theta(lo, k)) / (2.0 * step);

  ExactDistribution mid = enumerate(tiny, lambda);
  double cov_sum = 0.0, density = 0.0;
  std::vector<double> fvals(mid.config_count());
  for (uint32_t m = 0; m < mid.config_count(); ++m)
    fvals[m] = cluster_size(mid, m, tiny.root) >= k ? 1.0 : 0.0;
  double ef = 0.0;
  for (uint32_t m = 0; m < mid.config_count(); ++m) ef += fvals[m] * mid.prob(m);
  for (int i = 0; i < mid.n_sites; ++i) {
    double p = mid.p_coord[i];
    double e_fi = 0.0;
    for (uint32_t m = 0; m < mid.config_count(); ++m)
      if ((m >> i) & 1) e_fi += fvals[m] * mid.prob(m);
    double cov = e_fi - ef * p;
    cov_sum += tiny.sites[i].nu / p * cov;
  }
  for (uint32_t m = 0; m < mid.config_count(); ++m) {
    double factor = 0.0;
    for (int i = 0; i < mid.n_sites; ++i) {
      double p = mid.p_coord[i];
      factor += tiny.sites[i].nu * ((((m >> i) & 1) ? 1.0 / p : 0.0) - 1.0);
    }
    density += fvals[m] * mid.prob(m) * factor;
  }
  out.covariance_sum = cov_sum;
  out.density_form = density;
  return out;
}

InequalityReport osss_check_exact(const TinyInstance& tiny, double lambda,
                                  uint64_t k) {
  if (tiny.gamma_tilde <= 0)
    throw std::invalid_argument("osss_check_exact: needs a ghost field");
  ExactDistribution dist = enumerate(tiny, lambda);
  InequalityReport rep;
  rep.lhs = std::fabs(exact_cov_fg(dist, k));

  double rhs = 0.0;
  auto add = [&](const Coordinate& c) {
    double delta = exact_revealment(dist, c);
    double infl = exact_influence(dist, c, k);
    rhs += delta * infl;
    rep.table.push_back({c, delta, infl});
  };
  for (int i = 0; i < dist.n_sites; ++i) add(Coordinate::vertex(i));
  for (int t = 0; t < dist.n_stoch; ++t) {
    const TinyEdge& e = tiny.edges[dist.stoch_index[t]];
    add(Coordinate::edge(e.a, e.b));
  }
  for (int i = 0; i < dist.n_sites; ++i) add(Coordinate::copy(i));
  rep.rhs = 0.5 * rhs;
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

InequalityReport prop_ghost_lower_bound_exact(const TinyInstance& tiny,
                                              double lambda, uint64_t k,
                                              double gamma) {
  TinyInstance t = tiny;
  t.gamma_tilde = gamma / static_cast<double>(k);
  ExactDistribution dist = enumerate(t, lambda);

  double theta = exact_theta(dist, k);
  double mag = 0.0;
  for (uint32_t m = 0; m < dist.config_count(); ++m)
    mag += dist.prob(m) *
           -std::expm1(-gamma *
                       static_cast<double>(cluster_size(dist, m, t.root)) /
                       static_cast<double>(k));

  InequalityReport rep;
  double vertex_sum = 0.0, edge_sum = 0.0;
  for (int i = 0; i < dist.n_sites; ++i) {
    Coordinate c = Coordinate::vertex(i);
    double delta = exact_revealment(dist, c);
    double infl = exact_influence(dist, c, k);
    vertex_sum += delta * infl;
    rep.table.push_back({c, delta, infl});
  }
  for (int s = 0; s < dist.n_stoch; ++s) {
    const TinyEdge& e = t.edges[dist.stoch_index[s]];
    Coordinate c = Coordinate::edge(e.a, e.b);
    double delta = exact_revealment(dist, c);
    double infl = exact_influence(dist, c, k);
    edge_sum += delta * infl;
    rep.table.push_back({c, delta, infl});
  }
  rep.lhs = (-std::expm1(-gamma) - mag) * theta - edge_sum;
  rep.rhs = vertex_sum;
  rep.slack = rep.rhs - rep.lhs;
  return rep;
}

std::vector<MagnetizationIdentity> magnetization_identity_exact(
    const TinyInstance& tiny, double lambda) {
  if (tiny.gamma_tilde <= 0)
    throw std::invalid_argument("magnetization_identity_exact: needs ghosts");
  ExactDistribution dist = enumerate(tiny, lambda);
  double g = tiny.gamma_tilde;
  std::vector<MagnetizationIdentity> out;
  for (int i = 0; i < dist.n_sites; ++i) {
    double delta = exact_revealment(dist, Coordinate::vertex(i));
    // the root's tree reveals only its copy, so the root is never a witness:
    // the exact law counts the cluster without it (for every vertex)
    double mag = 0.0;
    for (uint32_t m = 0; m < dist.config_count(); ++m)
      mag += dist.prob(m) *
             -std::expm1(-g * static_cast<double>(
                                  cluster_size_excluding_root(dist, m, i)));
    out.push_back({i, delta, mag});
  }
  return out;
}

TinyInstance random_tiny(rng::Seed128 seed, uint64_t index, int max_sites,
                         bool with_ghost, double gamma_tilde) {
  rng::Stream st(seed, rng::Tag::experiment, index);
  TinyInstance t;
  int n_sites = 2 + static_cast<int>(st.next_below(max_sites - 1));
  for (int i = 0; i < n_sites; ++i)
    t.sites.push_back({0.25 + 1.5 * st.next_unit()});
  t.root = 0;
  // random connected-ish topology: a spanning tree plus extras
  for (int i = 1; i < n_sites; ++i) {
    int j = static_cast<int>(st.next_below(i));
    t.edges.push_back({j, i, 0.1 + 0.8 * st.next_unit()});
  }
  int budget = with_ghost ? 24 - 2 * n_sites : 24 - n_sites;
  int extra = static_cast<int>(st.next_below(3));
  for (int e = 0; e < extra; ++e) {
    if (static_cast<int>(t.edges.size()) >= budget) break;
    int a = static_cast<int>(st.next_below(n_sites));
    int b = static_cast<int>(st.next_below(n_sites));
    if (a == b) continue;
    bool dup = false;
    for (auto& ed : t.edges)
      if ((ed.a == std::min(a, b) && ed.b == std::max(a, b)) ||
          (ed.a == std::max(a, b) && ed.b == std::min(a, b)))
        dup = true;
    if (!dup) t.edges.push_back({a, b, 0.1 + 0.8 * st.next_unit()});
  }
  t.gamma_tilde = with_ghost ? gamma_tilde : 0.0;
  return t;
}

TinyInstance from_lattice(const LatticeSpec& spec, double gamma_tilde) {
  TinyInstance t;
  int64_t nv = spec.vertex_count();
  if (nv > 24) throw std::invalid_argument("from_lattice: too many vertices");
  for (int64_t v = 0; v < nv; ++v)
    t.sites.push_back(
        {spec.cell_volume * spec.bin_mass[spec.bin_of(static_cast<VertexId>(v))]});
  for (int64_t a = 0; a < nv; ++a)
    for (int64_t b = a + 1; b < nv; ++b) {
      double q = spec.edge_prob(static_cast<VertexId>(a),
                                static_cast<VertexId>(b));
      if (q > 0.0)
        t.edges.push_back(
            {static_cast<int>(a), static_cast<int>(b), q});
    }
  t.root = static_cast<int>(spec.root());
  t.gamma_tilde = gamma_tilde;
  t.validate();
  return t;
}

}  // namespace wrcm::oracle
