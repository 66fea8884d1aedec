#include "wrcm/osss.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "wrcm/detail/forest.hpp"

namespace wrcm {

std::string Coordinate::label() const {
  switch (kind) {
    case Kind::vertex:
      return "v" + std::to_string(a);
    case Kind::copy:
      return "c" + std::to_string(a);
    case Kind::edge:
      return "e" + std::to_string(a) + "-" + std::to_string(b);
  }
  return "?";
}

namespace {

// lattice adapter for the shared forest core
struct LatticeGraph {
  const LatticeInstance* inst;
  double h;

  uint32_t vertex_count() const {
    return static_cast<uint32_t>(inst->spec->vertex_count());
  }
  bool vertex_open(uint32_t v) const { return inst->vertex_open(v); }
  bool ghost_green(uint32_t v) const { return inst->ghost_green(v, h); }
  bool edge_open(uint32_t a, uint32_t b) const { return inst->edge_open(a, b); }
};

struct LeanRecorder {
  ForestOutcome* out;
  bool record_edges;
  std::vector<uint32_t>* vertex_epoch;
  std::vector<uint32_t>* edge_dedup_epoch;  // unused placeholder
  uint32_t epoch;
  detail::ForestScratch* edge_union = nullptr;  // replica-level edge set

  void tree_begin(uint32_t) {}
  void tree_end(uint32_t) {}
  void query_copy(uint32_t, bool) {}
  void query_vertex(uint32_t u, bool) {
    if ((*vertex_epoch)[u] != epoch) {
      (*vertex_epoch)[u] = epoch;
      out->revealed_vertices.push_back(u);
    }
  }
  void query_edge(uint32_t a, uint32_t b, bool) {
    if (!record_edges) return;
    uint64_t key = detail::pack_edge(a, b);
    if (edge_union->edge_mark(key)) out->revealed_edges.push_back(key);
  }
};

struct FullRecorder {
  ForestTrace* out;
  TreeTrace* cur = nullptr;

  void tree_begin(uint32_t u) {
    out->trees.emplace_back();
    cur = &out->trees.back();
    cur->tree_vertex = u;
  }
  void tree_end(uint32_t) { cur = nullptr; }
  void query_copy(uint32_t u, bool) { cur->queries.push_back(Coordinate::copy(u)); }
  void query_vertex(uint32_t u, bool open) {
    cur->queries.push_back(Coordinate::vertex(u));
    (open ? cur->revealed_open : cur->revealed_closed).push_back(u);
  }
  void query_edge(uint32_t a, uint32_t b, bool open) {
    cur->queries.push_back(Coordinate::edge(a, b));
    auto& set = open ? cur->open_edges : cur->closed_edges;
    set.emplace_back(std::min(a, b), std::max(a, b));
  }
};

thread_local detail::ForestScratch tl_scratch;
thread_local detail::ForestScratch tl_edge_union;
thread_local std::vector<uint32_t> tl_vertex_epoch;
thread_local uint32_t tl_epoch = 0;

}  // namespace

ForestOutcome run_forest(const LatticeInstance& inst, const GhostField& ghost,
                         bool record_edges) {
  LatticeGraph g{&inst, ghost.h()};
  ForestOutcome out;
  uint32_t n = g.vertex_count();
  if (tl_vertex_epoch.size() < n) tl_vertex_epoch.assign(n, 0);
  ++tl_epoch;
  tl_edge_union.reset(n);
  tl_edge_union.next_tree();  // one union epoch per replica
  LeanRecorder rec{&out, record_edges, &tl_vertex_epoch, nullptr, tl_epoch,
                   &tl_edge_union};
  out.g_value =
      detail::run_forest(g, static_cast<uint32_t>(inst.spec->root()), rec,
                         tl_scratch);
  return out;
}

ForestTrace run_forest_traced(const LatticeInstance& inst,
                              const GhostField& ghost) {
  LatticeGraph g{&inst, ghost.h()};
  ForestTrace out;
  FullRecorder rec{&out};
  detail::ForestScratch scratch;
  out.g_value = detail::run_forest(
      g, static_cast<uint32_t>(inst.spec->root()), rec, scratch);
  return out;
}

bool ghost_event_direct(const LatticeInstance& inst, const GhostField& ghost) {
  ReplicaAnalysis an(inst);
  double h = ghost.h();
  for (VertexId v : an.root_members())
    if (inst.ghost_green(v, h)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Monte Carlo revealment / magnetization / influence
// ---------------------------------------------------------------------------

Estimate revealment(const LatticeSpec& spec, double lambda, double gamma_tilde,
                    const Coordinate& s, uint64_t samples, rng::Seed128 seed,
                    int threads) {
  if (s.kind == Coordinate::Kind::copy)
    return Estimate{1.0, 0.0, samples, seed};  // every tree queries its copy
  GhostField ghost{gamma_tilde};
  int chunks = 64;
  std::vector<stats::Accumulator> acc(chunks);
  uint64_t want_edge =
      s.kind == Coordinate::Kind::edge ? detail::pack_edge(s.a, s.b) : 0;
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        for (uint64_t rep = begin; rep < end; ++rep) {
          LatticeInstance inst = sample_instance(spec, lambda, seed, rep);
          ForestOutcome fo =
              run_forest(inst, ghost, s.kind == Coordinate::Kind::edge);
          bool hit = false;
          if (s.kind == Coordinate::Kind::vertex) {
            hit = std::find(fo.revealed_vertices.begin(),
                            fo.revealed_vertices.end(),
                            s.a) != fo.revealed_vertices.end();
          } else {
            hit = std::find(fo.revealed_edges.begin(), fo.revealed_edges.end(),
                            want_edge) != fo.revealed_edges.end();
          }
          acc[chunk].add(hit ? 1.0 : 0.0);
        }
      },
      chunks);
  stats::Accumulator total;
  for (auto& a : acc) total.merge(a);
  return total.estimate(seed);
}

namespace {

Estimate magnetization_impl(const LatticeSpec& spec, double lambda,
                            double gamma_tilde, VertexId u, uint64_t samples,
                            rng::Seed128 seed, int threads,
                            bool exclude_root) {
  (void)threads;
  int chunks = 64;
  std::vector<stats::Accumulator> acc(chunks);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        for (uint64_t rep = begin; rep < end; ++rep) {
          LatticeInstance inst = sample_instance(spec, lambda, seed, rep);
          ReplicaAnalysis an(inst);
          uint64_t size = exclude_root ? an.cluster_size_excluding_root(u)
                                       : an.cluster_size_of(u);
          acc[chunk].add(-std::expm1(-gamma_tilde * static_cast<double>(size)));
        }
      },
      chunks);
  stats::Accumulator total;
  for (auto& a : acc) total.merge(a);
  return total.estimate(seed);
}

}  // namespace

Estimate magnetization(const LatticeSpec& spec, double lambda,
                       double gamma_tilde, VertexId u, uint64_t samples,
                       rng::Seed128 seed, int threads) {
  return magnetization_impl(spec, lambda, gamma_tilde, u, samples, seed,
                            threads, false);
}

Estimate magnetization_excluding_root(const LatticeSpec& spec, double lambda,
                                      double gamma_tilde, VertexId u,
                                      uint64_t samples, rng::Seed128 seed,
                                      int threads) {
  return magnetization_impl(spec, lambda, gamma_tilde, u, samples, seed,
                            threads, true);
}

namespace {

bool event_with_coordinate_resampled(const LatticeInstance& inst,
                                     const Coordinate& s, uint64_t k,
                                     double resample_u) {
  const LatticeSpec& spec = *inst.spec;
  ReplicaAnalysis an(inst);
  bool f0 = an.event_holds(k);
  switch (s.kind) {
    case Coordinate::Kind::copy:
      return f0;  // f does not read copies
    case Coordinate::Kind::vertex: {
      bool now = inst.vertex_open(s.a);
      bool resampled = resample_u < spec.p_open(spec.bin_of(s.a), inst.lambda);
      if (now == resampled) return f0;
      if (!an.vertex_pivotal(s.a, k)) return f0;
      return !f0;
    }
    case Coordinate::Kind::edge: {
      double q = spec.edge_prob(s.a, s.b);
      bool now = inst.edge_open(s.a, s.b);
      bool resampled = resample_u < q;
      if (now == resampled) return f0;
      auto piv = an.pivotal_edges(k);
      uint64_t key = detail::pack_edge(s.a, s.b);
      if (std::find(piv.begin(), piv.end(), key) == piv.end()) return f0;
      return !f0;
    }
  }
  return f0;
}

}  // namespace

Estimate influence(const LatticeSpec& spec, double lambda, const Coordinate& s,
                   uint64_t k, uint64_t samples, rng::Seed128 seed,
                   int threads) {
  int chunks = 64;
  std::vector<stats::Accumulator> acc(chunks);
  stats::parallel_replicas(
      samples, threads,
      [&](uint64_t begin, uint64_t end, int chunk) {
        for (uint64_t rep = begin; rep < end; ++rep) {
          LatticeInstance inst = sample_instance(spec, lambda, seed, rep);
          rng::Stream rs(seed, rng::Tag::resample, rep);
          double u = rs.next_unit();
          ReplicaAnalysis an(inst);
          bool f0 = an.event_holds(k);
          bool f1 = event_with_coordinate_resampled(inst, s, k, u);
          acc[chunk].add(f0 != f1 ? 1.0 : 0.0);
        }
      },
      chunks);
  stats::Accumulator total;
  for (auto& a : acc) total.merge(a);
  return total.estimate(seed);
}

// ---------------------------------------------------------------------------
// Inequality estimates
// ---------------------------------------------------------------------------

namespace {

struct SlackSample {
  double lhs = 0.0;
  double rhs = 0.0;
};

// One independent repetition of the OSSS covariance bound estimate.
// Half A estimates revealments (forest); half B estimates influences (via
// pivotal scans) and Cov(f, g).
SlackSample osss_one_repeat(const LatticeSpec& spec, double lambda, uint64_t k,
                            double gamma_tilde, uint64_t samples,
                            rng::Seed128 seed, int threads) {
  (void)threads;  // repeats parallelize one level up
  GhostField ghost{gamma_tilde};
  int64_t nv = spec.vertex_count();
  uint64_t half = samples / 2;

  // A: vertex revealment counts and edge revealment map
  std::vector<double> delta_v(static_cast<size_t>(nv), 0.0);
  std::unordered_map<uint64_t, double> delta_e;
  rng::Seed128 seed_a = rng::derive_seed(seed, 0xA);
  for (uint64_t rep = 0; rep < half; ++rep) {
    LatticeInstance inst = sample_instance(spec, lambda, seed_a, rep);
    ForestOutcome fo = run_forest(inst, ghost, true);
    for (VertexId v : fo.revealed_vertices) delta_v[v] += 1.0;
    for (uint64_t e : fo.revealed_edges) delta_e[e] += 1.0;
  }
  for (auto& d : delta_v) d /= static_cast<double>(half);
  for (auto& [e, d] : delta_e) d /= static_cast<double>(half);

  // B: influences via pivotality plus the covariance
  std::vector<double> piv_v(static_cast<size_t>(nv), 0.0);
  std::unordered_map<uint64_t, double> piv_e;
  double sf = 0, sg = 0, sfg = 0;
  rng::Seed128 seed_b = rng::derive_seed(seed, 0xB);
  for (uint64_t rep = 0; rep < half; ++rep) {
    LatticeInstance inst = sample_instance(spec, lambda, seed_b, rep);
    ReplicaAnalysis an(inst);
    double f = an.event_holds(k) ? 1.0 : 0.0;
    double h = ghost.h();
    bool greenhit = false;
    for (VertexId v : an.root_members())
      if (inst.ghost_green(v, h)) {
        greenhit = true;
        break;
      }
    double g = greenhit ? 1.0 : 0.0;
    sf += f;
    sg += g;
    sfg += f * g;
    for (int64_t v = 0; v < nv; ++v)
      if (an.vertex_pivotal(static_cast<VertexId>(v), k)) piv_v[v] += 1.0;
    for (uint64_t e : an.pivotal_edges(k)) piv_e[e] += 1.0;
  }
  double nb = static_cast<double>(half);
  double cov = sfg / nb - (sf / nb) * (sg / nb);

  double rhs = 0.0;
  for (int64_t v = 0; v < nv; ++v) {
    int bin = spec.bin_of(static_cast<VertexId>(v));
    double p = spec.p_open(bin, lambda);
    double inf = 2.0 * p * (1.0 - p) * (piv_v[v] / nb);
    rhs += delta_v[v] * inf;
  }
  for (auto& [e, cnt] : piv_e) {
    auto it = delta_e.find(e);
    if (it == delta_e.end()) continue;
    VertexId a = static_cast<VertexId>(e >> 32);
    VertexId b = static_cast<VertexId>(e);
    double q = spec.edge_prob(a, b);
    double inf = 2.0 * q * (1.0 - q) * (cnt / nb);
    rhs += it->second * inf;
  }
  return SlackSample{std::fabs(cov), 0.5 * rhs};
}

}  // namespace

InequalityReport osss_check_monte_carlo(const LatticeSpec& spec, double lambda,
                                        uint64_t k, double gamma_tilde,
                                        uint64_t samples, int repeats,
                                        rng::Seed128 seed, int threads) {
  uint64_t per = samples / static_cast<uint64_t>(repeats);
  std::vector<SlackSample> reps(repeats);
  stats::parallel_replicas(
      static_cast<uint64_t>(repeats), threads,
      [&](uint64_t begin, uint64_t end, int) {
        for (uint64_t r = begin; r < end; ++r)
          reps[r] = osss_one_repeat(spec, lambda, k, gamma_tilde, per,
                                    rng::derive_seed(seed, r), 1);
      },
      repeats);
  stats::Accumulator lhs, rhs, slack;
  for (auto& s : reps) {
    lhs.add(s.lhs);
    rhs.add(s.rhs);
    slack.add(s.rhs - s.lhs);
  }
  InequalityReport rep;
  rep.lhs = lhs.mean();
  rep.rhs = rhs.mean();
  rep.slack = slack.mean();
  rep.sigma = slack.se();
  return rep;
}

namespace {

// One repetition of both sides of the ghost-field lower bound.
SlackSample ghost_bound_one_repeat(const LatticeSpec& spec, double lambda,
                                   uint64_t k, double gamma, uint64_t samples,
                                   rng::Seed128 seed) {
  double gamma_tilde = gamma / static_cast<double>(k);
  GhostField ghost{gamma_tilde};
  int64_t nv = spec.vertex_count();
  uint64_t half = samples / 2;

  std::vector<double> delta_v(static_cast<size_t>(nv), 0.0);
  std::unordered_map<uint64_t, double> delta_e;
  rng::Seed128 seed_a = rng::derive_seed(seed, 0xA);
  for (uint64_t rep = 0; rep < half; ++rep) {
    LatticeInstance inst = sample_instance(spec, lambda, seed_a, rep);
    ForestOutcome fo = run_forest(inst, ghost, true);
    for (VertexId v : fo.revealed_vertices) delta_v[v] += 1.0;
    for (uint64_t e : fo.revealed_edges) delta_e[e] += 1.0;
  }
  for (auto& d : delta_v) d /= static_cast<double>(half);
  for (auto& [e, d] : delta_e) d /= static_cast<double>(half);

  std::vector<double> piv_v(static_cast<size_t>(nv), 0.0);
  std::unordered_map<uint64_t, double> piv_e;
  double stheta = 0.0, smag = 0.0;
  rng::Seed128 seed_b = rng::derive_seed(seed, 0xB);
  for (uint64_t rep = 0; rep < half; ++rep) {
    LatticeInstance inst = sample_instance(spec, lambda, seed_b, rep);
    ReplicaAnalysis an(inst);
    stheta += an.event_holds(k) ? 1.0 : 0.0;
    smag += -std::expm1(-gamma *
                        static_cast<double>(an.root_cluster_size()) /
                        static_cast<double>(k));
    for (int64_t v = 0; v < nv; ++v)
      if (an.vertex_pivotal(static_cast<VertexId>(v), k)) piv_v[v] += 1.0;
    for (uint64_t e : an.pivotal_edges(k)) piv_e[e] += 1.0;
  }
  double nb = static_cast<double>(half);
  double theta = stheta / nb;
  double mag = smag / nb;

  double vertex_sum = 0.0;
  for (int64_t v = 0; v < nv; ++v) {
    int bin = spec.bin_of(static_cast<VertexId>(v));
    double p = spec.p_open(bin, lambda);
    vertex_sum += delta_v[v] * 2.0 * p * (1.0 - p) * (piv_v[v] / nb);
  }
  double edge_sum = 0.0;
  for (auto& [e, cnt] : piv_e) {
    auto it = delta_e.find(e);
    if (it == delta_e.end()) continue;
    VertexId a = static_cast<VertexId>(e >> 32);
    VertexId b = static_cast<VertexId>(e);
    double q = spec.edge_prob(a, b);
    edge_sum += it->second * 2.0 * q * (1.0 - q) * (cnt / nb);
  }
  double lhs = (-std::expm1(-gamma) - mag) * theta - edge_sum;
  return SlackSample{lhs, vertex_sum};
}

}  // namespace

InequalityReport prop_ghost_lower_bound_monte_carlo(
    const LatticeSpec& spec, double lambda, uint64_t k, double gamma,
    uint64_t samples, int repeats, rng::Seed128 seed, int threads) {
  uint64_t per = samples / static_cast<uint64_t>(repeats);
  std::vector<SlackSample> reps(repeats);
  stats::parallel_replicas(
      static_cast<uint64_t>(repeats), threads,
      [&](uint64_t begin, uint64_t end, int) {
        for (uint64_t r = begin; r < end; ++r)
          reps[r] = ghost_bound_one_repeat(spec, lambda, k, gamma, per,
                                           rng::derive_seed(seed, r));
      },
      repeats);
  stats::Accumulator lhs, rhs, slack;
  for (auto& s : reps) {
    lhs.add(s.lhs);
    rhs.add(s.rhs);
    slack.add(s.rhs - s.lhs);
  }
  InequalityReport rep;
  rep.lhs = lhs.mean();
  rep.rhs = rhs.mean();
  rep.slack = slack.mean();
  rep.sigma = slack.se();
  return rep;
}

Estimate edge_influence_sum(const LatticeSpec& spec, double lambda, uint64_t k,
                            double gamma_tilde, uint64_t samples, int repeats,
                            rng::Seed128 seed, int threads) {
  GhostField ghost{gamma_tilde};
  uint64_t per = samples / static_cast<uint64_t>(repeats);
  std::vector<double> vals(repeats, 0.0);
  stats::parallel_replicas(
      static_cast<uint64_t>(repeats), threads,
      [&](uint64_t begin, uint64_t end, int) {
        for (uint64_t r = begin; r < end; ++r) {
          rng::Seed128 sr = rng::derive_seed(seed, r);
          uint64_t half = per / 2;
          std::unordered_map<uint64_t, double> delta_e;
          rng::Seed128 seed_a = rng::derive_seed(sr, 0xA);
          for (uint64_t rep = 0; rep < half; ++rep) {
            LatticeInstance inst = sample_instance(spec, lambda, seed_a, rep);
            ForestOutcome fo = run_forest(inst, ghost, true);
            for (uint64_t e : fo.revealed_edges) delta_e[e] += 1.0;
          }
          double na = static_cast<double>(half);
          // normalizer: delta(root) through the magnetization identity
          double delta_root = 0.0;
          std::unordered_map<uint64_t, double> piv_e;
          rng::Seed128 seed_b = rng::derive_seed(sr, 0xB);
          for (uint64_t rep = 0; rep < half; ++rep) {
            LatticeInstance inst = sample_instance(spec, lambda, seed_b, rep);
            ReplicaAnalysis an(inst);
            delta_root += -std::expm1(
                -gamma_tilde *
                static_cast<double>(an.root_cluster_size() - 1));
            for (uint64_t e : an.pivotal_edges(k)) piv_e[e] += 1.0;
          }
          delta_root /= na;
          double sum = 0.0;
          for (auto& [e, cnt] : piv_e) {
            auto it = delta_e.find(e);
            if (it == delta_e.end()) continue;
            VertexId a = static_cast<VertexId>(e >> 32);
            VertexId b = static_cast<VertexId>(e);
            double q = spec.edge_prob(a, b);
            sum += (it->second / na) * 2.0 * q * (1.0 - q) * (cnt / na);
          }
          vals[r] = delta_root > 0 ? sum / delta_root : 0.0;
        }
      },
      repeats);
  stats::Accumulator acc;
  for (double v : vals) acc.add(v);
  return acc.estimate(seed);
}

}  // namespace wrcm
