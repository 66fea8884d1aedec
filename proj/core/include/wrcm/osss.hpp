#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wrcm/lattice.hpp"
#include "wrcm/stats.hpp"

namespace wrcm {

// Ghost field: one independent copy vertex per lattice vertex, open with
// probability h = 1 - exp(-gamma_tilde).
struct GhostField {
  double gamma_tilde = 0.0;
  double h() const { return -std::expm1(-gamma_tilde); }
};

// Coordinate of the product space V cup Vtilde cup E.
struct Coordinate {
  enum class Kind { vertex, copy, edge } kind = Kind::vertex;
  VertexId a = 0;
  VertexId b = 0;  // edges only

  static Coordinate vertex(VertexId v) { return {Kind::vertex, v, 0}; }
  static Coordinate copy(VertexId v) { return {Kind::copy, v, 0}; }
  static Coordinate edge(VertexId x, VertexId y) {
    if (x > y) std::swap(x, y);
    return {Kind::edge, x, y};
  }
  std::string label() const;
};

// Full query log of one decision-forest run (test and fixture use).
struct TreeTrace {
  VertexId tree_vertex = 0;
  std::vector<Coordinate> queries;          // in query order
  std::vector<VertexId> revealed_open;      // final A
  std::vector<VertexId> revealed_closed;    // final B
  std::vector<std::pair<VertexId, VertexId>> open_edges;    // final O
  std::vector<std::pair<VertexId, VertexId>> closed_edges;  // final C
};

struct ForestTrace {
  bool g_value = false;
  std::vector<TreeTrace> trees;
};

// Lean per-replica outcome: the union over trees of revealed coordinates.
// Copies are revealed with probability one (every tree starts at its own
// copy) and are not materialized.
struct ForestOutcome {
  bool g_value = false;
  std::vector<VertexId> revealed_vertices;  // unique, unsorted
  std::vector<uint64_t> revealed_edges;     // packed (min<<32|max), unique
};

// g evaluated directly from the configuration: 1 iff some vertex of C(root)
// is green (the root itself counts regardless of its state).
bool ghost_event_direct(const LatticeInstance& inst, const GhostField& ghost);

ForestOutcome run_forest(const LatticeInstance& inst, const GhostField& ghost,
                         bool record_edges = false);
ForestTrace run_forest_traced(const LatticeInstance& inst,
                              const GhostField& ghost);

// Monte Carlo revealment of one coordinate.
Estimate revealment(const LatticeSpec& spec, double lambda, double gamma_tilde,
                    const Coordinate& s, uint64_t samples, rng::Seed128 seed,
                    int threads = 0);

// E[1 - exp(-gamma_tilde |C(u)|)] via cluster sizes on the same replica
// stream as revealment.
Estimate magnetization(const LatticeSpec& spec, double lambda,
                       double gamma_tilde, VertexId u, uint64_t samples,
                       rng::Seed128 seed, int threads = 0);

// E[1 - exp(-gamma_tilde |C(u) \ {root}|)]: the exact revealment law of the
// forest, whose root tree reveals only its copy and therefore never
// contributes the root as a witness.
Estimate magnetization_excluding_root(const LatticeSpec& spec, double lambda,
                                      double gamma_tilde, VertexId u,
                                      uint64_t samples, rng::Seed128 seed,
                                      int threads = 0);

// Resampling influence of one coordinate on {|C(root)| >= k}.
Estimate influence(const LatticeSpec& spec, double lambda, const Coordinate& s,
                   uint64_t k, uint64_t samples, rng::Seed128 seed,
                   int threads = 0);

struct CoordinateContribution {
  Coordinate coord;
  double delta = 0.0;  // revealment
  double infl = 0.0;   // influence on f
};

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;   // rhs - lhs
  double sigma = 0.0;   // 0 in exact mode
  std::vector<CoordinateContribution> table;
};

// Monte Carlo check of |Cov(f, g)| <= 1/2 sum_s delta_s Inf_s(f) on a
// lattice. Revealments come from forest runs on one half of the replicas;
// influences and the covariance from the other half; `repeats` independent
// repetitions give the slack sigma.
InequalityReport osss_check_monte_carlo(const LatticeSpec& spec, double lambda,
                                        uint64_t k, double gamma_tilde,
                                        uint64_t samples, int repeats,
                                        rng::Seed128 seed, int threads = 0);

// Monte Carlo check of the magnetization lower bound
//   (1 - e^-gamma - E[1 - e^{-gamma |C|/k}]) theta(k) - sum_e delta Inf_e
//     <= sum_u delta Inf_u
InequalityReport prop_ghost_lower_bound_monte_carlo(
    const LatticeSpec& spec, double lambda, uint64_t k, double gamma,
    uint64_t samples, int repeats, rng::Seed128 seed, int threads = 0);

// Edge influence sum I^{n,L,gamma~} =
//   (1/delta(root)) sum_e delta(e) Inf_e(1{|C(root)| >= k})
Estimate edge_influence_sum(const LatticeSpec& spec, double lambda, uint64_t k,
                            double gamma_tilde, uint64_t samples, int repeats,
                            rng::Seed128 seed, int threads = 0);

}  // namespace wrcm
