#pragma once

#include <cstdint>
#include <vector>

#include "wrcm/lattice.hpp"
#include "wrcm/osss.hpp"
#include "wrcm/rng.hpp"

namespace wrcm::oracle {

// Explicit finite product space for exhaustive enumeration. Coordinates are
// the sites, the stochastic edges (0 < q < 1), and, when gamma_tilde > 0,
// one copy per site. Deterministic edges stay part of the graph but carry no
// coordinate.
struct TinySite {
  double nu = 1.0;  // open probability 1 - exp(-lambda nu)
};

struct TinyEdge {
  int a = 0;
  int b = 0;
  double q = 0.5;
};

struct TinyInstance {
  std::vector<TinySite> sites;
  std::vector<TinyEdge> edges;
  double gamma_tilde = 0.0;
  int root = 0;

  int site_count() const { return static_cast<int>(sites.size()); }
  std::vector<int> stochastic_edges() const;  // indices into `edges`
  int total_coordinates() const;
  void validate() const;  // coordinate cap 24, probabilities in [0,1]
};

// Dense probability table over 2^{|S|} configurations at a fixed intensity.
struct ExactDistribution {
  const TinyInstance* tiny = nullptr;
  double lambda = 1.0;
  int n_sites = 0;
  int n_stoch = 0;
  int n_copies = 0;
  int n_coords = 0;
  std::vector<int> stoch_index;   // stochastic edge slots -> edge index
  std::vector<double> p_coord;    // marginal open probability per coordinate
  std::vector<double> probs;      // size 2^n_coords, sums to 1 within 1e-12

  bool site_open(uint32_t mask, int i) const { return (mask >> i) & 1; }
  bool copy_green(uint32_t mask, int i) const {
    return (mask >> (n_sites + n_stoch + i)) & 1;
  }
  bool edge_open(uint32_t mask, int edge_index) const;
  double prob(uint32_t mask) const { return probs[mask]; }
  uint32_t config_count() const { return 1u << n_coords; }
};

ExactDistribution enumerate(const TinyInstance& tiny, double lambda);

// |C(start)| with the root-inclusion convention
uint64_t cluster_size(const ExactDistribution& dist, uint32_t mask, int start);
// |C(start) \ {root}|: the witness count of the exploration forest
uint64_t cluster_size_excluding_root(const ExactDistribution& dist,
                                     uint32_t mask, int start);

double exact_theta(const ExactDistribution& dist, uint64_t k);
double exact_magnetization(const ExactDistribution& dist, int site);
// revealment of a coordinate under the deterministic forest (copies have
// revealment one)
double exact_revealment(const ExactDistribution& dist, const Coordinate& s);
double exact_influence(const ExactDistribution& dist, const Coordinate& s,
                       uint64_t k);
double exact_cov_fg(const ExactDistribution& dist, uint64_t k);

struct DerivativeCheck {
  double finite_difference = 0.0;
  double covariance_sum = 0.0;
  double density_form = 0.0;
};

// d/dlambda theta(k): central finite difference against the covariance-sum
// and product-rule density forms
DerivativeCheck exact_derivative(const TinyInstance& tiny, uint64_t k,
                                 double lambda, double step = 1e-4);

// exact OSSS covariance bound |Cov(f,g)| <= 1/2 sum delta_s Inf_s(f)
InequalityReport osss_check_exact(const TinyInstance& tiny, double lambda,
                                  uint64_t k);

// exact ghost-field lower bound with gamma_tilde = gamma / k
InequalityReport prop_ghost_lower_bound_exact(const TinyInstance& tiny,
                                              double lambda, uint64_t k,
                                              double gamma);

// magnetization identity per site: forest revealment against the exact law
// E[1 - e^{-g |C(u) \ {root}|}] (the special-cased root tree reveals only
// its copy, so the root never acts as a witness)
struct MagnetizationIdentity {
  int site;
  double revealment;
  double magnetization;
};
std::vector<MagnetizationIdentity> magnetization_identity_exact(
    const TinyInstance& tiny, double lambda);

// Random small instances for randomized exact tests: `coords` total
// coordinates, connected-ish random topology, random masses and edge
// probabilities.
TinyInstance random_tiny(rng::Seed128 seed, uint64_t index, int max_sites = 6,
                         bool with_ghost = false, double gamma_tilde = 0.2);

// lattice spec -> tiny instance (requires total coordinates <= 24)
TinyInstance from_lattice(const LatticeSpec& spec, double gamma_tilde = 0.0);

}  // namespace wrcm::oracle
