#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wrcm/rng.hpp"

namespace wrcm {

// ---------------------------------------------------------------------------
// Weight distribution pi on [1, infinity). Either a point mass at 1, a
// (possibly truncated) Pareto with non-increasing density alpha m^{-alpha-1},
// or a discrete list of atoms with non-increasing probabilities.
// ---------------------------------------------------------------------------

enum class WeightKind { point_mass, pareto, discrete };

struct WeightDistribution {
  WeightKind kind = WeightKind::point_mass;
  double alpha = 0.0;                 // pareto shape
  std::optional<double> m_max;        // pareto truncation
  std::vector<std::pair<double, double>> atoms;  // (m_i >= 1, q_i), m ascending

  static WeightDistribution point_mass();
  static WeightDistribution pareto(double alpha,
                                   std::optional<double> m_max = {});
  static WeightDistribution discrete(
      std::vector<std::pair<double, double>> atoms);

  // throws std::invalid_argument on mass != 1, increasing density, or
  // support below 1
  void validate() const;

  bool is_discrete() const { return kind != WeightKind::pareto; }
  bool unbounded() const { return kind == WeightKind::pareto && !m_max; }

  double sample(rng::Stream& stream) const;
  double cdf(double m) const;
  double tail(double m) const;  // pi([m, inf))
  double quantile(double q) const;
  double max_support() const;  // +inf when unbounded

  // integral of f against pi over [1, cutoff]
  double integrate(const std::function<double(double)>& f, double cutoff,
                   double tol) const;
};

// pi([m, m + 2^-n]) for absolutely continuous pi, pi({m}) for discrete.
double weight_mass(const WeightDistribution& w, double m, int n);

// ---------------------------------------------------------------------------
// Adjacency function phi(r; a, b), isotropic and symmetric by construction.
// ---------------------------------------------------------------------------

enum class AdjacencyKind {
  disk,            // phi(r) = 1{r <= radius}
  inverse_power,   // phi(r) = 1 - exp(-r^-eta); infinite range
  rational_decay,  // phi(r) = (1 + r)^-eta; infinite range
  weighted_reach,  // phi(r;a,b) = 1{r <= min(a,b)} (1 - exp(-a b / r^eta))
  tabulated,       // multilinear interpolation on an (r, a, b) grid
};

enum class ReachKind { none, constant, identity, scaled, log1p };

struct ReachFunction {
  ReachKind kind = ReachKind::none;
  double scale = 1.0;

  bool present() const { return kind != ReachKind::none; }
  double operator()(double m) const;
};

struct TabulatedGrid {
  std::vector<double> r;       // ascending, r.front() == 0 recommended
  std::vector<double> a;       // ascending weight grid (size 1 if unweighted)
  std::vector<double> values;  // [ia*na + ib][ir] flattened; symmetric in a,b
  double value(double rr, double aa, double bb) const;
};

struct AdjacencySpec {
  int dimension = 2;
  AdjacencyKind kind = AdjacencyKind::disk;
  double radius = 1.0;  // disk
  double eta = 3.0;     // inverse_power / rational_decay / weighted_reach
  bool weighted = false;
  ReachFunction reach;  // (MinR) reach when present
  std::shared_ptr<const TabulatedGrid> grid;

  double eval(double r, double a, double b) const;

  // radius beyond which phi is exactly zero; nullopt for infinite range
  std::optional<double> support_radius(double weight_cap) const;

  // r where phi(r;cap,cap) drops below eps, used as the boundary margin for
  // infinite-range specs
  double effective_range(double weight_cap, double eps = 1e-9) const;

  static AdjacencySpec make_disk(int d, double radius);
  static AdjacencySpec make_inverse_power(int d, double eta = 3.0);
  static AdjacencySpec make_rational_decay(int d, double eta);
  static AdjacencySpec make_weighted_reach(int d, double eta = 3.0);
  static AdjacencySpec make_tabulated(int d, TabulatedGrid grid, bool weighted,
                                      ReachFunction reach = {});
};

// phi with domain checks: r >= 0, a >= 1, b >= 1.
double eval_adjacency(const AdjacencySpec& spec, double r, double a, double b);

struct ModelSpec {
  AdjacencySpec adjacency;
  WeightDistribution weights;
  double intensity = 1.0;       // lambda > 0
  double box_half_width = 1.0;  // L > 0

  void validate() const;
  // effective weight cap for reach computations (quantile 1 - 1e-9 when
  // unbounded)
  double weight_cap() const;
  std::string canonical_json() const;
  uint64_t hash() const;
};

// ---------------------------------------------------------------------------
// Assumption reports and integral bounds
// ---------------------------------------------------------------------------

struct AssumptionViolation {
  char which;  // '1' isotropy/symmetry, '2' r-monotonicity, '3' weight-monotonicity
  double r1, r2, a, b;
  double phi1, phi2;
};

struct AssumptionReport {
  bool a1_ok = true;
  bool a2_ok = true;
  bool a3_ok = true;
  std::vector<AssumptionViolation> violations;
  bool all_ok() const { return a1_ok && a2_ok && a3_ok; }
};

struct SampleGrid {
  std::vector<double> r;
  std::vector<double> a;  // also used for b
};

AssumptionReport check_assumptions(const AdjacencySpec& spec,
                                   const SampleGrid& grid);

struct QuadratureParams {
  double tol = 1e-8;
  double tail_bound = 1e-10;        // admissible contribution beyond cutoff
  double divergence_bound = 1e6;    // flag divergence above this
};

struct IntegralResult {
  double value = 0.0;
  bool diverged = false;
};

// integral_0^inf iota(r; a) r^{d-1} dr with iota(r;a) = int phi(r;a,b) pi(db)
IntegralResult neighborhood_integral(const AdjacencySpec& spec,
                                     const WeightDistribution& weights,
                                     double a, const QuadratureParams& params);

struct NbBounds {
  double I_inf = 0.0;
  double I_sup = 0.0;
  bool ok = false;
  bool diverged = false;
  bool grid_certified_only = false;  // ess-sup certified on the a-grid only
};

NbBounds nb_bounds(const AdjacencySpec& spec, const WeightDistribution& weights,
                   const std::vector<double>& a_grid,
                   const QuadratureParams& params = {});

struct GwBounds {
  double lambda_T_lower = 0.0;
  double chi_upper = 0.0;  // +inf when the geometric series diverges
  double branching_mean = 0.0;  // lambda * s_d * I_sup
};

GwBounds gw_bounds(const NbBounds& nb, int dimension, double lambda);

// surface area of the unit sphere in R^d: 2 pi^{d/2} / Gamma(d/2)
double sphere_surface_area(int d);

struct EmcReport {
  bool finite = false;
  bool inconclusive = false;
  double partial_sum = 0.0;
  double last_block_ratio = 0.0;
};

// integrates exp(C R(m)^{d+eps}) against pi up to `cutoff` on dyadic blocks;
// the finiteness verdict is a ratio test on the last blocks and is scoped to
// the cutoff (see README).
EmcReport emc_check(const AdjacencySpec& spec, const WeightDistribution& weights,
                    double C, double eps, double cutoff);

}  // namespace wrcm
