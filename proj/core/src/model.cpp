#include "wrcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"

namespace wrcm {

static constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// WeightDistribution
// ---------------------------------------------------------------------------

WeightDistribution WeightDistribution::point_mass() {
  WeightDistribution w;
  w.kind = WeightKind::point_mass;
  w.atoms = {{1.0, 1.0}};
  return w;
}

WeightDistribution WeightDistribution::pareto(double alpha,
                                              std::optional<double> m_max) {
  WeightDistribution w;
  w.kind = WeightKind::pareto;
  w.alpha = alpha;
  w.m_max = m_max;
  return w;
}

WeightDistribution WeightDistribution::discrete(
    std::vector<std::pair<double, double>> atoms) {
  WeightDistribution w;
  w.kind = WeightKind::discrete;
  std::sort(atoms.begin(), atoms.end());
  w.atoms = std::move(atoms);
  return w;
}

void WeightDistribution::validate() const {
  switch (kind) {
    case WeightKind::point_mass:
      return;
    case WeightKind::pareto: {
      if (alpha <= 0) throw std::invalid_argument("pareto: alpha must be > 0");
      if (m_max && *m_max <= 1.0)
        throw std::invalid_argument("pareto: m_max must exceed 1");
      // density alpha m^{-alpha-1} is non-increasing on [1, inf) for any
      // alpha > 0; truncation preserves that
      return;
    }
    case WeightKind::discrete: {
      if (atoms.empty()) throw std::invalid_argument("discrete: no atoms");
      double mass = 0.0;
      double prev_m = 0.0, prev_q = kInf;
      for (auto [m, q] : atoms) {
        if (m < 1.0) throw std::invalid_argument("discrete: atom below 1");
        if (m <= prev_m) throw std::invalid_argument("discrete: atoms not ascending");
        if (q < 0.0 || q > 1.0) throw std::invalid_argument("discrete: bad prob");
        if (q > prev_q + 1e-12)
          throw std::invalid_argument(
              "discrete: probabilities must be non-increasing in m");
        mass += q;
        prev_m = m;
        prev_q = q;
      }
      if (std::fabs(mass - 1.0) > 1e-12)
        throw std::invalid_argument("discrete: total mass != 1");
      return;
    }
  }
}

double WeightDistribution::cdf(double m) const {
  if (m < 1.0) return 0.0;
  switch (kind) {
    case WeightKind::point_mass:
      return 1.0;
    case WeightKind::pareto: {
      double c = 1.0 - std::pow(m, -alpha);
      if (m_max) {
        if (m >= *m_max) return 1.0;
        c /= 1.0 - std::pow(*m_max, -alpha);
      }
      return c;
    }
    case WeightKind::discrete: {
      double c = 0.0;
      for (auto [mi, qi] : atoms)
        if (mi <= m) c += qi;
      return c;
    }
  }
  return 0.0;
}

double WeightDistribution::tail(double m) const {
  if (m <= 1.0) return 1.0;
  switch (kind) {
    case WeightKind::point_mass:
      return 0.0;
    case WeightKind::pareto: {
      if (m_max && m >= *m_max) return 0.0;
      double t = std::pow(m, -alpha);
      if (m_max) t = (t - std::pow(*m_max, -alpha)) / (1.0 - std::pow(*m_max, -alpha));
      return t;
    }
    case WeightKind::discrete: {
      double t = 0.0;
      for (auto [mi, qi] : atoms)
        if (mi >= m) t += qi;
      return t;
    }
  }
  return 0.0;
}

double WeightDistribution::quantile(double q) const {
  q = std::clamp(q, 0.0, 1.0);
  switch (kind) {
    case WeightKind::point_mass:
      return 1.0;
    case WeightKind::pareto: {
      double norm = m_max ? 1.0 - std::pow(*m_max, -alpha) : 1.0;
      double m = std::pow(1.0 - q * norm, -1.0 / alpha);
      if (m_max) m = std::min(m, *m_max);
      return m;
    }
    case WeightKind::discrete: {
      double c = 0.0;
      for (auto [mi, qi] : atoms) {
        c += qi;
        if (c >= q - 1e-15) return mi;
      }
      return atoms.back().first;
    }
  }
  return 1.0;
}

double WeightDistribution::max_support() const {
  switch (kind) {
    case WeightKind::point_mass:
      return 1.0;
    case WeightKind::pareto:
      return m_max ? *m_max : kInf;
    case WeightKind::discrete:
      return atoms.back().first;
  }
  return 1.0;
}

double WeightDistribution::sample(rng::Stream& stream) const {
  double u = stream.next_unit();
  switch (kind) {
    case WeightKind::point_mass:
      return 1.0;
    case WeightKind::pareto: {
      double norm = m_max ? 1.0 - std::pow(*m_max, -alpha) : 1.0;
      return std::pow(1.0 - u * norm, -1.0 / alpha);
    }
    case WeightKind::discrete: {
      double c = 0.0;
      for (auto [mi, qi] : atoms) {
        c += qi;
        if (u < c) return mi;
      }
      return atoms.back().first;
    }
  }
  return 1.0;
}

double WeightDistribution::integrate(const std::function<double(double)>& f,
                                     double cutoff, double tol) const {
  switch (kind) {
    case WeightKind::point_mass:
      return f(1.0);
    case WeightKind::discrete: {
      double s = 0.0;
      for (auto [mi, qi] : atoms)
        if (mi <= cutoff) s += qi * f(mi);
      return s;
    }
    case WeightKind::pareto: {
      double top = m_max ? std::min(*m_max, cutoff) : cutoff;
      if (top <= 1.0) return 0.0;
      double norm = m_max ? 1.0 - std::pow(*m_max, -alpha) : 1.0;
      auto dens = [&](double m) {
        return alpha * std::pow(m, -alpha - 1.0) / norm;
      };
      return quad::integrate([&](double m) { return f(m) * dens(m); }, 1.0,
                             top, tol);
    }
  }
  return 0.0;
}

double weight_mass(const WeightDistribution& w, double m, int n) {
  if (w.is_discrete()) {
    for (auto [mi, qi] : w.atoms)
      if (std::fabs(mi - m) < 1e-12) return qi;
    return 0.0;
  }
  double step = std::ldexp(1.0, -n);  // 2^-n
  return std::max(0.0, w.cdf(m + step) - w.cdf(m));
}

// ---------------------------------------------------------------------------
// Adjacency
// ---------------------------------------------------------------------------

double ReachFunction::operator()(double m) const {
  switch (kind) {
    case ReachKind::none:
      return kInf;
    case ReachKind::constant:
      return scale;
    case ReachKind::identity:
      return m;
    case ReachKind::scaled:
      return scale * m;
    case ReachKind::log1p:
      return std::log1p(m);
  }
  return kInf;
}

double TabulatedGrid::value(double rr, double aa, double bb) const {
  auto locate = [](const std::vector<double>& g, double x, size_t& i,
                   double& t) {
    if (x <= g.front()) {
      i = 0;
      t = 0;
      return;
    }
    if (x >= g.back()) {
      i = g.size() - 2;
      t = 1;
      return;
    }
    i = static_cast<size_t>(std::upper_bound(g.begin(), g.end(), x) -
                            g.begin()) - 1;
    t = (x - g[i]) / (g[i + 1] - g[i]);
  };
  if (rr > r.back()) return 0.0;  // tabulated specs have compact support
  size_t ir, ia, ib;
  double tr, ta, tb;
  locate(r, rr, ir, tr);
  if (a.size() == 1) {
    ia = ib = 0;
    ta = tb = 0;
  } else {
    locate(a, aa, ia, ta);
    locate(a, bb, ib, tb);
  }
  auto cell = [&](size_t ja, size_t jb, size_t jr) {
    return values[(ja * a.size() + jb) * r.size() + jr];
  };
  auto lerp_r = [&](size_t ja, size_t jb) {
    if (r.size() == 1) return cell(ja, jb, 0);
    return cell(ja, jb, ir) * (1 - tr) + cell(ja, jb, ir + 1) * tr;
  };
  if (a.size() == 1) return lerp_r(0, 0);
  double v00 = lerp_r(ia, ib), v01 = lerp_r(ia, ib + 1);
  double v10 = lerp_r(ia + 1, ib), v11 = lerp_r(ia + 1, ib + 1);
  return (v00 * (1 - ta) + v10 * ta) * (1 - tb) +
         (v01 * (1 - ta) + v11 * ta) * tb;
}

double AdjacencySpec::eval(double r, double a, double b) const {
  switch (kind) {
    case AdjacencyKind::disk:
      return r <= radius ? 1.0 : 0.0;
    case AdjacencyKind::inverse_power:
      if (r == 0.0) return 1.0;
      return -std::expm1(-std::pow(r, -eta));
    case AdjacencyKind::rational_decay:
      return std::pow(1.0 + r, -eta);
    case AdjacencyKind::weighted_reach: {
      double mn = std::min(a, b);
      if (r > reach(mn)) return 0.0;
      if (r == 0.0) return 1.0;
      return -std::expm1(-a * b / std::pow(r, eta));
    }
    case AdjacencyKind::tabulated: {
      double v = grid->value(r, a, b);
      if (reach.present() && r > reach(std::min(a, b))) return 0.0;
      return std::clamp(v, 0.0, 1.0);
    }
  }
  return 0.0;
}

std::optional<double> AdjacencySpec::support_radius(double weight_cap) const {
  switch (kind) {
    case AdjacencyKind::disk:
      return radius;
    case AdjacencyKind::weighted_reach:
      return reach(weight_cap);
    case AdjacencyKind::tabulated:
      return grid->r.back();
    default:
      return std::nullopt;
  }
}

double AdjacencySpec::effective_range(double weight_cap, double eps) const {
  if (auto s = support_radius(weight_cap)) return *s;
  // monotone in r: bisect phi(r; cap, cap) = eps
  double lo = 0.0, hi = 1.0;
  while (eval(hi, weight_cap, weight_cap) > eps && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (eval(mid, weight_cap, weight_cap) > eps)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

AdjacencySpec AdjacencySpec::make_disk(int d, double radius) {
  AdjacencySpec s;
  s.dimension = d;
  s.kind = AdjacencyKind::disk;
  s.radius = radius;
  s.weighted = false;
  s.reach = ReachFunction{ReachKind::constant, radius};
  return s;
}

AdjacencySpec AdjacencySpec::make_inverse_power(int d, double eta) {
  AdjacencySpec s;
  s.dimension = d;
  s.kind = AdjacencyKind::inverse_power;
  s.eta = eta;
  s.weighted = false;
  return s;
}

AdjacencySpec AdjacencySpec::make_rational_decay(int d, double eta) {
  AdjacencySpec s;
  s.dimension = d;
  s.kind = AdjacencyKind::rational_decay;
  s.eta = eta;
  s.weighted = false;
  return s;
}

AdjacencySpec AdjacencySpec::make_weighted_reach(int d, double eta) {
  AdjacencySpec s;
  s.dimension = d;
  s.kind = AdjacencyKind::weighted_reach;
  s.eta = eta;
  s.weighted = true;
  s.reach = ReachFunction{ReachKind::identity, 1.0};
  return s;
}

AdjacencySpec AdjacencySpec::make_tabulated(int d, TabulatedGrid grid,
                                            bool weighted,
                                            ReachFunction reach) {
  AdjacencySpec s;
  s.dimension = d;
  s.kind = AdjacencyKind::tabulated;
  s.weighted = weighted;
  s.reach = reach;
  s.grid = std::make_shared<TabulatedGrid>(std::move(grid));
  return s;
}

double eval_adjacency(const AdjacencySpec& spec, double r, double a, double b) {
  if (r < 0.0) throw std::domain_error("eval_adjacency: r < 0");
  if (a < 1.0 || b < 1.0) throw std::domain_error("eval_adjacency: weight < 1");
  return spec.eval(r, a, b);
}

void ModelSpec::validate() const {
  if (intensity < 0) throw std::invalid_argument("model: intensity < 0");
  if (box_half_width <= 0) throw std::invalid_argument("model: box <= 0");
  if (adjacency.dimension < 2)
    throw std::invalid_argument("model: dimension must be >= 2");
  weights.validate();
}

double ModelSpec::weight_cap() const {
  double ms = weights.max_support();
  if (std::isfinite(ms)) return ms;
  return weights.quantile(1.0 - 1e-9);
}

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

AssumptionReport check_assumptions(const AdjacencySpec& spec,
                                   const SampleGrid& grid) {
  AssumptionReport rep;
  const double tol = 1e-12;
  std::vector<double> as = grid.a.empty() ? std::vector<double>{1.0} : grid.a;

  for (double a : as) {
    for (double b : as) {
      // A1 carries isotropy (guaranteed by construction: phi is a function
      // of |x-y| only); the numeric half checked here is exchange symmetry.
      for (double r : grid.r) {
        double p = spec.eval(r, a, b), q = spec.eval(r, b, a);
        if (std::fabs(p - q) > tol) {
          rep.a1_ok = false;
          rep.violations.push_back({'1', r, r, a, b, p, q});
        }
      }
      // A2: non-increasing in r
      for (size_t i = 0; i + 1 < grid.r.size(); ++i) {
        double p1 = spec.eval(grid.r[i], a, b);
        double p2 = spec.eval(grid.r[i + 1], a, b);
        if (p1 < p2 - tol) {
          rep.a2_ok = false;
          rep.violations.push_back({'2', grid.r[i], grid.r[i + 1], a, b, p1, p2});
        }
      }
    }
  }
  // A3: non-decreasing in each weight
  for (size_t i = 0; i + 1 < as.size(); ++i) {
    for (double b : as) {
      for (double r : grid.r) {
        double p1 = spec.eval(r, as[i], b);
        double p2 = spec.eval(r, as[i + 1], b);
        if (p2 < p1 - tol) {
          rep.a3_ok = false;
          rep.violations.push_back({'3', r, r, as[i + 1], b, p2, p1});
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Neighborhood integrals, GW bounds
// ---------------------------------------------------------------------------

double sphere_surface_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// integral of f against pi restricted to [lo, hi)
static double integrate_weight_range(const WeightDistribution& w,
                                     const std::function<double(double)>& f,
                                     double lo, double hi, double tol) {
  switch (w.kind) {
    case WeightKind::point_mass:
      return (1.0 >= lo && 1.0 < hi) ? f(1.0) : 0.0;
    case WeightKind::discrete: {
      double s = 0.0;
      for (auto [mi, qi] : w.atoms)
        if (mi >= lo && mi < hi) s += qi * f(mi);
      return s;
    }
    case WeightKind::pareto: {
      double top = w.m_max ? std::min(*w.m_max, hi) : hi;
      double bot = std::max(1.0, lo);
      if (top <= bot) return 0.0;
      double norm = w.m_max ? 1.0 - std::pow(*w.m_max, -w.alpha) : 1.0;
      auto dens = [&](double m) {
        return w.alpha * std::pow(m, -w.alpha - 1.0) / norm;
      };
      return quad::integrate([&](double m) { return f(m) * dens(m); }, bot,
                             top, tol);
    }
  }
  return 0.0;
}

namespace {

double iota(const AdjacencySpec& spec, const WeightDistribution& weights,
            double r, double a, double tol) {
  double cutoff = weights.unbounded() ? weights.quantile(1.0 - 1e-12)
                                      : weights.max_support();
  return weights.integrate(
      [&](double b) { return spec.eval(r, a, b); }, cutoff, tol);
}

// analytic or monotone tail control beyond the radial cutoff; returns the
// cutoff radius such that the remainder is below params.tail_bound, or nullopt
// when the tail integral diverges
std::optional<double> radial_cutoff(const AdjacencySpec& spec, double a,
                                    const QuadratureParams& params) {
  int d = spec.dimension;
  switch (spec.kind) {
    case AdjacencyKind::disk:
      return spec.radius;
    case AdjacencyKind::weighted_reach:
      // iota(r;a) vanishes beyond R(a): min(a,b) <= a
      return spec.reach(a);
    case AdjacencyKind::tabulated:
      return spec.grid->r.back();
    case AdjacencyKind::inverse_power: {
      // phi(r) <= r^-eta, tail int_T^inf r^{d-1-eta} dr = T^{d-eta}/(eta-d)
      if (spec.eta <= d) return std::nullopt;
      double T = std::pow(params.tail_bound * (spec.eta - d),
                          1.0 / (d - spec.eta));
      return std::max(T, 1.0);
    }
    case AdjacencyKind::rational_decay: {
      // phi(r) <= r^-eta for r >= 1
      if (spec.eta <= d) return std::nullopt;
      double T = std::pow(params.tail_bound * (spec.eta - d),
                          1.0 / (d - spec.eta));
      return std::max(T, 1.0);
    }
  }
  return std::nullopt;
}

}  // namespace

IntegralResult neighborhood_integral(const AdjacencySpec& spec,
                                     const WeightDistribution& weights,
                                     double a, const QuadratureParams& params) {
  if (a < 1.0) throw std::domain_error("neighborhood_integral: a < 1");
  int d = spec.dimension;
  auto cutoff = radial_cutoff(spec, a, params);
  if (!cutoff) return IntegralResult{0.0, true};

  double inner_tol = params.tol * 0.1;
  auto integrand = [&](double r) {
    return iota(spec, weights, r, a, inner_tol) * std::pow(r, d - 1);
  };
  double v = quad::integrate(integrand, 0.0, *cutoff, params.tol);
  if (!(v < params.divergence_bound)) return IntegralResult{v, true};
  return IntegralResult{v, false};
}

NbBounds nb_bounds(const AdjacencySpec& spec, const WeightDistribution& weights,
                   const std::vector<double>& a_grid,
                   const QuadratureParams& params) {
  NbBounds out;
  auto inf = neighborhood_integral(spec, weights, 1.0, params);
  if (inf.diverged) {
    out.diverged = true;
    out.I_inf = inf.value;
    out.I_sup = kInf;
    return out;
  }
  out.I_inf = inf.value;  // a = 1 is the infimum by (A.3) monotonicity
  out.I_sup = inf.value;
  if (spec.weighted) {
    std::vector<double> grid = a_grid;
    double cap = weights.max_support();
    if (std::isfinite(cap)) grid.push_back(cap);
    for (double a : grid) {
      if (a < 1.0) continue;
      auto r = neighborhood_integral(spec, weights, a, params);
      if (r.diverged) {
        out.diverged = true;
        out.I_sup = kInf;
        return out;
      }
      out.I_sup = std::max(out.I_sup, r.value);
    }
    if (weights.unbounded()) {
      if (spec.kind == AdjacencyKind::weighted_reach &&
          (spec.reach.kind == ReachKind::identity ||
           spec.reach.kind == ReachKind::scaled ||
           spec.reach.kind == ReachKind::log1p)) {
        // certified sup: phi(r;a,b) <= 1{r <= R(b)}, so
        // iota(r;a) <= pi({b : R(b) >= r}) uniformly in a
        auto reach_inv = [&](double r) -> double {
          switch (spec.reach.kind) {
            case ReachKind::identity:
              return r;
            case ReachKind::scaled:
              return r / spec.reach.scale;
            case ReachKind::log1p:
              return std::expm1(r);
            default:
              return r;
          }
        };
        int d = spec.dimension;
        double rmax = spec.reach(weights.quantile(1.0 - 1e-12));
        double bound = quad::integrate(
            [&](double r) {
              double t = std::min(1.0, weights.tail(reach_inv(r)));
              return t * std::pow(r, d - 1);
            },
            0.0, rmax, params.tol);
        if (!(bound < params.divergence_bound)) {
          out.diverged = true;
          out.I_sup = kInf;
          return out;
        }
        out.I_sup = std::max(out.I_sup, bound);
      } else {
        // the essential sup over a cannot be certified numerically here;
        // the grid value is a lower bound on it
        out.grid_certified_only = true;
      }
    }
  }
  out.ok = out.I_inf > 0 && std::isfinite(out.I_sup);
  return out;
}

GwBounds gw_bounds(const NbBounds& nb, int dimension, double lambda) {
  GwBounds g;
  double sd = sphere_surface_area(dimension);
  g.lambda_T_lower = 1.0 / (sd * nb.I_sup);
  g.branching_mean = lambda * sd * nb.I_sup;
  g.chi_upper = g.branching_mean < 1.0 ? 1.0 / (1.0 - g.branching_mean) : kInf;
  return g;
}

// ---------------------------------------------------------------------------
// (EMC) checker
// ---------------------------------------------------------------------------

EmcReport emc_check(const AdjacencySpec& spec, const WeightDistribution& weights,
                    double C, double eps, double cutoff) {
  if (!spec.reach.present())
    throw std::invalid_argument("emc_check: reach function required");
  if (C <= 0 || eps <= 0)
    throw std::invalid_argument("emc_check: C and eps must be positive");
  int d = spec.dimension;
  auto f = [&](double m) {
    return std::exp(C * std::pow(spec.reach(m), d + eps));
  };

  EmcReport rep;
  double top = std::min(cutoff, weights.max_support());
  if (std::isfinite(weights.max_support()) && weights.max_support() <= cutoff) {
    // full support covered; nothing to test
    rep.partial_sum = weights.integrate(f, top, 1e-10);
    rep.finite = true;
    return rep;
  }

  // dyadic blocks [2^j, 2^{j+1}) up to cutoff; ratio test on the last blocks
  std::vector<double> blocks;
  double lo = 1.0;
  double sum = 0.0;
  while (lo < top) {
    double hi = std::min(top, lo * 2.0);
    double t = integrate_weight_range(weights, f, lo, hi, 1e-10);
    blocks.push_back(t);
    sum += t;
    lo = hi;
  }
  rep.partial_sum = sum;
  int nb = static_cast<int>(blocks.size());
  // numeric overflow of a block already certifies divergence
  for (double t : blocks)
    if (!std::isfinite(t)) {
      rep.finite = false;
      rep.last_block_ratio = kInf;
      return rep;
    }
  int look = std::min(3, nb - 1);
  if (look <= 0) {
    rep.inconclusive = true;
    return rep;
  }
  double max_ratio = 0.0, min_ratio = kInf;
  for (int i = nb - look; i < nb; ++i) {
    if (blocks[i - 1] <= 0) continue;
    double r = blocks[i] / blocks[i - 1];
    max_ratio = std::max(max_ratio, r);
    min_ratio = std::min(min_ratio, r);
  }
  rep.last_block_ratio = max_ratio;
  if (max_ratio < 0.9)
    rep.finite = true;
  else if (min_ratio > 1.1)
    rep.finite = false;
  else
    rep.inconclusive = true;
  return rep;
}

// ---------------------------------------------------------------------------
// canonical description + hash
// ---------------------------------------------------------------------------

std::string ModelSpec::canonical_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{\"d\":" << adjacency.dimension << ",\"kind\":"
     << static_cast<int>(adjacency.kind) << ",\"radius\":" << adjacency.radius
     << ",\"eta\":" << adjacency.eta << ",\"reach\":"
     << static_cast<int>(adjacency.reach.kind) << ","
     << adjacency.reach.scale << ",\"weights\":"
     << static_cast<int>(weights.kind) << "," << weights.alpha << ","
     << (weights.m_max ? *weights.m_max : -1.0) << ",\"atoms\":[";
  for (auto [m, q] : weights.atoms) os << m << "," << q << ",";
  os << "],\"lambda\":" << intensity << ",\"L\":" << box_half_width;
  if (adjacency.grid) {
    os << ",\"grid\":[";
    for (double v : adjacency.grid->r) os << v << ",";
    for (double v : adjacency.grid->a) os << v << ",";
    for (double v : adjacency.grid->values) os << v << ",";
    os << "]";
  }
  os << "}";
  return os.str();
}

uint64_t ModelSpec::hash() const {
  std::string s = canonical_json();
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace wrcm
