#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace wrcm::quad {

// Gauss-Kronrod 7-15 nodes on [-1, 1].
inline constexpr double kKronrodNodes[8] = {
    0.000000000000000, 0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759, 0.991455371120813};
inline constexpr double kKronrodWeights[8] = {
    0.209482141084728, 0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979, 0.022935322010529};
inline constexpr double kGaussWeights[4] = {
    0.417959183673469, 0.381830050505119, 0.279705391489277, 0.129484966168870};

struct Interval {
  double a, b, value, error;
};

inline Interval gk15(const std::function<double(double)>& f, double a,
                     double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double kron = kKronrodWeights[0] * fc;
  double gauss = kGaussWeights[0] * fc;
  for (int i = 1; i < 8; ++i) {
    double x = h * kKronrodNodes[i];
    double fs = f(c - x) + f(c + x);
    kron += kKronrodWeights[i] * fs;
    if (i % 2 == 0) gauss += kGaussWeights[i / 2] * fs;
  }
  kron *= h;
  gauss *= h;
  double err = std::pow(200.0 * std::fabs(kron - gauss), 1.5);
  if (!(err < std::fabs(kron - gauss))) err = std::fabs(kron - gauss);
  return Interval{a, b, kron, err};
}

// Adaptive refinement to absolute tolerance: always split the interval with
// the largest error estimate; hard cap on the interval count.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_intervals = 4096) {
  if (!(b > a)) return 0.0;
  std::vector<Interval> items{gk15(f, a, b)};
  double total_error = items[0].error;
  while (total_error > tol &&
         static_cast<int>(items.size()) < max_intervals) {
    size_t worst = 0;
    for (size_t i = 1; i < items.size(); ++i)
      if (items[i].error > items[worst].error) worst = i;
    Interval it = items[worst];
    if (it.b - it.a <= 1e-300) break;
    double m = 0.5 * (it.a + it.b);
    Interval left = gk15(f, it.a, m), right = gk15(f, m, it.b);
    total_error += left.error + right.error - it.error;
    items[worst] = left;
    items.push_back(right);
  }
  double total = 0.0;
  for (const auto& it : items) total += it.value;
  return total;
}

}  // namespace wrcm::quad
