#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's closed forms.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// (cos r - cos r1) cos r1 / sin^2 r, written out here rather than reused.
inline double cap_delta_formula(double r, double r1) {
  return (std::cos(r) - std::cos(r1)) * std::cos(r1) / (std::sin(r) * std::sin(r));
}

struct GridMax {
  double value;
  double arg;
};

/// Max of cap_delta_formula(r, .) over `points` equispaced r1 in (r, pi/2).
inline GridMax grid_search_best_cap(double r, std::size_t points = 1'000'000) {
  const double lo = r;
  const double hi = std::numbers::pi / 2;
  GridMax best{-1e300, lo};
  for (std::size_t i = 1; i <= points; ++i) {
    const double r1 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points + 1);
    const double v = cap_delta_formula(r, r1);
    if (v > best.value) best = {v, r1};
  }
  return best;
}

/// Root of g on [lo, hi] by bisection; g(lo) and g(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& g, double lo, double hi,
                     double tol = 1e-15) {
  double glo = g(lo);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Largest r with cot^2(r)/4 >= dp, by bisection on the decreasing function.
inline double bisect_r_max(double dp) {
  return bisect([dp](double r) { return 0.25 / (std::tan(r) * std::tan(r)) - dp; }, 1e-12,
                std::numbers::pi / 2 - 1e-12);
}

/// log2(e_coarse / e_fine) for successive halvings.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> out;
  for (std::size_t i = 1; i < errors.size(); ++i) out.push_back(std::log2(errors[i - 1] / errors[i]));
  return out;
}

/// Central finite-difference derivative of f at x along unit direction.
inline double central_difference(const std::function<double(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
}

}  // namespace oracle
