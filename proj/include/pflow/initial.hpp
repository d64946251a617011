#pragma once

// Initial-map generators. Random fields are defined by Fourier coefficients
// drawn from a seeded generator, so the same seed gives the same continuum
// map on every grid resolution.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "pflow/certificate.hpp"
#include "pflow/field.hpp"
#include "pflow/geometry.hpp"
#include "pflow/target.hpp"

namespace pflow {

/// Uniform double in [-1, 1) from 53 random bits; independent of the
/// standard library's distribution implementations.
inline double signed_unit(std::mt19937_64& gen) {
  return 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53 - 1.0;
}

/// Real periodic field sum_k a_k cos(w_k.x) + b_k sin(w_k.x) with
/// components in R^dim and wavevectors 2 pi k / period, |k_i| <= max_mode.
class BandLimitedField {
 public:
  BandLimitedField(int m, double period, std::size_t dim, int max_mode, std::uint64_t seed)
      : m_(m), dim_(dim), period_(period) {
    if (max_mode < 1) throw std::invalid_argument("BandLimitedField: max_mode must be >= 1");
    std::mt19937_64 gen(seed);
    std::array<int, 3> k{};
    const int lo = -max_mode;
    const int span = 2 * max_mode + 1;
    const int total = static_cast<int>(std::pow(span, m));
    for (int code = 0; code < total; ++code) {
      int c = code;
      int k2 = 0;
      for (int i = 0; i < 3; ++i) {
        if (i < m) {
          k[static_cast<std::size_t>(i)] = lo + c % span;
          c /= span;
        } else {
          k[static_cast<std::size_t>(i)] = 0;
        }
        k2 += k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(i)];
      }
      if (k2 == 0 || !positive_half(k)) continue;
      Mode mode;
      mode.k = k;
      const double decay = 1.0 / (1.0 + static_cast<double>(k2));
      mode.a.resize(dim);
      mode.b.resize(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        mode.a[d] = decay * signed_unit(gen);
        mode.b[d] = decay * signed_unit(gen);
      }
      modes_.push_back(std::move(mode));
    }
  }

  void evaluate(std::span<const double> x, std::span<double> out) const {
    for (double& v : out) v = 0.0;
    for (const auto& mode : modes_) {
      double phase = 0.0;
      for (int i = 0; i < m_; ++i)
        phase += 2.0 * std::numbers::pi * mode.k[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)] / period_;
      const double c = std::cos(phase);
      const double s = std::sin(phase);
      for (std::size_t d = 0; d < dim_; ++d) out[d] += mode.a[d] * c + mode.b[d] * s;
    }
  }

  /// sum over modes of sqrt(|a_k|^2 + |b_k|^2): a bound on the Euclidean
  /// norm of the field at every point of the continuum domain.
  double sup_bound() const {
    double s = 0.0;
    for (const auto& mode : modes_) s += std::sqrt(norm_sq(mode.a) + norm_sq(mode.b));
    return s;
  }

 private:
  struct Mode {
    std::array<int, 3> k{};
    std::vector<double> a, b;
  };
  static bool positive_half(const std::array<int, 3>& k) {
    for (int v : k) {
      if (v > 0) return true;
      if (v < 0) return false;
    }
    return false;
  }

  int m_;
  std::size_t dim_;
  double period_;
  std::vector<Mode> modes_;
};

/// Random smooth map into the cap of S^n about the last basis vector: a
/// band-limited tangent field v mapped through the exponential map, scaled so
/// that |v| <= max_rho everywhere on the continuum domain.
inline AmbientField cap_random_map(const DomainGrid& grid, std::size_t n, double max_rho,
                                   std::uint64_t seed, int max_mode = 2) {
  const BandLimitedField field(grid.dim(), grid.period(0), n, max_mode, seed);
  const double scale = max_rho / field.sup_bound();
  AmbientField u(grid.nodes(), n + 1);
  std::vector<double> v(n);
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  for (std::size_t x = 0; x < grid.nodes(); ++x) {
    const auto pos = grid.coordinates(x);
    field.evaluate(pos, v);
    double r2 = 0.0;
    for (double& s : v) {
      s *= scale;
      r2 += s * s;
    }
    const double rho = std::sqrt(r2);
    auto ux = u[x];
    for (std::size_t k = 0; k < n; ++k) ux[k] = rho > 0.0 ? std::sin(rho) * v[k] / rho : 0.0;
    ux[n] = std::cos(rho);
  }
  return u;
}

/// As cap_random_map, but scaled on the grid itself so that the largest
/// geodesic distance from the cap centre over the nodes equals rho_exact.
inline AmbientField cap_random_map_touching(const DomainGrid& grid, std::size_t n,
                                            double rho_exact, std::uint64_t seed,
                                            int max_mode = 2) {
  const BandLimitedField field(grid.dim(), grid.period(0), n, max_mode, seed);
  std::vector<double> v(n);
  double vmax = 0.0;
  for (std::size_t x = 0; x < grid.nodes(); ++x) {
    field.evaluate(grid.coordinates(x), v);
    vmax = std::max(vmax, std::sqrt(norm_sq(v)));
  }
  AmbientField u(grid.nodes(), n + 1);
  for (std::size_t x = 0; x < grid.nodes(); ++x) {
    field.evaluate(grid.coordinates(x), v);
    const double r = std::sqrt(norm_sq(v));
    const double rho = rho_exact * r / vmax;
    auto ux = u[x];
    for (std::size_t k = 0; k < n; ++k) ux[k] = r > 0.0 ? std::sin(rho) * v[k] / r : 0.0;
    ux[n] = std::cos(rho);
  }
  return u;
}

/// u = (cos a, sin a, cos b, sin b) / sqrt2 into the Clifford torus.
inline AmbientField clifford_angle_map(const DomainGrid& grid,
                                       const std::function<double(std::span<const double>)>& a,
                                       const std::function<double(std::span<const double>)>& b) {
  AmbientField u(grid.nodes(), 4);
  const double s = 1.0 / std::numbers::sqrt2;
  for (std::size_t x = 0; x < grid.nodes(); ++x) {
    const auto pos = grid.coordinates(x);
    const std::span<const double> ps(pos.data(), static_cast<std::size_t>(grid.dim()));
    const double al = a(ps);
    const double be = b(ps);
    auto ux = u[x];
    ux[0] = s * std::cos(al);
    ux[1] = s * std::sin(al);
    ux[2] = s * std::cos(be);
    ux[3] = s * std::sin(be);
  }
  return u;
}

/// Constant-speed wrap of the first domain axis around a great circle of
/// S^n: (cos kx, sin kx, 0, ...) with wavenumber 2 pi k / period.
inline AmbientField sphere_wrap(const DomainGrid& grid, std::size_t n, int k) {
  AmbientField u(grid.nodes(), n + 1);
  const double w = 2.0 * std::numbers::pi * k / grid.period(0);
  for (std::size_t x = 0; x < grid.nodes(); ++x) {
    const double t = w * grid.coordinates(x)[0];
    u[x][0] = std::cos(t);
    u[x][1] = std::sin(t);
  }
  return u;
}

/// (cos kx, sin kx, 1, 0) / sqrt2 into the Clifford torus.
inline AmbientField clifford_wrap(const DomainGrid& grid, int k) {
  const double w = 2.0 * std::numbers::pi * k / grid.period(0);
  return clifford_angle_map(
      grid, [w](std::span<const double> x) { return w * x[0]; },
      [](std::span<const double>) { return 0.0; });
}

inline AmbientField constant_map(const DomainGrid& grid, std::span<const double> value) {
  AmbientField u(grid.nodes(), value.size());
  for (std::size_t x = 0; x < grid.nodes(); ++x)
    for (std::size_t k = 0; k < value.size(); ++k) u[x][k] = value[k];
  return u;
}

/// Smooth compactly supported bump exp(1 - 1/(1 - s^2)), s = |x - c| / radius,
/// equal to 1 at the centre and 0 outside the ball. Distances are measured
/// with the minimum-image convention of the grid's torus.
inline double smooth_bump(const DomainGrid& grid, std::span<const double> x,
                          std::span<const double> center, double radius) {
  double d2 = 0.0;
  for (int i = 0; i < grid.dim(); ++i) {
    const double P = grid.period(i);
    double d = std::fmod(x[static_cast<std::size_t>(i)] - center[static_cast<std::size_t>(i)], P);
    if (d > 0.5 * P) d -= P;
    if (d < -0.5 * P) d += P;
    d2 += d * d;
  }
  const double s2 = d2 / (radius * radius);
  if (s2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

}  // namespace pflow
