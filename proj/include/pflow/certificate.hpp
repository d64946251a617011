#pragma once

// Regular-set certificates for target subsets and the admissibility
// threshold they must clear.
//
// A certificate carries a pinched positive function f on Omega and a convex
// function f* with Omega = {f* < a}. Conditions are checked at sample points
// by assembling the intrinsic bilinear forms on an orthonormal tangent frame
// and taking their smallest eigenvalue.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pflow/field.hpp"
#include "pflow/target.hpp"

namespace pflow {

/// delta_p = 3 (p-2)^2 (sqrt(m) + 2p + 6)^2 + 3
inline double delta_p(int m, double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("delta_p: exponent must be >= 2");
  if (m < 1) throw std::invalid_argument("delta_p: dimension must be >= 1");
  const double s = std::sqrt(static_cast<double>(m)) + 2.0 * p + 6.0;
  return 3.0 * (p - 2.0) * (p - 2.0) * s * s + 3.0;
}

/// Regularity constant of the geodesic cap B(y, r) on the unit sphere with
/// f = cos(rho) - cos(r1): (cos r - cos r1) cos r1 / sin^2 r.
inline double cap_delta(double r, double r1) {
  if (!(r > 0.0 && r < r1 && r1 < std::numbers::pi / 2))
    throw std::invalid_argument("cap_delta: need 0 < r < r1 < pi/2");
  const double s = std::sin(r);
  return (std::cos(r) - std::cos(r1)) * std::cos(r1) / (s * s);
}

struct CapOptimum {
  double delta;
  double r1;
};

/// Maximiser of cap_delta(r, .). The numerator is quadratic in cos r1 with
/// vertex at cos r1 = cos r / 2, giving delta* = cot^2(r) / 4.
inline CapOptimum best_cap_delta(double r) {
  if (!(r > 0.0 && r < std::numbers::pi / 2))
    throw std::invalid_argument("best_cap_delta: need 0 < r < pi/2");
  const double t = std::cos(r) / std::sin(r);
  return {0.25 * t * t, std::acos(0.5 * std::cos(r))};
}

/// Largest cap radius whose best certificate reaches delta_p; admissible
/// caps satisfy r < r_max strictly.
inline double max_admissible_cap_radius(double p, int m) {
  return std::atan(1.0 / (2.0 * std::sqrt(delta_p(m, p))));
}

/// A C^2 function on N with intrinsic gradient and Hessian evaluators.
struct FunctionOnN {
  std::function<double(std::span<const double>)> value;
  /// Intrinsic gradient as a tangent vector in R^L.
  std::function<std::vector<double>(std::span<const double>)> gradient;
  /// Intrinsic Hessian nabla^2 F(y)(X, Y) for tangent X, Y.
  std::function<double(std::span<const double>, std::span<const double>, std::span<const double>)>
      hessian;
};

struct RegularBallCert {
  std::string name;
  FunctionOnN f;
  FunctionOnN f_star;
  double a = 1.0;
  double pinching = 1.0;  ///< C with C^-1 <= f <= C on Omega
  double delta = 0.0;
  /// Cap geometry, when the certificate describes a spherical cap.
  std::vector<double> center;
  double radius = 0.0;

  bool contains(std::span<const double> y) const { return f_star.value(y) < a; }
};

namespace detail {

inline double sphere_rho(std::span<const double> y, std::span<const double> c) {
  const double cs = dot(y, c);
  double s2 = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double t = y[k] - cs * c[k];
    s2 += t * t;
  }
  return std::atan2(std::sqrt(s2), cs);
}

/// Unit tangent vector grad(rho) at y, or empty when rho is 0.
inline std::vector<double> sphere_rho_direction(std::span<const double> y,
                                                std::span<const double> c) {
  const double cs = dot(y, c);
  std::vector<double> t(y.size());
  double s2 = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    t[k] = -(c[k] - cs * y[k]);
    s2 += t[k] * t[k];
  }
  if (s2 < 1e-300) return {};
  const double s = std::sqrt(s2);
  for (double& v : t) v /= s;
  return t;
}

}  // namespace detail

/// Cap certificate on the unit sphere S^n centred at the last basis vector:
/// f = cos(rho) - cos(r1), f* = rho^2, a = r^2. The Hessians use the closed
/// forms nabla^2 cos(rho) = -cos(rho) h and
/// nabla^2 rho^2 = 2 drho^2 + 2 rho cot(rho) (h - drho^2).
inline RegularBallCert make_cap_certificate(std::size_t n, double r, double r1, double delta) {
  if (!(r > 0.0 && r < r1 && r1 < std::numbers::pi / 2))
    throw std::invalid_argument("make_cap_certificate: need 0 < r < r1 < pi/2");
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  const double cos_r1 = std::cos(r1);

  RegularBallCert cert;
  cert.name = "cap";
  cert.center = c;
  cert.radius = r;
  cert.a = r * r;
  cert.delta = delta;
  const double f_min = std::cos(r) - cos_r1;
  const double f_max = 1.0 - cos_r1;
  cert.pinching = std::max(1.0 / f_min, f_max);

  cert.f.value = [c, cos_r1](std::span<const double> y) { return dot(y, c) - cos_r1; };
  cert.f.gradient = [c](std::span<const double> y) {
    const double cs = dot(y, c);
    std::vector<double> g(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) g[k] = c[k] - cs * y[k];
    return g;
  };
  cert.f.hessian = [c](std::span<const double> y, std::span<const double> X,
                       std::span<const double> Y) { return -dot(y, c) * dot(X, Y); };

  cert.f_star.value = [c](std::span<const double> y) {
    const double rho = detail::sphere_rho(y, c);
    return rho * rho;
  };
  cert.f_star.gradient = [c](std::span<const double> y) {
    const double rho = detail::sphere_rho(y, c);
    auto d = detail::sphere_rho_direction(y, c);
    if (d.empty()) return std::vector<double>(y.size(), 0.0);
    for (double& v : d) v *= 2.0 * rho;
    return d;
  };
  cert.f_star.hessian = [c](std::span<const double> y, std::span<const double> X,
                            std::span<const double> Y) {
    const double rho = detail::sphere_rho(y, c);
    const double xy = dot(X, Y);
    auto d = detail::sphere_rho_direction(y, c);
    if (d.empty() || rho < 1e-12) return 2.0 * xy;
    const double rx = dot(d, X);
    const double ry = dot(d, Y);
    const double rc = rho * std::cos(rho) / std::sin(rho);
    return 2.0 * rx * ry + 2.0 * rc * (xy - rx * ry);
  };
  return cert;
}

/// Cap certificate with the optimal r1 and a given delta.
inline RegularBallCert make_best_cap_certificate(std::size_t n, double r, double delta) {
  return make_cap_certificate(n, r, best_cap_delta(r).r1, delta);
}

/// f = f* = 1, a > 1: certifies the whole of a K2 = 0 target for any delta.
inline RegularBallCert make_trivial_certificate(double delta, double a = 2.0) {
  if (!(a > 1.0)) throw std::invalid_argument("make_trivial_certificate: need a > 1");
  RegularBallCert cert;
  cert.name = "trivial";
  cert.a = a;
  cert.pinching = 1.0;
  cert.delta = delta;
  FunctionOnN one;
  one.value = [](std::span<const double>) { return 1.0; };
  one.gradient = [](std::span<const double> y) { return std::vector<double>(y.size(), 0.0); };
  one.hessian = [](std::span<const double>, std::span<const double>, std::span<const double>) {
    return 0.0;
  };
  cert.f = one;
  cert.f_star = one;
  return cert;
}

/// Point at geodesic distance rho from `center` along the unit tangent
/// direction `dir`.
inline std::vector<double> sphere_exp(std::span<const double> center, std::span<const double> dir,
                                      double rho) {
  std::vector<double> y(center.size());
  for (std::size_t k = 0; k < y.size(); ++k)
    y[k] = std::cos(rho) * center[k] + std::sin(rho) * dir[k];
  return y;
}

/// Tensor grid in polar coordinates about the last basis vector of S^n:
/// the centre plus `per_dim` radii clustered towards rho = r times
/// `per_dim` samples per angular dimension (n <= 3; higher n uses a fixed
/// set of pseudo-random directions).
inline std::vector<std::vector<double>> cap_samples(std::size_t n, double r,
                                                    std::size_t per_dim = 64) {
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1.0;
  std::vector<std::vector<double>> dirs;
  auto dir_from = [n](std::vector<double> v) {
    v.resize(n + 1, 0.0);
    return v;
  };
  if (n == 1) {
    dirs = {dir_from({1.0}), dir_from({-1.0})};
  } else if (n == 2) {
    for (std::size_t j = 0; j < per_dim; ++j) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(per_dim);
      dirs.push_back(dir_from({std::cos(th), std::sin(th)}));
    }
  } else if (n == 3) {
    for (std::size_t j = 0; j < per_dim; ++j)
      for (std::size_t l = 0; l < per_dim; ++l) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(per_dim);
        const double ph = std::numbers::pi * (static_cast<double>(l) + 0.5) / static_cast<double>(per_dim);
        dirs.push_back(dir_from({std::sin(ph) * std::cos(th), std::sin(ph) * std::sin(th), std::cos(ph)}));
      }
  } else {
    // Weyl sequence directions, deterministic.
    for (std::size_t j = 0; j < 4096; ++j) {
      std::vector<double> v(n + 1, 0.0);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double q = std::fmod(0.5 + static_cast<double>(j + 1) * std::sqrt(2.0 + static_cast<double>(k)), 1.0);
        v[k] = 2.0 * q - 1.0;
        s += v[k] * v[k];
      }
      for (double& x : v) x /= std::sqrt(s);
      dirs.push_back(std::move(v));
    }
  }
  std::vector<std::vector<double>> out;
  out.push_back(c);
  for (std::size_t i = 0; i < per_dim; ++i) {
    const double rho = r * std::sin(std::numbers::pi * static_cast<double>(i + 1) /
                                    (2.0 * static_cast<double>(per_dim + 1)));
    for (const auto& d : dirs) out.push_back(sphere_exp(c, d, rho));
  }
  return out;
}

struct CertReport {
  bool pass = true;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  std::size_t worst_sample = 0;
  std::size_t failures = 0;
  bool pinching_ok = true;
  double f_min = std::numeric_limits<double>::infinity();
  double f_max = -std::numeric_limits<double>::infinity();
};

namespace detail {

template <class Form>
double min_eigenvalue_on_frame(const std::vector<std::vector<double>>& frame, Form&& form) {
  const auto d = static_cast<Eigen::Index>(frame.size());
  if (d == 0) return 0.0;
  Eigen::MatrixXd B(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = a; b < d; ++b) {
      const double v = form(frame[static_cast<std::size_t>(a)], frame[static_cast<std::size_t>(b)]);
      if (!std::isfinite(v)) throw std::domain_error("certificate: non-finite Hessian");
      B(a, b) = v;
      B(b, a) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(B, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

inline void require_inside(const RegularBallCert& cert, std::span<const double> y) {
  if (!cert.contains(y)) throw std::invalid_argument("certificate: sample outside Omega");
}

}  // namespace detail

inline constexpr double kCertEigenTolerance = 1e-10;

/// Checks -nabla^2 f - K2 f h - delta |nabla f|^2 / f h >= 0 and the
/// pinching C^-1 <= f <= C at every sample.
inline CertReport verify_regular_set(const RegularBallCert& cert, const EmbeddedTarget& target,
                                     const std::vector<std::vector<double>>& samples) {
  CertReport rep;
  const double K2 = target.sect_upper_bound();
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& y = samples[s];
    detail::require_inside(cert, y);
    const double f = cert.f.value(y);
    if (!(f > 0.0)) throw std::invalid_argument("verify_regular_set: f must be positive on Omega");
    rep.f_min = std::min(rep.f_min, f);
    rep.f_max = std::max(rep.f_max, f);
    const auto grad = cert.f.gradient(y);
    const double g2 = norm_sq(grad);
    const double shift = K2 * f + cert.delta * g2 / f;
    const auto frame = target.tangent_frame(y);
    const double lam = detail::min_eigenvalue_on_frame(
        frame, [&](const std::vector<double>& X, const std::vector<double>& Y) {
          return -cert.f.hessian(y, X, Y) - shift * dot(X, Y);
        });
    if (lam < rep.min_eigenvalue) {
      rep.min_eigenvalue = lam;
      rep.worst_sample = s;
    }
    if (lam < -kCertEigenTolerance) ++rep.failures;
  }
  const double C = cert.pinching;
  rep.pinching_ok = rep.f_min >= 1.0 / C - 1e-12 && rep.f_max <= C + 1e-12;
  rep.pass = rep.failures == 0 && rep.pinching_ok;
  return rep;
}

/// Checks that f* is convex (intrinsic Hessian PSD) at every sample and that
/// every sample lies in {f* < a}.
inline CertReport verify_sublevel(const RegularBallCert& cert, const EmbeddedTarget& target,
                                  const std::vector<std::vector<double>>& samples) {
  CertReport rep;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& y = samples[s];
    detail::require_inside(cert, y);
    const auto frame = target.tangent_frame(y);
    const double lam = detail::min_eigenvalue_on_frame(
        frame, [&](const std::vector<double>& X, const std::vector<double>& Y) {
          return cert.f_star.hessian(y, X, Y);
        });
    if (lam < rep.min_eigenvalue) {
      rep.min_eigenvalue = lam;
      rep.worst_sample = s;
    }
    if (lam < -kCertEigenTolerance) ++rep.failures;
  }
  rep.pass = rep.failures == 0;
  return rep;
}

}  // namespace pflow
