#pragma once

// Target manifolds N embedded in R^L as the common zero set of constraints
// Phi_k with mutually orthogonal gradients on N.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pflow/field.hpp"

namespace pflow {

struct Constraint {
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  /// <Hess Phi(y) a, b>
  std::function<double(std::span<const double>, std::span<const double>, std::span<const double>)>
      hessian_form;
};

/// Raised when a point has left the tubular neighbourhood of N.
class DriftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmbeddedTarget {
 public:
  using Projector = std::function<void(std::span<double>)>;

  EmbeddedTarget(std::string name, std::size_t ambient_dim, double sect_upper_bound,
                 std::vector<Constraint> constraints, Projector projector = {})
      : name_(std::move(name)),
        ambient_dim_(ambient_dim),
        sect_upper_bound_(sect_upper_bound),
        constraints_(std::move(constraints)),
        projector_(std::move(projector)) {
    if (sect_upper_bound_ < 0.0)
      throw std::invalid_argument("EmbeddedTarget: K2 must be nonnegative");
  }

  const std::string& name() const { return name_; }
  std::size_t ambient_dim() const { return ambient_dim_; }
  std::size_t intrinsic_dim() const { return ambient_dim_ - constraints_.size(); }
  std::size_t codim() const { return constraints_.size(); }
  /// K2 = sup(sectional curvature, 0).
  double sect_upper_bound() const { return sect_upper_bound_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  double constraint_value(std::size_t k, std::span<const double> y) const {
    return constraints_[k].value(y);
  }

  /// max_k |Phi_k(y)|
  double violation(std::span<const double> y) const {
    double v = 0.0;
    for (const auto& c : constraints_) v = std::max(v, std::abs(c.value(y)));
    return v;
  }

  /// Closest-point projection onto N. Built-in targets supply a closed form;
  /// otherwise Gauss-Newton along the constraint gradients.
  void project(std::span<double> y) const {
    if (projector_) {
      projector_(y);
      return;
    }
    std::vector<double> g(ambient_dim_);
    for (int iter = 0; iter < 100; ++iter) {
      if (violation(y) <= 1e-15) return;
      for (const auto& c : constraints_) {
        const double phi = c.value(y);
        c.gradient(y, g);
        const double n2 = norm_sq(g);
        if (n2 == 0.0) throw DriftError("project: degenerate constraint gradient");
        for (std::size_t k = 0; k < ambient_dim_; ++k) y[k] -= phi * g[k] / n2;
      }
    }
    if (violation(y) > 1e-12) throw DriftError("project: Gauss-Newton did not converge");
  }

  std::vector<double> projected(std::span<const double> y) const {
    std::vector<double> out(y.begin(), y.end());
    project(out);
    return out;
  }

  /// Remove the normal component of v at y (orthogonal constraints assumed).
  void tangent_project(std::span<const double> y, std::span<double> v) const {
    std::vector<double> g(ambient_dim_);
    for (const auto& c : constraints_) {
      c.gradient(y, g);
      const double n2 = norm_sq(g);
      if (n2 == 0.0) continue;
      const double s = dot(v, g) / n2;
      for (std::size_t k = 0; k < ambient_dim_; ++k) v[k] -= s * g[k];
    }
  }

  /// Orthonormal basis of T_y N, obtained by Gram-Schmidt of the normals
  /// followed by the standard basis.
  std::vector<std::vector<double>> tangent_frame(std::span<const double> y) const {
    std::vector<std::vector<double>> basis;
    std::vector<double> g(ambient_dim_);
    for (const auto& c : constraints_) {
      c.gradient(y, g);
      orthonormal_append(basis, g);
    }
    const std::size_t normals = basis.size();
    for (std::size_t e = 0; e < ambient_dim_ && basis.size() < ambient_dim_; ++e) {
      std::vector<double> v(ambient_dim_, 0.0);
      v[e] = 1.0;
      orthonormal_append(basis, v);
    }
    return {basis.begin() + static_cast<std::ptrdiff_t>(normals), basis.end()};
  }

  /// Adds sum_k q_k / |grad Phi_k(y)|^2 * grad Phi_k(y) to out, where q_k =
  /// q(k) is a quadratic form in Hess Phi_k supplied by the caller.
  template <class Quadratic>
  void accumulate_normal_term(std::span<const double> y, Quadratic&& q,
                              std::span<double> out) const {
    std::vector<double> g(ambient_dim_);
    for (std::size_t k = 0; k < constraints_.size(); ++k) {
      const auto& c = constraints_[k];
      const double qk = q(k);
      if (qk == 0.0) continue;
      c.gradient(y, g);
      const double n2 = norm_sq(g);
      if (n2 == 0.0) throw DriftError("second fundamental form: degenerate constraint gradient");
      for (std::size_t l = 0; l < ambient_dim_; ++l) out[l] += qk / n2 * g[l];
    }
  }

 private:
  static void orthonormal_append(std::vector<std::vector<double>>& basis, std::vector<double> v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) {
        const double s = dot(v, b);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] -= s * b[k];
      }
    const double n = std::sqrt(norm_sq(v));
    if (n < 1e-8) return;
    for (double& c : v) c /= n;
    basis.push_back(std::move(v));
  }

  std::string name_;
  std::size_t ambient_dim_;
  double sect_upper_bound_;
  std::vector<Constraint> constraints_;
  Projector projector_;
};

namespace detail {

/// Phi(y) = (sum_{k in [lo, hi)} y_k^2 - radius^2) / 2.
inline Constraint round_constraint(std::size_t lo, std::size_t hi, double radius) {
  Constraint c;
  c.value = [=](std::span<const double> y) {
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += y[k] * y[k];
    return 0.5 * (s - radius * radius);
  };
  c.gradient = [=](std::span<const double> y, std::span<double> g) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = (k >= lo && k < hi) ? y[k] : 0.0;
  };
  c.hessian_form = [=](std::span<const double>, std::span<const double> a,
                       std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += a[k] * b[k];
    return s;
  };
  return c;
}

inline void radial_project(std::span<double> y, std::size_t lo, std::size_t hi, double radius) {
  double s = 0.0;
  for (std::size_t k = lo; k < hi; ++k) s += y[k] * y[k];
  if (s == 0.0) throw DriftError("project: point at the centre of a round factor");
  const double scale = radius / std::sqrt(s);
  for (std::size_t k = lo; k < hi; ++k) y[k] *= scale;
}

}  // namespace detail

/// Unit sphere S^n in R^{n+1}, Phi = (|y|^2 - 1)/2, K2 = 1.
inline EmbeddedTarget make_sphere(std::size_t n) {
  if (n < 1) throw std::invalid_argument("make_sphere: intrinsic dimension must be >= 1");
  const std::size_t L = n + 1;
  return EmbeddedTarget("sphere", L, 1.0, {detail::round_constraint(0, L, 1.0)},
                        [L](std::span<double> y) { detail::radial_project(y, 0, L, 1.0); });
}

/// S^1(1/sqrt2) x S^1(1/sqrt2) in R^4; flat, K2 = 0.
inline EmbeddedTarget make_clifford_torus() {
  const double r = 1.0 / std::numbers::sqrt2;
  return EmbeddedTarget("clifford", 4, 0.0,
                        {detail::round_constraint(0, 2, r), detail::round_constraint(2, 4, r)},
                        [r](std::span<double> y) {
                          detail::radial_project(y, 0, 2, r);
                          detail::radial_project(y, 2, 4, r);
                        });
}

/// R^L itself: no constraints, A = 0.
inline EmbeddedTarget make_euclidean(std::size_t L) {
  if (L < 1) throw std::invalid_argument("make_euclidean: dimension must be >= 1");
  return EmbeddedTarget("euclidean", L, 0.0, {}, [](std::span<double>) {});
}

/// A(y)(du, du) = sum_k [g^{ij} <Hess Phi_k d_i u, d_j u> / |grad Phi_k|^2] grad Phi_k.
/// For the unit sphere this is g^{ij}<d_i u, d_j u> y. `metric_inverse` is a
/// row-major m x m matrix, m = partials.size().
inline std::vector<double> sff_contract(const EmbeddedTarget& target, std::span<const double> y,
                                        const std::vector<std::span<const double>>& partials,
                                        std::span<const double> metric_inverse,
                                        double tolerance = 1e-6) {
  const std::size_t m = partials.size();
  if (metric_inverse.size() != m * m)
    throw std::invalid_argument("sff_contract: metric size mismatch");
  if (target.violation(y) > tolerance)
    throw DriftError("sff_contract: point is outside the tubular neighbourhood of N");
  std::vector<double> out(target.ambient_dim(), 0.0);
  target.accumulate_normal_term(
      y,
      [&](std::size_t k) {
        const Constraint& c = target.constraints()[k];
        double q = 0.0;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = metric_inverse[i * m + j];
            if (gij != 0.0) q += gij * c.hessian_form(y, partials[i], partials[j]);
          }
        return q;
      },
      out);
  return out;
}

}  // namespace pflow
