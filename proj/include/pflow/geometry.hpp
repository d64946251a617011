#pragma once

// Periodic structured grids carrying a Riemannian metric, and the
// difference operators the flow is built on.
//
// Derivatives come in two flavours:
//  - centred partials (gradient, grad_norm_sq) for pointwise diagnostics;
//  - forward differences living on faces (forward_difference), paired with
//    the staggered divergence div_weighted. The compact energy density
//    energy_density averages the squared one-sided differences at a node, so
//    that -div_weighted(F^{(p-2)/2}, D+u) is exactly the gradient of the
//    discrete energy (1/p) * integrate(F^{p/2}).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "pflow/field.hpp"

namespace pflow {

class DomainGrid {
 public:
  /// Pointwise metric description used by the constructor: conformal factor
  /// lambda(x) > 0 gives g = lambda^2 * identity.
  using ConformalFactor = std::function<double(std::span<const double>)>;

  DomainGrid(int m, std::size_t n, double period, ConformalFactor lambda = {},
             double ricci_lower_bound = 0.0)
      : m_(m), ricci_lower_bound_(ricci_lower_bound) {
    if (m < 1 || m > 3) throw std::invalid_argument("DomainGrid: dimension must be 1, 2 or 3");
    if (n < 4) throw std::invalid_argument("DomainGrid: need at least 4 nodes per axis");
    if (!(period > 0.0) || !std::isfinite(period))
      throw std::invalid_argument("DomainGrid: period must be positive");
    if (ricci_lower_bound < 0.0)
      throw std::invalid_argument("DomainGrid: Ricci lower bound K1 must be >= 0");
    for (int i = 0; i < 3; ++i) {
      sizes_[i] = i < m ? n : 1;
      periods_[i] = i < m ? period : 0.0;
      spacing_[i] = i < m ? period / static_cast<double>(n) : 0.0;
    }
    nodes_ = sizes_[0] * sizes_[1] * sizes_[2];
    flat_ = !lambda;

    metric_.assign(nodes_ * m_ * m_, 0.0);
    metric_inverse_.assign(nodes_ * m_ * m_, 0.0);
    vol_density_.assign(nodes_, 1.0);
    std::array<double, 3> x{};
    for (std::size_t node = 0; node < nodes_; ++node) {
      double l = 1.0;
      if (lambda) {
        coordinates(node, x);
        l = lambda(std::span<const double>(x.data(), static_cast<std::size_t>(m_)));
        if (!(l > 0.0) || !std::isfinite(l))
          throw std::invalid_argument("DomainGrid: conformal factor must be positive");
      }
      for (int i = 0; i < m_; ++i) {
        metric_[node * m_ * m_ + i * m_ + i] = l * l;
        metric_inverse_[node * m_ * m_ + i * m_ + i] = 1.0 / (l * l);
      }
      vol_density_[node] = std::pow(l, m_);
    }

    for (int axis = 0; axis < m_; ++axis) {
      plus_[axis].resize(nodes_);
      minus_[axis].resize(nodes_);
      for (std::size_t node = 0; node < nodes_; ++node) {
        auto idx = multi_index(node);
        auto up = idx;
        auto down = idx;
        up[axis] = (idx[axis] + 1) % sizes_[axis];
        down[axis] = (idx[axis] + sizes_[axis] - 1) % sizes_[axis];
        plus_[axis][node] = static_cast<std::uint32_t>(linear_index(up));
        minus_[axis][node] = static_cast<std::uint32_t>(linear_index(down));
      }
    }
  }

  int dim() const { return m_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t size(int axis) const { return sizes_[axis]; }
  double period(int axis) const { return periods_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double ricci_lower_bound() const { return ricci_lower_bound_; }
  bool is_flat() const { return flat_; }

  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < m_; ++i) v *= spacing_[i];
    return v;
  }

  double metric(std::size_t node, int i, int j) const {
    return metric_[node * m_ * m_ + i * m_ + j];
  }
  double metric_inverse(std::size_t node, int i, int j) const {
    return metric_inverse_[node * m_ * m_ + i * m_ + j];
  }
  double vol_density(std::size_t node) const { return vol_density_[node]; }

  std::size_t plus(int axis, std::size_t node) const { return plus_[axis][node]; }
  std::size_t minus(int axis, std::size_t node) const { return minus_[axis][node]; }

  std::array<std::size_t, 3> multi_index(std::size_t node) const {
    return {node % sizes_[0], (node / sizes_[0]) % sizes_[1], node / (sizes_[0] * sizes_[1])};
  }
  std::size_t linear_index(const std::array<std::size_t, 3>& idx) const {
    return idx[0] + sizes_[0] * (idx[1] + sizes_[1] * idx[2]);
  }

  /// Node coordinates in [0, period)^m; unused trailing entries are 0.
  void coordinates(std::size_t node, std::array<double, 3>& x) const {
    auto idx = multi_index(node);
    for (int i = 0; i < 3; ++i) x[i] = static_cast<double>(idx[i]) * spacing_[i];
  }
  std::array<double, 3> coordinates(std::size_t node) const {
    std::array<double, 3> x{};
    coordinates(node, x);
    return x;
  }

  /// Minimum-image coordinate distance from a node to a point. This is the
  /// geodesic distance for the flat torus.
  double periodic_distance(std::size_t node, std::span<const double> point) const {
    auto x = coordinates(node);
    double d2 = 0.0;
    for (int i = 0; i < m_; ++i) {
      double d = std::fmod(x[i] - point[i], periods_[i]);
      if (d > 0.5 * periods_[i]) d -= periods_[i];
      if (d < -0.5 * periods_[i]) d += periods_[i];
      d2 += d * d;
    }
    return std::sqrt(d2);
  }

 private:
  int m_;
  std::array<std::size_t, 3> sizes_{};
  std::array<double, 3> periods_{};
  std::array<double, 3> spacing_{};
  std::size_t nodes_ = 0;
  bool flat_ = true;
  double ricci_lower_bound_ = 0.0;
  std::vector<double> metric_;
  std::vector<double> metric_inverse_;
  std::vector<double> vol_density_;
  std::array<std::vector<std::uint32_t>, 3> plus_;
  std::array<std::vector<std::uint32_t>, 3> minus_;
};

/// Flat periodic grid [0, period)^m with n nodes per axis. K1 = 0.
inline DomainGrid build_flat_torus(int m, std::size_t n, double period) {
  return DomainGrid(m, n, period);
}

/// Conformally flat torus g = lambda(x)^2 * identity. K1 is metadata supplied
/// by the caller; it is not computed from the metric.
inline DomainGrid build_conformal_torus(int m, std::size_t n, double period,
                                        DomainGrid::ConformalFactor lambda,
                                        double ricci_lower_bound) {
  if (!lambda) throw std::invalid_argument("build_conformal_torus: missing conformal factor");
  return DomainGrid(m, n, period, std::move(lambda), ricci_lower_bound);
}

/// Sum of field * sqrt|g| * cell volume, in node order.
inline double integrate(std::span<const double> field, const DomainGrid& grid) {
  if (field.size() != grid.nodes()) throw std::invalid_argument("integrate: size mismatch");
  double s = 0.0;
  for (std::size_t x = 0; x < field.size(); ++x) s += field[x] * grid.vol_density(x);
  return s * grid.cell_volume();
}

/// Centred second-order periodic partials, one field per axis.
inline FaceField gradient(const AmbientField& u, const DomainGrid& grid) {
  FaceField out;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    AmbientField d(u.nodes(), u.dim());
    const double inv = 1.0 / (2.0 * grid.spacing(axis));
    for (std::size_t x = 0; x < u.nodes(); ++x) {
      auto up = u[grid.plus(axis, x)];
      auto down = u[grid.minus(axis, x)];
      auto dst = d[x];
      for (std::size_t k = 0; k < u.dim(); ++k) dst[k] = (up[k] - down[k]) * inv;
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Centred partials of a scalar field.
inline std::vector<ScalarField> gradient(std::span<const double> s, const DomainGrid& grid) {
  std::vector<ScalarField> out;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    ScalarField d(s.size());
    const double inv = 1.0 / (2.0 * grid.spacing(axis));
    for (std::size_t x = 0; x < s.size(); ++x)
      d[x] = (s[grid.plus(axis, x)] - s[grid.minus(axis, x)]) * inv;
    out.push_back(std::move(d));
  }
  return out;
}

/// (u(x + e_i) - u(x)) / h_i stored at x, i.e. on the face x + e_i/2.
inline FaceField forward_difference(const AmbientField& u, const DomainGrid& grid) {
  FaceField out;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    AmbientField d(u.nodes(), u.dim());
    const double inv = 1.0 / grid.spacing(axis);
    for (std::size_t x = 0; x < u.nodes(); ++x) {
      auto up = u[grid.plus(axis, x)];
      auto here = u[x];
      auto dst = d[x];
      for (std::size_t k = 0; k < u.dim(); ++k) dst[k] = (up[k] - here[k]) * inv;
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// g^{ij} <d_i u, d_j u> from centred partials.
inline ScalarField grad_norm_sq(const AmbientField& u, const DomainGrid& grid) {
  const FaceField d = gradient(u, grid);
  const int m = grid.dim();
  ScalarField out(u.nodes(), 0.0);
  for (std::size_t x = 0; x < u.nodes(); ++x) {
    double s = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double gij = grid.metric_inverse(x, i, j);
        if (gij != 0.0) s += gij * dot(d[i][x], d[j][x]);
      }
    out[x] = s;
  }
  return out;
}

/// Compact density eps + sum_i g^{ii} (|D+_i u|^2 + |D-_i u|^2) / 2.
inline ScalarField energy_density(const AmbientField& u, const DomainGrid& grid, double eps) {
  ScalarField out(u.nodes(), eps);
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const double inv_h2 = 1.0 / (grid.spacing(axis) * grid.spacing(axis));
    for (std::size_t x = 0; x < u.nodes(); ++x) {
      auto here = u[x];
      auto up = u[grid.plus(axis, x)];
      auto down = u[grid.minus(axis, x)];
      double sp = 0.0;
      double sm = 0.0;
      for (std::size_t k = 0; k < u.dim(); ++k) {
        sp += (up[k] - here[k]) * (up[k] - here[k]);
        sm += (here[k] - down[k]) * (here[k] - down[k]);
      }
      out[x] += grid.metric_inverse(x, axis, axis) * 0.5 * (sp + sm) * inv_h2;
    }
  }
  return out;
}

/// Face weight avg(w sqrt|g| g^{ii}) on the face between x and x + e_axis.
inline double face_weight(std::span<const double> w, const DomainGrid& grid, int axis,
                          std::size_t x) {
  const std::size_t xp = grid.plus(axis, x);
  return 0.5 * (w[x] * grid.vol_density(x) * grid.metric_inverse(x, axis, axis) +
                w[xp] * grid.vol_density(xp) * grid.metric_inverse(xp, axis, axis));
}

/// Staggered weighted divergence (1/sqrt|g|) D-_i (W_i v_i), with v a face
/// field (typically forward_difference(u)) and W_i the face-averaged weight.
/// Only diagonal metrics are supported by the staggered stencil.
inline AmbientField div_weighted(std::span<const double> w, const FaceField& v,
                                 const DomainGrid& grid) {
  if (static_cast<int>(v.size()) != grid.dim() || w.size() != grid.nodes())
    throw std::invalid_argument("div_weighted: shape mismatch");
  const std::size_t L = v[0].dim();
  AmbientField out(grid.nodes(), L);
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const double inv_h = 1.0 / grid.spacing(axis);
    for (std::size_t x = 0; x < grid.nodes(); ++x) {
      const double W = face_weight(w, grid, axis, x) * inv_h;
      if (W == 0.0) continue;
      auto flux = v[axis][x];
      auto here = out[x];
      auto up = out[grid.plus(axis, x)];
      for (std::size_t k = 0; k < L; ++k) {
        here[k] += W * flux[k];
        up[k] -= W * flux[k];
      }
    }
  }
  for (std::size_t x = 0; x < grid.nodes(); ++x) {
    const double s = 1.0 / grid.vol_density(x);
    for (double& c : out[x]) c *= s;
  }
  return out;
}

/// Node-wise pairing w * sum_i g^{ii} <v_i, dphi_i> averaged over the two
/// faces adjacent to each node. It is the right-hand side of the
/// summation-by-parts identity
///   integrate(<div_weighted(w, v), phi>) = -integrate(face_pairing(w, v, D+phi)).
inline ScalarField face_pairing(std::span<const double> w, const FaceField& v,
                                const FaceField& dphi, const DomainGrid& grid) {
  ScalarField out(grid.nodes(), 0.0);
  for (int axis = 0; axis < grid.dim(); ++axis) {
    for (std::size_t x = 0; x < grid.nodes(); ++x) {
      const std::size_t xm = grid.minus(axis, x);
      const double s = 0.5 * (dot(v[axis][x], dphi[axis][x]) + dot(v[axis][xm], dphi[axis][xm]));
      out[x] += w[x] * grid.metric_inverse(x, axis, axis) * s;
    }
  }
  return out;
}

}  // namespace pflow
