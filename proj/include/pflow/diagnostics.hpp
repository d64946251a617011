#pragma once

// Monitors evaluated along a flow run: energy, confinement, the gradient
// ratio phi = F / f(u)^2, local gradient estimates and stationary checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pflow/certificate.hpp"
#include "pflow/field.hpp"
#include "pflow/flow.hpp"
#include "pflow/geometry.hpp"
#include "pflow/target.hpp"

namespace pflow {

/// E_{p,eps}(u) = (1/p) integrate(F^{p/2}).
inline double energy(const AmbientField& u, const DomainGrid& grid, double p, double eps) {
  ScalarField F = energy_density(u, grid, eps);
  for (double& v : F) v = std::pow(v, 0.5 * p);
  return integrate(F, grid) / p;
}

inline double energy(const MapState& s, const DomainGrid& grid, double p) {
  return energy(s.u, grid, p, s.eps);
}

/// max over nodes of f*(u).
inline double confinement_max(const AmbientField& u, const RegularBallCert& cert) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < u.nodes(); ++x) m = std::max(m, cert.f_star.value(u[x]));
  return m;
}

inline double confinement_max(const MapState& s, const RegularBallCert& cert) {
  return confinement_max(s.u, cert);
}

/// phi = F / f(u)^2 from a precomputed density.
inline ScalarField phi_field(const AmbientField& u, std::span<const double> density,
                             const RegularBallCert& cert) {
  ScalarField out(u.nodes());
  for (std::size_t x = 0; x < u.nodes(); ++x) {
    if (!cert.contains(u[x])) throw std::invalid_argument("phi_field: u leaves Omega");
    const double f = cert.f.value(u[x]);
    out[x] = density[x] / (f * f);
  }
  return out;
}

inline ScalarField phi_field(const MapState& s, const RegularBallCert& cert,
                             const DomainGrid& grid) {
  return phi_field(s.u, energy_density(s.u, grid, s.eps), cert);
}

/// PASS iff series[n+1] <= series[n] (1 + rel_tol) for all n.
inline bool phi_max_monotone(std::span<const double> series, double rel_tol = 1e-6) {
  for (std::size_t n = 1; n < series.size(); ++n)
    if (series[n] > series[n - 1] * (1.0 + rel_tol)) return false;
  return true;
}

/// Number of n with series[n+1] > series[n] + abs_tol.
inline std::size_t count_increases(std::span<const double> series, double abs_tol) {
  std::size_t c = 0;
  for (std::size_t n = 1; n < series.size(); ++n)
    if (series[n] > series[n - 1] + abs_tol) ++c;
  return c;
}

/// Per-row monitor series of a run. Row 0 is the initial state; every later
/// row follows an accepted step.
struct MonitorReport {
  std::vector<std::size_t> step;
  std::vector<double> t;
  std::vector<double> eps;
  std::vector<double> energy;
  std::vector<double> dissipation_residual;
  std::vector<double> max_fstar;
  std::vector<double> max_phi;
  std::vector<double> stationarity_residual;
  std::vector<double> drift;
  /// Step size leading to this row (0 for row 0).
  std::vector<double> dt;
  /// dt * integrate(|du/dt|^2) of the step leading to this row.
  std::vector<double> dissipation_increment;
  /// integrate(|rhs|^2) at this row's state, i.e. the sampled |d_t u|^2.
  std::vector<double> rhs_sq;

  std::size_t size() const { return t.size(); }
};

struct StageSummary {
  double eps = 0.0;
  std::size_t first_row = 0;  ///< row holding the stage's starting state (or the row before)
  std::size_t last_row = 0;
  double t_start = 0.0;
  double t_stop = 0.0;
  double energy_start = 0.0;  ///< E_{p,eps} of the stage's initial state
  double energy_stop = 0.0;
  double dissipated = 0.0;    ///< sum of dt * integrate(|du/dt|^2)
  double dissipated_trapezoid = 0.0;  ///< trapezoidal quadrature of integrate(|rhs|^2) in t
  std::size_t steps = 0;
  double final_residual = 0.0;
  bool converged = false;
};

/// |E_end - E_start + sum dt integrate(|du/dt|^2)| / |E(0)|, summed over
/// stages; for a single-eps record this is the plain energy-balance defect.
inline double dissipation_residual(const std::vector<StageSummary>& stages) {
  if (stages.empty()) return 0.0;
  const double E0 = std::abs(stages.front().energy_start);
  double s = 0.0;
  for (const auto& st : stages) s += std::abs(st.energy_stop - st.energy_start + st.dissipated);
  return E0 > 0.0 ? s / E0 : s;
}

/// A geodesic ball B(center, R) on the domain whose gradient history is
/// tracked for local estimates.
struct BallProbe {
  std::array<double, 3> center{};
  double radius = 1.0;
};

struct ProbeHistory {
  BallProbe probe;
  double p = 2.0;
  std::vector<double> t;
  std::vector<double> sup_half;   ///< sup_{B(x0,R/2)} |du|
  std::vector<double> integral;   ///< integral_{B(x0,R)} |du|^p dx
  double initial_sup_full = 0.0;  ///< sup_{B(x0,R)} |du_0|

  void record(double time, const AmbientField& u, const DomainGrid& grid) {
    const ScalarField g2 = grad_norm_sq(u, grid);
    const std::span<const double> c(probe.center.data(), static_cast<std::size_t>(grid.dim()));
    double sup = 0.0;
    double sup_full = 0.0;
    double integ = 0.0;
    for (std::size_t x = 0; x < grid.nodes(); ++x) {
      const double d = grid.periodic_distance(x, c);
      const double g = std::sqrt(g2[x]);
      if (d < probe.radius) {
        sup_full = std::max(sup_full, g);
        integ += std::pow(g, p) * grid.vol_density(x);
      }
      if (d < 0.5 * probe.radius) sup = std::max(sup, g);
    }
    if (t.empty()) initial_sup_full = sup_full;
    t.push_back(time);
    sup_half.push_back(sup);
    integral.push_back(integ * grid.cell_volume());
  }
};

struct LocalEstimateReport {
  std::array<double, 3> center{};
  double radius = 0.0;
  double t0 = 0.0;
  bool late_branch = false;  ///< t0 > R: cylinder [t0 - R, t0]; else [0, t0] plus |du_0| term
  double lhs = 0.0;
  double rhs_core = 0.0;
  double c_emp = 0.0;
};

namespace detail {

inline double interpolate(std::span<const double> t, std::span<const double> v, double at) {
  auto it = std::lower_bound(t.begin(), t.end(), at);
  if (it == t.begin()) return v.front();
  if (it == t.end()) return v.back();
  const std::size_t i = static_cast<std::size_t>(it - t.begin());
  const double a = (at - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - a) * v[i - 1] + a * v[i];
}

/// Trapezoid of the piecewise-linear interpolant of v over [a, b].
inline double integrate_window(std::span<const double> t, std::span<const double> v, double a,
                               double b) {
  double s = 0.0;
  double prev_t = a;
  double prev_v = interpolate(t, v, a);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] <= a) continue;
    if (t[i] >= b) break;
    s += 0.5 * (prev_v + v[i]) * (t[i] - prev_t);
    prev_t = t[i];
    prev_v = v[i];
  }
  s += 0.5 * (prev_v + interpolate(t, v, b)) * (b - prev_t);
  return s;
}

}  // namespace detail

/// Empirical constant of the local gradient bound on the cylinder ending at
/// t0. The history must cover [max(0, t0 - R), t0].
inline LocalEstimateReport local_gradient_estimate(const ProbeHistory& h, double t0) {
  if (h.t.empty()) throw std::invalid_argument("local_gradient_estimate: empty history");
  const double R = h.probe.radius;
  if (!(t0 > 0.0) || t0 > h.t.back() * (1.0 + 1e-12))
    throw std::invalid_argument("local_gradient_estimate: cylinder not contained in history");
  LocalEstimateReport rep;
  rep.center = h.probe.center;
  rep.radius = R;
  rep.t0 = t0;
  rep.late_branch = t0 > R;
  const double sup_from = rep.late_branch ? t0 - 0.5 * R : 0.0;
  const double int_from = rep.late_branch ? t0 - R : 0.0;
  if (int_from < h.t.front() - 1e-12)
    throw std::invalid_argument("local_gradient_estimate: cylinder starts before history");
  double lhs = detail::interpolate(h.t, h.sup_half, sup_from);
  lhs = std::max(lhs, detail::interpolate(h.t, h.sup_half, t0));
  for (std::size_t i = 0; i < h.t.size(); ++i)
    if (h.t[i] >= sup_from && h.t[i] <= t0) lhs = std::max(lhs, h.sup_half[i]);
  rep.lhs = lhs;
  rep.rhs_core = detail::integrate_window(h.t, h.integral, int_from, t0) + 1.0;
  if (!rep.late_branch) rep.rhs_core += h.initial_sup_full;
  rep.c_emp = rep.lhs / rep.rhs_core;
  return rep;
}

struct EllipticPhiReport {
  std::size_t active_nodes = 0;  ///< nodes with F - eps > 10 eps
  double max_grad_phi = 0.0;
  bool vacuous = true;
};

/// On the set {F - eps > 10 eps} of a stationary state, the max of |d phi|
/// (centred differences). Refuses states that are not stationary to `tol`.
inline EllipticPhiReport elliptic_phi_check(const MapState& s, const RegularBallCert& cert,
                                            const DomainGrid& grid, const EmbeddedTarget& target,
                                            double p, double tol) {
  if (!(stationarity_residual(s, grid, target, p) < tol))
    throw std::invalid_argument("elliptic_phi_check: state is not stationary");
  const ScalarField F = energy_density(s.u, grid, s.eps);
  const ScalarField phi = phi_field(s.u, F, cert);
  const auto dphi = gradient(std::span<const double>(phi), grid);
  EllipticPhiReport rep;
  for (std::size_t x = 0; x < grid.nodes(); ++x) {
    if (!(F[x] - s.eps > 10.0 * s.eps)) continue;
    ++rep.active_nodes;
    double g = 0.0;
    for (int i = 0; i < grid.dim(); ++i)
      for (int j = 0; j < grid.dim(); ++j)
        g += grid.metric_inverse(x, i, j) * dphi[static_cast<std::size_t>(i)][x] *
             dphi[static_cast<std::size_t>(j)][x];
    rep.max_grad_phi = std::max(rep.max_grad_phi, std::sqrt(g));
  }
  rep.vacuous = rep.active_nodes == 0;
  return rep;
}

}  // namespace pflow
