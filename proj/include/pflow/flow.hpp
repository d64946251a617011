#pragma once

// Explicit time stepping of the regularised p-harmonic map heat flow
//   d_t u = Delta_{p,eps} u + F^{(p-2)/2} A(u)(du, du),   F = |du|^2 + eps,
// on a periodic grid, into an embedded target.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pflow/field.hpp"
#include "pflow/geometry.hpp"
#include "pflow/target.hpp"

namespace pflow {

enum class Scheme {
  explicit_with_second_form,  ///< u <- u + dt * rhs, reprojected every reproject_every steps
  project_after_step,         ///< u <- Pi(u + dt * Delta_{p,eps} u)
};

inline std::string to_string(Scheme s) {
  return s == Scheme::explicit_with_second_form ? "explicit-with-A-term" : "project-after-step";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "explicit-with-A-term" || s == "explicit") return Scheme::explicit_with_second_form;
  if (s == "project-after-step" || s == "project") return Scheme::project_after_step;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

struct FlowConfig {
  double p = 2.0;
  /// Decreasing regularisation schedule, one stage per entry.
  std::vector<double> eps_schedule{1e-2};
  double dt_safety = 0.25;
  Scheme scheme = Scheme::explicit_with_second_form;
  /// 0 disables reprojection for the explicit scheme.
  int reproject_every = 1;
  /// Time horizon of each stage.
  double t_end = 10.0;
  /// Stage stops once the stationarity residual drops below this.
  double stat_tol = 1e-6;
  /// Fixed step size; 0 selects the CFL step at every step.
  double fixed_dt = 0.0;
  std::size_t max_steps_per_stage = 50'000'000;
  /// Constraint violation beyond which the state counts as lost.
  double drift_abort = 1e-2;
  /// Keep one monitor row every `record_every` steps (plus stage ends).
  std::size_t record_every = 1;

  void validate() const {
    if (!(p >= 2.0)) throw std::invalid_argument("flow: p must be >= 2");
    if (eps_schedule.empty()) throw std::invalid_argument("flow: empty eps schedule");
    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
      if (!(eps_schedule[k] > 0.0)) throw std::invalid_argument("flow: every eps must be > 0");
      if (k > 0 && eps_schedule[k] > eps_schedule[k - 1])
        throw std::invalid_argument("flow: eps schedule must be nonincreasing");
    }
    if (!(dt_safety > 0.0 && dt_safety <= 1.0))
      throw std::invalid_argument("flow: dt_safety must lie in (0, 1]");
    if (reproject_every < 0) throw std::invalid_argument("flow: reproject_every must be >= 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("flow: t_end must be positive");
    if (stat_tol < 0.0) throw std::invalid_argument("flow: stat_tol must be >= 0");
    if (fixed_dt < 0.0) throw std::invalid_argument("flow: fixed_dt must be >= 0");
    if (record_every == 0) throw std::invalid_argument("flow: record_every must be >= 1");
  }
};

struct MapState {
  AmbientField u;
  double t = 0.0;
  double eps = 0.0;
};

/// Raised on non-finite values or loss of the target during stepping.
class FlowAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pointwise F^{(p-2)/2}.
inline ScalarField flow_weight(std::span<const double> F, double p) {
  ScalarField w(F.size(), 1.0);
  if (p == 2.0) return w;
  const double e = 0.5 * (p - 2.0);
  for (std::size_t x = 0; x < F.size(); ++x) w[x] = std::pow(F[x], e);
  return w;
}

/// Delta_{p,eps} u = div_weighted(F^{(p-2)/2}, D+u).
inline AmbientField p_laplacian_eps(const MapState& s, const DomainGrid& grid, double p) {
  const ScalarField w = flow_weight(energy_density(s.u, grid, s.eps), p);
  return div_weighted(w, forward_difference(s.u, grid), grid);
}

/// Discrete F^{(p-2)/2} A(u)(du, du). The contraction of Hess Phi_k with the
/// partials is taken over the same faces and face weights as the staggered
/// divergence: each node collects half of W <Hess Phi_k D+u, D+u> from each
/// adjacent face, divided by sqrt|g|. For quadric constraints this cancels
/// the normal part of Delta_{p,eps} u exactly whenever u lies on N.
inline AmbientField second_form_term(const AmbientField& u, const FaceField& du,
                                     std::span<const double> w, const DomainGrid& grid,
                                     const EmbeddedTarget& target, double drift_tol) {
  const std::size_t K = target.codim();
  AmbientField out(u.nodes(), u.dim());
  if (K == 0) return out;
  std::vector<double> acc(u.nodes() * K, 0.0);
  const auto& cs = target.constraints();
  for (int axis = 0; axis < grid.dim(); ++axis) {
    for (std::size_t x = 0; x < u.nodes(); ++x) {
      const std::size_t xp = grid.plus(axis, x);
      const double W = 0.5 * face_weight(w, grid, axis, x);
      auto d = du[axis][x];
      for (std::size_t k = 0; k < K; ++k) {
        acc[x * K + k] += W * cs[k].hessian_form(u[x], d, d);
        acc[xp * K + k] += W * cs[k].hessian_form(u[xp], d, d);
      }
    }
  }
  for (std::size_t x = 0; x < u.nodes(); ++x) {
    if (target.violation(u[x]) > drift_tol)
      throw DriftError("second_form_term: state left the tubular neighbourhood of N");
    const double inv_sg = 1.0 / grid.vol_density(x);
    target.accumulate_normal_term(
        u[x], [&](std::size_t k) { return acc[x * K + k] * inv_sg; }, out[x]);
  }
  return out;
}

/// Everything the stepper needs at one state.
struct FlowFields {
  ScalarField density;   ///< F = |du|^2 + eps (compact form)
  ScalarField weight;    ///< F^{(p-2)/2}
  AmbientField laplacian;
  AmbientField rhs;
};

inline FlowFields evaluate_flow_fields(const MapState& s, const DomainGrid& grid,
                                       const EmbeddedTarget& target, double p,
                                       double drift_tol = 1e-2) {
  FlowFields f;
  f.density = energy_density(s.u, grid, s.eps);
  f.weight = flow_weight(f.density, p);
  const FaceField du = forward_difference(s.u, grid);
  f.laplacian = div_weighted(f.weight, du, grid);
  f.rhs = f.laplacian;
  const AmbientField a = second_form_term(s.u, du, f.weight, grid, target, drift_tol);
  auto& r = f.rhs.raw();
  const auto& ar = a.raw();
  for (std::size_t k = 0; k < r.size(); ++k) r[k] += ar[k];
  return f;
}

/// Delta_{p,eps} u + F^{(p-2)/2} A(u)(du, du).
inline AmbientField rhs(const MapState& s, const DomainGrid& grid, const EmbeddedTarget& target,
                        double p, double drift_tol = 1e-2) {
  return evaluate_flow_fields(s, grid, target, p, drift_tol).rhs;
}

/// Pointwise squared norm of an ambient field.
inline ScalarField pointwise_norm_sq(const AmbientField& v) {
  ScalarField out(v.nodes());
  for (std::size_t x = 0; x < v.nodes(); ++x) out[x] = norm_sq(v[x]);
  return out;
}

/// sqrt(integrate |v|^2)
inline double l2_norm(const AmbientField& v, const DomainGrid& grid) {
  return std::sqrt(integrate(pointwise_norm_sq(v), grid));
}

/// L2 norm of the flow's right-hand side at the state's eps (pass a copy
/// with eps = 0 for the unregularised tension).
inline double stationarity_residual(const MapState& s, const DomainGrid& grid,
                                    const EmbeddedTarget& target, double p) {
  return l2_norm(rhs(s, grid, target, p), grid);
}

/// L2 norm of Delta_{p,eps} u + F^{(p-2)/2} sff_contract(u, centred partials),
/// i.e. the pointwise second-fundamental-form term evaluated from centred
/// differences. It is O(h^2) on smooth p-harmonic maps and measures the
/// consistency of the discrete operator with the continuum equation.
inline double consistency_residual(const MapState& s, const DomainGrid& grid,
                                   const EmbeddedTarget& target, double p) {
  const ScalarField F = energy_density(s.u, grid, s.eps);
  const ScalarField w = flow_weight(F, p);
  AmbientField r = div_weighted(w, forward_difference(s.u, grid), grid);
  const FaceField d = gradient(s.u, grid);
  const int m = grid.dim();
  std::vector<double> ginv(static_cast<std::size_t>(m * m));
  std::vector<std::span<const double>> partials(static_cast<std::size_t>(m));
  ScalarField Fc = grad_norm_sq(s.u, grid);
  for (std::size_t x = 0; x < s.u.nodes(); ++x) {
    for (int i = 0; i < m; ++i) {
      partials[static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)][x];
      for (int j = 0; j < m; ++j)
        ginv[static_cast<std::size_t>(i * m + j)] = grid.metric_inverse(x, i, j);
    }
    const auto a = sff_contract(target, s.u[x], partials, ginv, 1e-2);
    const double wc = p == 2.0 ? 1.0 : std::pow(Fc[x] + s.eps, 0.5 * (p - 2.0));
    auto rx = r[x];
    for (std::size_t k = 0; k < a.size(); ++k) rx[k] += wc * a[k];
  }
  return l2_norm(r, grid);
}

/// dt = sigma min_i h_i^2 / (2 m max(F)^{(p-2)/2} max g^{ii})
inline double cfl_dt(std::span<const double> density, const DomainGrid& grid, double p,
                     double sigma) {
  if (!(sigma > 0.0 && sigma <= 1.0)) throw std::invalid_argument("cfl_dt: sigma must be in (0, 1]");
  double hmin2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.dim(); ++i) hmin2 = std::min(hmin2, grid.spacing(i) * grid.spacing(i));
  double Fmax = 0.0;
  for (double F : density) Fmax = std::max(Fmax, F);
  double gmax = 0.0;
  for (std::size_t x = 0; x < grid.nodes(); ++x)
    for (int i = 0; i < grid.dim(); ++i) gmax = std::max(gmax, grid.metric_inverse(x, i, i));
  const double wmax = p == 2.0 ? 1.0 : std::pow(Fmax, 0.5 * (p - 2.0));
  return sigma * hmin2 / (2.0 * grid.dim() * wmax * gmax);
}

inline double cfl_dt(const MapState& s, const DomainGrid& grid, const FlowConfig& config) {
  return cfl_dt(energy_density(s.u, grid, s.eps), grid, config.p, config.dt_safety);
}

/// Max over nodes of max_k |Phi_k(u)|.
inline double manifold_drift(const AmbientField& u, const EmbeddedTarget& target) {
  double d = 0.0;
  for (std::size_t x = 0; x < u.nodes(); ++x) d = std::max(d, target.violation(u[x]));
  return d;
}

inline double manifold_drift(const MapState& s, const EmbeddedTarget& target) {
  return manifold_drift(s.u, target);
}

inline void project_field(AmbientField& u, const EmbeddedTarget& target) {
  for (std::size_t x = 0; x < u.nodes(); ++x) target.project(u[x]);
}

/// One explicit step of size dt from precomputed fields. `step_index` is the
/// 1-based index of the step being taken, used for the reprojection cadence.
inline MapState advance(const MapState& s, const FlowFields& fields, double dt,
                        const EmbeddedTarget& target, const FlowConfig& config,
                        std::size_t step_index) {
  MapState next{s.u, s.t + dt, s.eps};
  auto& u = next.u.raw();
  const auto& v = config.scheme == Scheme::explicit_with_second_form ? fields.rhs.raw()
                                                                     : fields.laplacian.raw();
  for (std::size_t k = 0; k < u.size(); ++k) u[k] += dt * v[k];
  const bool reproject =
      config.scheme == Scheme::project_after_step ||
      (config.reproject_every > 0 && step_index % static_cast<std::size_t>(config.reproject_every) == 0);
  if (!next.u.all_finite()) throw FlowAbort("non-finite value after step at t = " + std::to_string(s.t));
  if (reproject) {
    try {
      project_field(next.u, target);
    } catch (const DriftError& e) {
      throw FlowAbort(std::string("projection failed: ") + e.what());
    }
  }
  const double drift = manifold_drift(next.u, target);
  if (drift > config.drift_abort)
    throw FlowAbort("drift " + std::to_string(drift) + " beyond tubular tolerance");
  return next;
}

/// One step with the CFL (or fixed) step size.
inline MapState step(const MapState& s, const DomainGrid& grid, const EmbeddedTarget& target,
                     const FlowConfig& config, std::size_t step_index = 1) {
  if (!(s.eps > 0.0)) throw std::invalid_argument("step: eps must be > 0 while stepping");
  const FlowFields f = evaluate_flow_fields(s, grid, target, config.p, config.drift_abort);
  const double dt = config.fixed_dt > 0.0 ? config.fixed_dt
                                          : cfl_dt(f.density, grid, config.p, config.dt_safety);
  return advance(s, f, dt, target, config, step_index);
}

/// <|a|^{p-2} a - |b|^{p-2} b, a - b>, bounded below by 2^{2-p} |a - b|^p.
inline double monotonicity_gap(std::span<const double> a, std::span<const double> b, double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("monotonicity_gap: p must be >= 2");
  if (a.size() != b.size()) throw std::invalid_argument("monotonicity_gap: size mismatch");
  const double na = std::sqrt(norm_sq(a));
  const double nb = std::sqrt(norm_sq(b));
  const double sa = p == 2.0 ? 1.0 : std::pow(na, p - 2.0);
  const double sb = p == 2.0 ? 1.0 : std::pow(nb, p - 2.0);
  double g = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) g += (sa * a[k] - sb * b[k]) * (a[k] - b[k]);
  return g;
}

}  // namespace pflow
