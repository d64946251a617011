#pragma once

// Scenario catalogue S1-S5, property evaluation and scenario summaries.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pflow/certificate.hpp"
#include "pflow/diagnostics.hpp"
#include "pflow/flow.hpp"
#include "pflow/harness/config.hpp"
#include "pflow/harness/io.hpp"
#include "pflow/initial.hpp"
#include "pflow/run.hpp"

namespace pflow::harness {

/// A property to check across several runs of a scenario; `runs` names the
/// run labels it compares and `params` carries check-specific numbers.
struct ExpectedProperty {
  std::string name;
  double tolerance = 0.0;
  std::vector<std::string> runs;
  std::vector<double> params;
};

struct ScenarioSpec {
  std::string id;
  std::string description;
  std::vector<RunSpec> runs;
  std::vector<ExpectedProperty> expected;
  std::uint64_t seed = 1;
};

struct PropertyResult {
  std::string name;
  std::string scope;  ///< run label, or "scenario"
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct RunOutcome {
  RunSpec spec;
  Materialised built;
  RunRecord record;
};

struct ScenarioResult {
  std::string id;
  std::vector<RunOutcome> runs;
  std::vector<PropertyResult> properties;
  double wall_seconds = 0.0;

  bool all_pass() const {
    return std::all_of(properties.begin(), properties.end(),
                       [](const PropertyResult& p) { return p.pass; });
  }
  const RunOutcome& run(const std::string& label) const {
    for (const auto& r : runs)
      if (r.spec.label == label) return r;
    throw std::out_of_range("scenario " + id + " has no run '" + label + "'");
  }
};

/// What each property name asserts, for summaries.
inline std::string property_meaning(const std::string& name) {
  static const std::map<std::string, std::string> m = {
      {"no_abort", "run completed without NaN, drift or confinement abort"},
      {"energy_monotone", "regularised energy non-increasing at every step"},
      {"confinement", "max f*(u) never exceeds its initial value"},
      {"phi_max_monotone", "max of F / f(u)^2 non-increasing"},
      {"stationarity", "flow reaches a discrete p-harmonic map"},
      {"limit_energy", "p-energy of the limit does not exceed that of the data"},
      {"drift", "state stays on the target up to roundoff"},
      {"energy_inequality", "dissipated energy plus final energy bounded by initial energy"},
      {"energy_decay", "final p-energy negligible relative to the initial p-energy"},
      {"final_constant", "final map is constant"},
      {"wrap_limit", "final map is the geodesic wrap"},
      {"elliptic_phi", "F / f(u)^2 constant where the gradient is nonzero at the limit"},
      {"dissipation_first_order", "energy-balance defect is first order in dt"},
      {"local_estimate_refinement", "local gradient constant stable under refinement"},
      {"restriction_agreement", "limits on a fixed ball agree across torus sizes"},
      {"restriction_decreasing", "fixed-ball discrepancy shrinks as the torus grows"},
      {"dt_order", "the distance between the two schemes shrinks at least first order in dt"},
      {"scheme_distance", "the two time schemes agree to O(dt + h^2)"},
      {"determinism", "identical runs produce identical CSV bytes"},
      {"schedule_agreement", "different eps schedules reach the same limit"},
      {"final_energy_agreement", "different eps schedules reach the same final energy"},
  };
  auto it = m.find(name);
  return it == m.end() ? "" : it->second;
}

// ---- per-run properties ------------------------------------------------------

inline std::vector<std::string> default_run_properties(const RunSpec& spec) {
  std::vector<std::string> out{"no_abort", "energy_monotone"};
  if (spec.ball) {
    out.push_back("confinement");
    if (spec.ball->kind == "cap") out.push_back("phi_max_monotone");
  }
  return out;
}

inline double p_energy(const AmbientField& u, const DomainGrid& grid, double p) {
  return energy(u, grid, p, 0.0);
}

inline PropertyResult evaluate_run_property(const std::string& name, const RunOutcome& o,
                                            double tolerance = std::nan("")) {
  const auto& rep = o.record.report;
  const auto& grid = o.built.grid;
  const double p = o.spec.flow.p;
  auto tol = [&](double fallback) { return std::isnan(tolerance) ? fallback : tolerance; };
  PropertyResult r;
  r.name = name;
  r.scope = o.spec.label;
  if (name == "no_abort") {
    r.pass = !o.record.aborted;
    r.value = o.record.aborted ? 1.0 : 0.0;
    r.detail = o.record.abort_reason;
  } else if (name == "energy_monotone") {
    r.tolerance = tol(1e-12);
    const double slack = r.tolerance * std::abs(rep.energy.front());
    std::size_t violations = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rep.size(); ++i) {
      const double inc = rep.energy[i] - rep.energy[i - 1];
      worst = std::max(worst, inc);
      if (inc > slack) ++violations;
    }
    r.value = static_cast<double>(violations);
    r.pass = violations == 0 && !o.record.aborted;
    r.detail = "largest step increase " + format_double(rep.size() > 1 ? worst : 0.0);
  } else if (name == "confinement") {
    r.tolerance = tol(1e-8);
    if (!o.built.cert) throw ConfigError("property 'confinement' needs a ball");
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : rep.max_fstar) mx = std::max(mx, v);
    r.value = mx - rep.max_fstar.front();
    r.pass = r.value <= r.tolerance && mx < o.built.cert->a && !o.record.aborted;
    r.detail = "initial max f* " + format_double(rep.max_fstar.front()) + ", a " +
               format_double(o.built.cert->a);
  } else if (name == "phi_max_monotone") {
    r.tolerance = tol(1e-6);
    if (!o.built.cert) throw ConfigError("property 'phi_max_monotone' needs a ball");
    double worst = 0.0;
    for (std::size_t i = 1; i < rep.size(); ++i)
      worst = std::max(worst, rep.max_phi[i] / rep.max_phi[i - 1] - 1.0);
    r.value = worst;
    r.pass = phi_max_monotone(rep.max_phi, r.tolerance) && !o.record.aborted;
    const double dp = delta_p(grid.dim(), p);
    r.detail = "delta " + format_double(o.built.cert->delta) + " vs delta_p " + format_double(dp);
    if (!(o.built.cert->delta > dp) || !grid.is_flat()) {
      r.pass = false;
      r.detail += " (hypotheses not met)";
    }
  } else if (name == "stationarity") {
    r.tolerance = tol(o.spec.flow.stat_tol);
    r.value = rep.stationarity_residual.back();
    r.pass = r.value < r.tolerance && !o.record.aborted;
  } else if (name == "limit_energy") {
    const double e0 = p_energy(o.built.u0, grid, p);
    const double e1 = p_energy(o.record.final_state.u, grid, p);
    r.tolerance = tol(1e-12);
    r.value = e1 - e0;
    r.pass = r.value <= r.tolerance * std::abs(e0) && !o.record.aborted;
    r.detail = "E_p(u0) " + format_double(e0) + ", E_p(final) " + format_double(e1);
  } else if (name == "drift") {
    r.tolerance = tol(1e-12);
    r.value = manifold_drift(o.record.final_state.u, o.built.target);
    r.pass = r.value <= r.tolerance;
  } else if (name == "energy_inequality") {
    // Chained over the schedule: each stage satisfies
    // E_eps(u(t1)) + int |u_t|^2 <= E_eps(u(t0)), and E_eps decreases with eps.
    r.tolerance = tol(1e-8);
    const auto& st = o.record.stages;
    double dissipated = 0.0;
    double worst_stage = -std::numeric_limits<double>::infinity();
    for (const auto& s : st) {
      dissipated += s.dissipated_trapezoid;
      worst_stage = std::max(worst_stage, s.energy_stop + s.dissipated_trapezoid - s.energy_start);
    }
    const double chained =
        st.empty() ? 0.0 : dissipated + st.back().energy_stop - st.front().energy_start;
    r.value = std::max(chained, worst_stage);
    r.pass = r.value <= r.tolerance && !o.record.aborted;
    r.detail = "chained " + format_double(chained) + ", worst stage " + format_double(worst_stage);
  } else if (name == "energy_decay") {
    r.tolerance = tol(1e-8);
    const double e0 = p_energy(o.built.u0, grid, p);
    r.value = p_energy(o.record.final_state.u, grid, p) / e0;
    r.pass = r.value < r.tolerance && !o.record.aborted;
  } else if (name == "final_constant") {
    r.tolerance = tol(1e-4);
    const auto& u = o.record.final_state.u;
    double spread = 0.0;
    for (std::size_t x = 0; x < u.nodes(); ++x) {
      double d = 0.0;
      for (std::size_t k = 0; k < u.dim(); ++k) d += (u[x][k] - u[0][k]) * (u[x][k] - u[0][k]);
      spread = std::max(spread, std::sqrt(d));
    }
    r.value = spread;
    r.pass = spread <= r.tolerance && !o.record.aborted;
  } else if (name == "wrap_limit") {
    r.tolerance = tol(1e-3);
    const int k = o.spec.initial.kind == "angles" ? o.spec.initial.alpha.winding[0] : o.spec.initial.k;
    const AmbientField wrap = o.built.target.name() == "clifford"
                                  ? clifford_wrap(grid, k)
                                  : sphere_wrap(grid, o.built.target.ambient_dim() - 1, k);
    r.value = sup_distance(o.record.final_state.u, wrap);
    r.pass = r.value <= r.tolerance && !o.record.aborted;
  } else if (name == "elliptic_phi") {
    // max |d phi| on the active set, in units of h.
    r.tolerance = tol(1.0);
    if (!o.built.cert) throw ConfigError("property 'elliptic_phi' needs a ball");
    const double check_tol = std::max(10.0 * o.spec.flow.stat_tol, 1e-12);
    try {
      const auto e = elliptic_phi_check(o.record.final_state, *o.built.cert, grid, o.built.target,
                                        p, check_tol);
      r.value = e.max_grad_phi / grid.spacing(0);
      r.pass = r.value <= r.tolerance;
      r.detail = e.vacuous ? "vacuous: no active nodes"
                           : std::to_string(e.active_nodes) + " active nodes";
    } catch (const std::invalid_argument& e) {
      r.pass = false;
      r.value = std::nan("");
      r.detail = e.what();
    }
  } else {
    throw ConfigError("unknown property '" + name + "'");
  }
  return r;
}

// ---- scenario-level properties -----------------------------------------------

namespace detail {

/// max node distance between two runs restricted to the ball B(center, radius),
/// matching nodes by their multi-index (grids share the spacing and origin).
inline double restricted_distance(const RunOutcome& a, const RunOutcome& b,
                                  std::span<const double> center, double radius) {
  const auto& ga = a.built.grid;
  const auto& gb = b.built.grid;
  double d = 0.0;
  for (std::size_t x = 0; x < ga.nodes(); ++x) {
    if (ga.periodic_distance(x, center) >= radius) continue;
    const auto idx = ga.multi_index(x);
    for (int i = 0; i < gb.dim(); ++i)
      if (idx[static_cast<std::size_t>(i)] >= gb.size(i)) throw ConfigError("restriction: grid mismatch");
    const std::size_t y = gb.linear_index(idx);
    const auto ca = ga.coordinates(x);
    const auto cb = gb.coordinates(y);
    for (int i = 0; i < ga.dim(); ++i)
      if (std::abs(ca[static_cast<std::size_t>(i)] - cb[static_cast<std::size_t>(i)]) > 1e-9)
        throw ConfigError("restriction: grids do not share node positions");
    const auto ua = a.record.final_state.u[x];
    const auto ub = b.record.final_state.u[y];
    double s = 0.0;
    for (std::size_t k = 0; k < ua.size(); ++k) s += (ua[k] - ub[k]) * (ua[k] - ub[k]);
    d = std::max(d, std::sqrt(s));
  }
  return d;
}

}  // namespace detail

inline std::vector<PropertyResult> evaluate_scenario_property(const ExpectedProperty& e,
                                                              const ScenarioResult& res) {
  auto R = [&](std::size_t i) -> const RunOutcome& { return res.run(e.runs.at(i)); };
  std::vector<PropertyResult> out;
  PropertyResult r;
  r.name = e.name;
  r.scope = "scenario";
  r.tolerance = e.tolerance;
  if (e.name == "dissipation_first_order") {
    const double a = dissipation_residual(R(0).record.stages);
    const double b = dissipation_residual(R(1).record.stages);
    r.value = a / b;
    r.pass = r.value >= e.params.at(0) && r.value <= e.params.at(1);
    r.detail = "residual(dt) " + format_double(a) + ", residual(dt/2) " + format_double(b);
  } else if (e.name == "local_estimate_refinement") {
    double worst = 1.0;
    bool early = false, late = false;
    std::string detail;
    for (double t0 : e.params) {
      const auto ca = local_gradient_estimate(R(0).record.probes.at(0), t0);
      const auto cb = local_gradient_estimate(R(1).record.probes.at(0), t0);
      (ca.late_branch ? late : early) = true;
      const double ratio = std::max(ca.c_emp, cb.c_emp) / std::min(ca.c_emp, cb.c_emp);
      worst = std::max(worst, ratio);
      detail += "t0=" + format_double(t0) + ": C " + format_double(ca.c_emp) + " vs " +
                format_double(cb.c_emp) + "; ";
    }
    r.value = worst;
    r.pass = worst <= e.tolerance && early && late;
    r.detail = detail + (early && late ? "both branches" : "missing a branch");
  } else if (e.name == "restriction_agreement" || e.name == "restriction_decreasing") {
    const std::span<const double> c(e.params.data(), 2);
    const double radius = e.params.at(2);
    std::vector<double> d;
    for (std::size_t i = 0; i + 1 < e.runs.size(); ++i)
      d.push_back(detail::restricted_distance(R(i), R(i + 1), c, radius));
    std::string detail;
    for (double v : d) detail += format_double(v) + " ";
    r.detail = "successive distances " + detail;
    if (e.name == "restriction_agreement") {
      r.value = *std::max_element(d.begin(), d.end());
      r.pass = r.value <= e.tolerance;
    } else {
      bool dec = true;
      for (std::size_t i = 1; i < d.size(); ++i) dec = dec && d[i] < d[i - 1];
      r.value = dec ? 1.0 : 0.0;
      r.pass = dec;
    }
  } else if (e.name == "dt_order") {
    // Runs: scheme A and scheme B at dt, then both at dt/2. The order is
    // log2 of the ratio of the scheme-to-scheme distances.
    const double d1 = sup_distance(R(0).record.final_state.u, R(1).record.final_state.u);
    const double d2 = sup_distance(R(2).record.final_state.u, R(3).record.final_state.u);
    r.value = std::log2(d1 / d2);
    r.pass = r.value >= e.tolerance;
    r.detail = "scheme distance at dt " + format_double(d1) + ", at dt/2 " + format_double(d2);
  } else if (e.name == "scheme_distance") {
    const double d = sup_distance(R(0).record.final_state.u, R(1).record.final_state.u);
    const double h = R(0).built.grid.spacing(0);
    const double bound = e.tolerance * (R(0).spec.flow.fixed_dt + h * h);
    r.value = d;
    r.pass = d <= bound;
    r.detail = "bound C(dt + h^2) = " + format_double(bound);
  } else if (e.name == "determinism") {
    const std::string a = series_csv(R(0).record.report);
    const std::string b = series_csv(R(1).record.report);
    const double d = sup_distance(R(0).record.final_state.u, R(1).record.final_state.u);
    r.value = d;
    r.pass = a == b && d == 0.0;
    r.detail = a == b ? "CSV bytes identical" : "CSV differs";
  } else if (e.name == "schedule_agreement") {
    r.value = sup_distance(R(0).record.final_state.u, R(1).record.final_state.u);
    r.pass = r.value <= e.tolerance;
  } else if (e.name == "final_energy_agreement") {
    const double a = R(0).record.stages.back().energy_stop;
    const double b = R(1).record.stages.back().energy_stop;
    r.value = std::abs(a - b) / std::max(std::abs(a), std::abs(b));
    r.pass = r.value <= e.tolerance;
    r.detail = format_double(a) + " vs " + format_double(b);
  } else {
    // A per-run property applied to the listed runs.
    for (const auto& label : e.runs) out.push_back(evaluate_run_property(e.name, res.run(label), e.tolerance));
    return out;
  }
  out.push_back(r);
  return out;
}

// ---- execution ---------------------------------------------------------------

inline RunOutcome execute_run(const RunSpec& spec) {
  Materialised built = materialise(spec);
  Monitors mon;
  mon.cert = built.cert;
  mon.probes = spec.probes;
  RunRecord rec = run(built.grid, built.target, built.u0, spec.flow, mon);
  return RunOutcome{spec, std::move(built), std::move(rec)};
}

inline ScenarioResult execute_scenario(const ScenarioSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioResult res;
  res.id = spec.id;
  for (const auto& rs : spec.runs) res.runs.push_back(execute_run(rs));
  for (const auto& o : res.runs) {
    const auto names = o.spec.expect.empty() ? default_run_properties(o.spec) : o.spec.expect;
    for (const auto& n : names) res.properties.push_back(evaluate_run_property(n, o));
  }
  for (const auto& e : spec.expected)
    for (auto& r : evaluate_scenario_property(e, res)) res.properties.push_back(std::move(r));
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// A scenario wrapping a single user-supplied run.
inline ScenarioSpec single_run_scenario(RunSpec spec) {
  ScenarioSpec s;
  s.id = "run";
  s.description = "single configured run";
  s.seed = spec.seed;
  s.runs.push_back(std::move(spec));
  return s;
}

// ---- summaries -----------------------------------------------------------------

inline json run_summary(const RunOutcome& o) {
  const auto& rec = o.record;
  const auto& rep = rec.report;
  json j;
  j["config"] = to_json(o.spec);
  json stages = json::array();
  for (const auto& st : rec.stages)
    stages.push_back({{"eps", st.eps},
                      {"steps", st.steps},
                      {"t_start", st.t_start},
                      {"t_stop", st.t_stop},
                      {"energy_start", st.energy_start},
                      {"energy_stop", st.energy_stop},
                      {"dissipated", st.dissipated},
                      {"dissipated_trapezoid", st.dissipated_trapezoid},
                      {"final_residual", st.final_residual},
                      {"converged", st.converged}});
  j["stages"] = stages;
  json fin;
  fin["t"] = rec.final_state.t;
  fin["eps"] = rec.final_state.eps;
  fin["energy"] = rep.energy.back();
  fin["p_energy"] = p_energy(rec.final_state.u, o.built.grid, o.spec.flow.p);
  fin["initial_p_energy"] = p_energy(o.built.u0, o.built.grid, o.spec.flow.p);
  fin["stationarity_residual"] = rep.stationarity_residual.back();
  fin["dissipation_residual"] = dissipation_residual(rec.stages);
  fin["drift"] = rep.drift.back();
  if (o.built.cert) {
    fin["max_fstar"] = rep.max_fstar.back();
    fin["max_phi"] = rep.max_phi.back();
  }
  fin["steps"] = rep.step.back();
  j["final"] = fin;
  if (o.built.cert) {
    j["certificate"] = {{"name", o.built.cert->name},
                        {"delta", o.built.cert->delta},
                        {"delta_p", delta_p(o.built.grid.dim(), o.spec.flow.p)},
                        {"a", o.built.cert->a},
                        {"regular_min_eigenvalue", o.built.regular_report.min_eigenvalue},
                        {"sublevel_min_eigenvalue", o.built.sublevel_report.min_eigenvalue}};
  }
  j["aborted"] = rec.aborted;
  j["abort_reason"] = rec.abort_reason;
  j["converged"] = rec.converged;
  j["wall_seconds"] = rec.wall_seconds;
  j["version"] = rec.version;
  return j;
}

inline json scenario_summary(const ScenarioSpec& spec, const ScenarioResult& res) {
  json j;
  j["scenario"] = spec.id;
  j["description"] = spec.description;
  j["seed"] = spec.seed;
  j["version"] = kVersionTag;
  j["all_pass"] = res.all_pass();
  j["wall_seconds"] = res.wall_seconds;
  json props = json::array();
  for (const auto& p : res.properties) {
    json pj = {{"name", p.name},
               {"scope", p.scope},
               {"status", p.pass ? "PASS" : "FAIL"},
               {"meaning", property_meaning(p.name)},
               {"tolerance", p.tolerance},
               {"detail", p.detail}};
    pj["value"] = std::isfinite(p.value) ? json(p.value) : json(nullptr);
    props.push_back(pj);
  }
  j["properties"] = props;
  json runs = json::object();
  for (const auto& o : res.runs) runs[o.spec.label] = run_summary(o);
  j["runs"] = runs;
  return j;
}

/// Writes <dir>/summary.json and, per run, <dir>/<label>/series.csv and
/// <dir>/<label>/final_state.csv.
inline void write_scenario(const ScenarioSpec& spec, const ScenarioResult& res,
                           const std::filesystem::path& dir) {
  for (const auto& o : res.runs) {
    write_text(dir / o.spec.label / "series.csv", series_csv(o.record.report));
    write_text(dir / o.spec.label / "final_state.csv",
               final_state_csv(o.built.grid, o.record.final_state.u));
  }
  write_text(dir / "summary.json", scenario_summary(spec, res).dump(2) + "\n");
}

// ---- catalogue -------------------------------------------------------------------

struct ScenarioOptions {
  std::optional<double> p;
  std::optional<int> m;
  std::optional<double> r;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline double cfl_step_at(const RunSpec& spec) {
  const Materialised b = materialise(spec);
  const MapState s{b.u0, 0.0, spec.flow.eps_schedule.front()};
  return cfl_dt(s, b.grid, spec.flow);
}

/// CFL step at the data, shrunk so that a whole number of steps spans t_end.
inline double fixed_step_for(const RunSpec& spec) {
  const double dt = cfl_step_at(spec);
  return spec.flow.t_end / std::ceil(spec.flow.t_end / dt);
}

inline AngleSpec sine(double amp, std::array<int, 3> k, double phase = 0.0) {
  AngleSpec a;
  a.modes.push_back({amp, k, phase});
  return a;
}

}  // namespace detail

/// 2-torus into S^2 with a cap certificate. Without an explicit radius the
/// cap is r = 0.25 for p = 2, r = 0.02 for p = 3 and 0.9 r_max otherwise.
inline ScenarioSpec scenario_S1_compact_cap(const ScenarioOptions& opt = {}) {
  const double p = opt.p.value_or(2.0);
  const int m = opt.m.value_or(2);
  if (!(p >= 2.0)) throw ConfigError("S1: p must be >= 2");
  const double r_max = max_admissible_cap_radius(p, m);
  const double r = opt.r.value_or(p == 2.0 ? 0.25 : p == 3.0 ? 0.02 : 0.9 * r_max);
  if (!(r > 0.0 && r < r_max))
    throw ConfigError("S1: cap radius " + format_double(r) + " is not below r_max = " +
                      format_double(r_max) + " for p = " + format_double(p));
  ScenarioSpec s;
  s.id = "S1";
  s.description = "compact cap target: monotone energy, confinement, phi maximum principle, convergence";
  s.seed = opt.seed.value_or(7);

  RunSpec base;
  base.domain = {"flat_torus", m, m == 3 ? std::size_t{16} : std::size_t{32}, 2.0 * std::numbers::pi};
  base.target = {"sphere", 2};
  base.ball = BallSpec{"cap", r, std::nullopt, std::nullopt, std::nullopt};
  base.initial.kind = "cap_random";
  base.initial.fraction = 0.9;
  base.flow.p = p;
  base.flow.eps_schedule = {1e-2, 1e-3};
  base.flow.t_end = p == 2.0 ? 50.0 : 500.0;
  base.flow.stat_tol = 1e-6;
  base.seed = s.seed;

  RunSpec main = base;
  main.label = "main";
  main.expect = {"no_abort",     "energy_monotone", "confinement", "phi_max_monotone",
                 "stationarity", "limit_energy",    "drift"};
  s.runs.push_back(main);

  // Data touching the boundary of the sublevel set: max f* = a - 9e-4 when
  // a allows it, otherwise a (1 - 1e-3).
  RunSpec touch = base;
  touch.label = "touching";
  touch.initial.kind = "cap_touching";
  const double a = r * r;
  touch.initial.gap = a > 2e-3 ? 9e-4 : 1e-3 * a;
  touch.expect = {"no_abort", "energy_monotone", "confinement", "phi_max_monotone"};
  s.runs.push_back(touch);

  // Fixed-step pair for the order of the energy-balance defect.
  RunSpec diss = base;
  diss.flow.eps_schedule = {1e-2};
  diss.flow.t_end = 1.0;
  diss.flow.stat_tol = 0.0;
  diss.flow.fixed_dt = detail::fixed_step_for(diss);
  diss.label = "diss_dt";
  diss.expect = {"no_abort", "energy_monotone"};
  s.runs.push_back(diss);
  diss.label = "diss_dt2";
  diss.flow.fixed_dt *= 0.5;
  s.runs.push_back(diss);
  s.expected.push_back({"dissipation_first_order", 0.0, {"diss_dt", "diss_dt2"}, {1.7, 2.3}});

  // Same continuum data at two resolutions, probed on B(centre, 1).
  RunSpec probe = base;
  probe.flow.eps_schedule = {1e-2};
  probe.flow.t_end = 2.5;
  probe.flow.stat_tol = 0.0;
  BallProbe bp;
  bp.center = {std::numbers::pi, m > 1 ? std::numbers::pi : 0.0, m > 2 ? std::numbers::pi : 0.0};
  bp.radius = 1.0;
  probe.probes = {bp};
  probe.expect = {"no_abort", "energy_monotone"};
  probe.label = "probe_coarse";
  s.runs.push_back(probe);
  probe.label = "probe_fine";
  probe.domain.n *= 2;
  s.runs.push_back(probe);
  // t0 = 0.5 <= R exercises the early cylinder, t0 = 2 > R the late one.
  s.expected.push_back({"local_estimate_refinement", 2.0, {"probe_coarse", "probe_fine"}, {0.5, 2.0}});
  return s;
}

/// 2-torus into the flat Clifford torus with the trivial certificate.
inline ScenarioSpec scenario_S2_nonpositive_target(const ScenarioOptions& opt = {}) {
  const double p = opt.p.value_or(2.0);
  ScenarioSpec s;
  s.id = "S2";
  s.description = "flat target: null-homotopic data flows to a constant, winding data to the wrap";
  s.seed = opt.seed.value_or(11);
  RunSpec base;
  base.domain = {"flat_torus", 2, 32, 2.0 * std::numbers::pi};
  base.target = {"clifford", 2};
  base.ball = BallSpec{"trivial", 0.0, std::nullopt, 2.0, std::nullopt};
  base.initial.kind = "angles";
  base.flow.p = p;
  base.flow.eps_schedule = {1e-2};
  base.flow.t_end = 400.0;
  base.flow.stat_tol = 1e-9;
  base.seed = s.seed;

  RunSpec null_run = base;
  null_run.label = "null_homotopic";
  null_run.initial.alpha = detail::sine(0.5, {1, 0, 0});
  null_run.expect = {"no_abort",     "energy_monotone", "confinement",    "stationarity",
                     "energy_decay", "final_constant",  "elliptic_phi"};
  s.runs.push_back(null_run);

  RunSpec wind = base;
  wind.label = "winding";
  wind.initial.alpha = detail::sine(0.3, {1, 0, 0});
  wind.initial.alpha.winding = {1, 0, 0};
  wind.expect = {"no_abort", "energy_monotone", "stationarity", "wrap_limit", "elliptic_phi"};
  s.runs.push_back(wind);

  RunSpec cst = base;
  cst.label = "constant";
  cst.initial.kind = "constant";
  const double c = 1.0 / std::numbers::sqrt2;
  cst.initial.value = {c, 0.0, c, 0.0};
  cst.expect = {"no_abort", "stationarity", "final_constant"};
  s.runs.push_back(cst);
  return s;
}

/// Expanding flat tori of periods 2 pi, 4 pi, 8 pi (equal spacing) carrying
/// the same compactly supported bump into the Clifford torus.
inline ScenarioSpec scenario_S3_liouville_proxy(const ScenarioOptions& opt = {}) {
  const double p = opt.p.value_or(2.0);
  ScenarioSpec s;
  s.id = "S3";
  s.description = "exhaustion by expanding tori: localized data decays to constants consistently";
  s.seed = opt.seed.value_or(13);
  const double pi = std::numbers::pi;
  std::vector<std::string> labels;
  for (int k = 0; k < 3; ++k) {
    RunSpec r;
    r.label = "period_" + std::to_string(2 << k) + "pi";
    r.domain = {"flat_torus", 2, std::size_t{16} << k, 2.0 * pi * (1 << k)};
    r.target = {"clifford", 2};
    r.initial.kind = "angles";
    r.initial.alpha.bump_amp = 0.02;
    r.initial.alpha.bump_center = {pi, pi, 0.0};
    r.initial.alpha.bump_radius = 1.5;
    r.flow.p = p;
    r.flow.eps_schedule = {1e-2};
    r.flow.t_end = 5000.0;
    r.flow.stat_tol = 1e-7;
    r.flow.record_every = 10;
    r.seed = s.seed;
    r.expect = {"no_abort", "energy_monotone", "stationarity", "energy_decay"};
    labels.push_back(r.label);
    s.runs.push_back(r);
  }
  s.expected.push_back({"restriction_agreement", 1e-3, labels, {pi, pi, 1.5}});
  s.expected.push_back({"restriction_decreasing", 0.0, labels, {pi, pi, 1.5}});
  return s;
}

/// Same data, two time schemes and three step sizes over t in [0, 1].
inline ScenarioSpec scenario_S4_uniqueness(const ScenarioOptions& opt = {}) {
  const double p = opt.p.value_or(2.0);
  ScenarioSpec s;
  s.id = "S4";
  s.description = "stability: dt refinement and scheme comparison from identical data";
  s.seed = opt.seed.value_or(7);
  const double r = p == 2.0 ? 0.25 : 0.9 * max_admissible_cap_radius(p, 2);
  RunSpec base;
  base.domain = {"flat_torus", 2, 32, 2.0 * std::numbers::pi};
  base.target = {"sphere", 2};
  base.ball = BallSpec{"cap", r, std::nullopt, std::nullopt, std::nullopt};
  base.initial.kind = "cap_random";
  base.flow.p = p;
  base.flow.eps_schedule = {1e-2};
  base.flow.t_end = 1.0;
  base.flow.stat_tol = 0.0;
  base.seed = s.seed;
  base.flow.fixed_dt = detail::fixed_step_for(base);
  base.expect = {"no_abort", "energy_monotone", "confinement"};
  const double dt = base.flow.fixed_dt;
  auto add = [&](const std::string& label, double step, Scheme scheme) {
    RunSpec r = base;
    r.label = label;
    r.flow.fixed_dt = step;
    r.flow.scheme = scheme;
    s.runs.push_back(r);
  };
  add("dt", dt, Scheme::explicit_with_second_form);
  add("project_dt", dt, Scheme::project_after_step);
  add("dt_half", dt / 2, Scheme::explicit_with_second_form);
  add("project_dt_half", dt / 2, Scheme::project_after_step);
  add("dt_repeat", dt, Scheme::explicit_with_second_form);
  s.expected.push_back({"dt_order", 1.0, {"dt", "project_dt", "dt_half", "project_dt_half"}, {}});
  s.expected.push_back({"scheme_distance", 1.0, {"dt", "project_dt"}, {}});
  s.expected.push_back({"scheme_distance", 1.0, {"dt_half", "project_dt_half"}, {}});
  s.expected.push_back({"determinism", 0.0, {"dt", "dt_repeat"}, {}});
  return s;
}

/// Two eps schedules ending at the same eps, p = 3, into the Clifford torus.
inline ScenarioSpec scenario_S5_epsilon_limit(const ScenarioOptions& opt = {}) {
  const double p = opt.p.value_or(3.0);
  ScenarioSpec s;
  s.id = "S5";
  s.description = "eps-continuation: schedule-independent limit and energy inequality";
  s.seed = opt.seed.value_or(17);
  RunSpec base;
  base.domain = {"flat_torus", 2, 16, 2.0 * std::numbers::pi};
  base.target = {"clifford", 2};
  base.ball = BallSpec{"trivial", 0.0, std::nullopt, 2.0, std::nullopt};
  base.initial.kind = "angles";
  base.initial.alpha = detail::sine(0.5, {1, 0, 0});
  base.initial.alpha.modes.push_back({0.25, {0, 1, 0}, std::numbers::pi / 2});
  base.initial.beta = detail::sine(0.4, {1, 1, 0});
  base.flow.p = p;
  base.flow.t_end = 300.0;
  base.flow.stat_tol = 1e-9;
  base.seed = s.seed;
  base.expect = {"no_abort", "energy_monotone", "confinement", "energy_inequality"};
  RunSpec a = base;
  a.label = "schedule_long";
  a.flow.eps_schedule = {1e-1, 1e-2, 1e-3, 1e-4};
  RunSpec b = base;
  b.label = "schedule_short";
  b.flow.eps_schedule = {1e-2, 1e-3, 1e-4};
  s.runs = {a, b};
  s.expected.push_back({"schedule_agreement", 1e-4, {a.label, b.label}, {}});
  s.expected.push_back({"final_energy_agreement", 1e-6, {a.label, b.label}, {}});
  return s;
}

inline std::vector<std::string> scenario_ids() { return {"S1", "S2", "S3", "S4", "S5"}; }

inline ScenarioSpec make_scenario(const std::string& id, const ScenarioOptions& opt = {}) {
  if (id == "S1") return scenario_S1_compact_cap(opt);
  if (id == "S2") return scenario_S2_nonpositive_target(opt);
  if (id == "S3") return scenario_S3_liouville_proxy(opt);
  if (id == "S4") return scenario_S4_uniqueness(opt);
  if (id == "S5") return scenario_S5_epsilon_limit(opt);
  throw ConfigError("unknown scenario '" + id + "' (expected S1-S5)");
}

}  // namespace pflow::harness
