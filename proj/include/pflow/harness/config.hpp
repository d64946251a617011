#pragma once

// Run descriptions and their JSON form. A RunSpec names everything needed to
// rebuild a run bit-for-bit: grid, target, certificate, initial map, flow
// parameters and seed.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pflow/certificate.hpp"
#include "pflow/diagnostics.hpp"
#include "pflow/flow.hpp"
#include "pflow/geometry.hpp"
#include "pflow/initial.hpp"
#include "pflow/run.hpp"
#include "pflow/target.hpp"

namespace pflow::harness {

using json = nlohmann::json;

/// Bad input from the user: malformed config, unknown keys or values, or a
/// certificate that fails pre-flight. Maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DomainSpec {
  std::string type = "flat_torus";
  int m = 2;
  std::size_t n = 32;
  double period = 2.0 * std::numbers::pi;
};

struct TargetSpec {
  std::string type = "sphere";  ///< sphere | clifford | euclidean
  std::size_t n = 2;            ///< sphere dimension, or R^n for euclidean
};

struct BallSpec {
  std::string kind = "cap";  ///< cap | trivial
  double r = 0.25;
  std::optional<double> r1;     ///< defaults to the optimal r1 for r
  std::optional<double> a;      ///< defaults to r^2 (cap) or 2 (trivial)
  std::optional<double> delta;  ///< defaults to just below the best delta (cap), delta_p + 1 (trivial)
};

/// Angle field offset + 2 pi (winding . x) / period + sum amp sin(2 pi k.x / period + phase)
/// + bump_amp * bump(x; bump_center, bump_radius).
struct AngleSpec {
  double offset = 0.0;
  std::array<int, 3> winding{};
  struct Mode {
    double amp = 0.0;
    std::array<int, 3> k{};
    double phase = 0.0;
  };
  std::vector<Mode> modes;
  double bump_amp = 0.0;
  std::array<double, 3> bump_center{};
  double bump_radius = 1.0;

  double operator()(const DomainGrid& grid, std::span<const double> x) const {
    const double P = grid.period(0);
    double v = offset;
    for (int i = 0; i < grid.dim(); ++i)
      v += 2.0 * std::numbers::pi * winding[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)] / P;
    for (const auto& md : modes) {
      double ph = md.phase;
      for (int i = 0; i < grid.dim(); ++i)
        ph += 2.0 * std::numbers::pi * md.k[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)] / P;
      v += md.amp * std::sin(ph);
    }
    if (bump_amp != 0.0)
      v += bump_amp * smooth_bump(grid, x,
                                  std::span<const double>(bump_center.data(), static_cast<std::size_t>(grid.dim())),
                                  bump_radius);
    return v;
  }
};

struct InitialSpec {
  /// cap_random | cap_touching | angles | wrap | constant
  std::string kind = "cap_random";
  double fraction = 0.9;  ///< cap_random: sup geodesic radius as a fraction of r
  double gap = 1e-3;      ///< cap_touching: max f*(u0) = a - gap
  int max_mode = 2;
  int k = 1;  ///< wrap wavenumber
  AngleSpec alpha, beta;
  std::vector<double> value;  ///< constant
};

struct RunSpec {
  std::string label = "run";
  DomainSpec domain;
  TargetSpec target;
  std::optional<BallSpec> ball;
  InitialSpec initial;
  FlowConfig flow;
  std::vector<BallProbe> probes;
  std::uint64_t seed = 1;
  std::string output_dir;
  /// Property names to evaluate; empty selects the defaults for the run.
  std::vector<std::string> expect;
};

// ---- JSON ------------------------------------------------------------------

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <std::size_t N, class T>
std::array<T, N> array_or(const json& j, const char* key, std::array<T, N> fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = get_or<std::vector<T>>(j, key, {});
  if (v.size() > N) throw ConfigError(std::string("config key '") + key + "' has too many entries");
  std::array<T, N> out{};
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

inline AngleSpec angle_from_json(const json& j, const std::string& where) {
  reject_unknown(j, {"offset", "winding", "modes", "bump"}, where);
  AngleSpec a;
  a.offset = get_or(j, "offset", 0.0);
  a.winding = array_or<3, int>(j, "winding", {});
  if (j.contains("modes")) {
    for (const auto& mj : j.at("modes")) {
      reject_unknown(mj, {"amp", "k", "phase"}, where + ".modes[]");
      AngleSpec::Mode md;
      md.amp = get_or(mj, "amp", 0.0);
      md.k = array_or<3, int>(mj, "k", {});
      md.phase = get_or(mj, "phase", 0.0);
      a.modes.push_back(md);
    }
  }
  if (j.contains("bump")) {
    const json& b = j.at("bump");
    reject_unknown(b, {"amp", "center", "radius"}, where + ".bump");
    a.bump_amp = get_or(b, "amp", 0.0);
    a.bump_center = array_or<3, double>(b, "center", {});
    a.bump_radius = get_or(b, "radius", 1.0);
    if (!(a.bump_radius > 0.0)) throw ConfigError(where + ".bump.radius must be positive");
  }
  return a;
}

inline json angle_to_json(const AngleSpec& a) {
  json j;
  j["offset"] = a.offset;
  j["winding"] = a.winding;
  j["modes"] = json::array();
  for (const auto& md : a.modes) j["modes"].push_back({{"amp", md.amp}, {"k", md.k}, {"phase", md.phase}});
  if (a.bump_amp != 0.0)
    j["bump"] = {{"amp", a.bump_amp}, {"center", a.bump_center}, {"radius", a.bump_radius}};
  return j;
}

}  // namespace detail

inline RunSpec run_spec_from_json(const json& j) {
  using detail::get_or;
  detail::reject_unknown(j,
                         {"label", "domain", "target", "ball", "initial", "flow", "output", "seed",
                          "probes", "expect"},
                         "config");
  RunSpec s;
  s.label = get_or<std::string>(j, "label", s.label);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    detail::reject_unknown(d, {"type", "m", "n", "period"}, "domain");
    s.domain.type = get_or<std::string>(d, "type", s.domain.type);
    s.domain.m = get_or(d, "m", s.domain.m);
    s.domain.n = get_or(d, "n", s.domain.n);
    s.domain.period = get_or(d, "period", s.domain.period);
  }
  if (j.contains("target")) {
    const json& t = j.at("target");
    detail::reject_unknown(t, {"type", "params"}, "target");
    s.target.type = get_or<std::string>(t, "type", s.target.type);
    if (t.contains("params")) {
      const json& p = t.at("params");
      detail::reject_unknown(p, {"n"}, "target.params");
      s.target.n = get_or(p, "n", s.target.n);
    }
  }
  if (j.contains("ball") && !j.at("ball").is_null()) {
    const json& b = j.at("ball");
    detail::reject_unknown(b, {"kind", "r", "r1", "a", "delta"}, "ball");
    BallSpec ball;
    ball.kind = get_or<std::string>(b, "kind", ball.kind);
    ball.r = get_or(b, "r", ball.r);
    if (b.contains("r1")) ball.r1 = get_or(b, "r1", 0.0);
    if (b.contains("a")) ball.a = get_or(b, "a", 0.0);
    if (b.contains("delta")) ball.delta = get_or(b, "delta", 0.0);
    s.ball = ball;
  }
  if (j.contains("initial")) {
    const json& i = j.at("initial");
    detail::reject_unknown(i, {"kind", "fraction", "gap", "max_mode", "k", "alpha", "beta", "value"},
                           "initial");
    s.initial.kind = get_or<std::string>(i, "kind", s.initial.kind);
    s.initial.fraction = get_or(i, "fraction", s.initial.fraction);
    s.initial.gap = get_or(i, "gap", s.initial.gap);
    s.initial.max_mode = get_or(i, "max_mode", s.initial.max_mode);
    s.initial.k = get_or(i, "k", s.initial.k);
    if (i.contains("alpha")) s.initial.alpha = detail::angle_from_json(i.at("alpha"), "initial.alpha");
    if (i.contains("beta")) s.initial.beta = detail::angle_from_json(i.at("beta"), "initial.beta");
    s.initial.value = get_or<std::vector<double>>(i, "value", {});
  }
  if (j.contains("flow")) {
    const json& f = j.at("flow");
    detail::reject_unknown(f,
                           {"p", "eps_list", "dt_safety", "scheme", "reproject_every", "t_end",
                            "stat_tol", "fixed_dt", "max_steps_per_stage", "record_every",
                            "drift_abort"},
                           "flow");
    FlowConfig& c = s.flow;
    c.p = get_or(f, "p", c.p);
    c.eps_schedule = get_or(f, "eps_list", c.eps_schedule);
    c.dt_safety = get_or(f, "dt_safety", c.dt_safety);
    if (f.contains("scheme")) {
      try {
        c.scheme = scheme_from_string(get_or<std::string>(f, "scheme", ""));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    c.reproject_every = get_or(f, "reproject_every", c.reproject_every);
    c.t_end = get_or(f, "t_end", c.t_end);
    c.stat_tol = get_or(f, "stat_tol", c.stat_tol);
    c.fixed_dt = get_or(f, "fixed_dt", c.fixed_dt);
    c.max_steps_per_stage = get_or(f, "max_steps_per_stage", c.max_steps_per_stage);
    c.record_every = get_or(f, "record_every", c.record_every);
    c.drift_abort = get_or(f, "drift_abort", c.drift_abort);
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    detail::reject_unknown(o, {"dir"}, "output");
    s.output_dir = get_or<std::string>(o, "dir", "");
  }
  if (j.contains("probes")) {
    for (const auto& pj : j.at("probes")) {
      detail::reject_unknown(pj, {"center", "radius"}, "probes[]");
      BallProbe pr;
      pr.center = detail::array_or<3, double>(pj, "center", {});
      pr.radius = get_or(pj, "radius", 1.0);
      s.probes.push_back(pr);
    }
  }
  s.expect = get_or<std::vector<std::string>>(j, "expect", {});
  return s;
}

inline json to_json(const RunSpec& s) {
  json j;
  j["label"] = s.label;
  j["seed"] = s.seed;
  j["domain"] = {{"type", s.domain.type}, {"m", s.domain.m}, {"n", s.domain.n}, {"period", s.domain.period}};
  j["target"] = {{"type", s.target.type}, {"params", {{"n", s.target.n}}}};
  if (s.ball) {
    json b = {{"kind", s.ball->kind}, {"r", s.ball->r}};
    if (s.ball->r1) b["r1"] = *s.ball->r1;
    if (s.ball->a) b["a"] = *s.ball->a;
    if (s.ball->delta) b["delta"] = *s.ball->delta;
    j["ball"] = b;
  } else {
    j["ball"] = nullptr;
  }
  json i = {{"kind", s.initial.kind}};
  if (s.initial.kind == "cap_random") {
    i["fraction"] = s.initial.fraction;
    i["max_mode"] = s.initial.max_mode;
  } else if (s.initial.kind == "cap_touching") {
    i["gap"] = s.initial.gap;
    i["max_mode"] = s.initial.max_mode;
  } else if (s.initial.kind == "wrap") {
    i["k"] = s.initial.k;
  } else if (s.initial.kind == "angles") {
    i["alpha"] = detail::angle_to_json(s.initial.alpha);
    i["beta"] = detail::angle_to_json(s.initial.beta);
  } else if (s.initial.kind == "constant") {
    i["value"] = s.initial.value;
  }
  j["initial"] = i;
  const FlowConfig& c = s.flow;
  j["flow"] = {{"p", c.p},
               {"eps_list", c.eps_schedule},
               {"dt_safety", c.dt_safety},
               {"scheme", to_string(c.scheme)},
               {"reproject_every", c.reproject_every},
               {"t_end", c.t_end},
               {"stat_tol", c.stat_tol},
               {"fixed_dt", c.fixed_dt},
               {"max_steps_per_stage", c.max_steps_per_stage},
               {"record_every", c.record_every},
               {"drift_abort", c.drift_abort}};
  j["output"] = {{"dir", s.output_dir}};
  j["probes"] = json::array();
  for (const auto& pr : s.probes) j["probes"].push_back({{"center", pr.center}, {"radius", pr.radius}});
  j["expect"] = s.expect;
  return j;
}

inline RunSpec load_run_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return run_spec_from_json(j);
}

// ---- materialisation ---------------------------------------------------------

/// Everything a run needs, built from a RunSpec and certified.
struct Materialised {
  DomainGrid grid;
  EmbeddedTarget target;
  std::optional<RegularBallCert> cert;
  AmbientField u0;
  CertReport regular_report;
  CertReport sublevel_report;
};

inline DomainGrid build_grid(const DomainSpec& d) {
  if (d.type != "flat_torus") throw ConfigError("domain.type must be 'flat_torus'");
  try {
    return build_flat_torus(d.m, d.n, d.period);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline EmbeddedTarget build_target(const TargetSpec& t) {
  if (t.type == "sphere") {
    if (t.n < 1) throw ConfigError("target.params.n must be >= 1");
    return make_sphere(t.n);
  }
  if (t.type == "clifford") return make_clifford_torus();
  if (t.type == "euclidean") {
    if (t.n < 1) throw ConfigError("target.params.n must be >= 1");
    return make_euclidean(t.n);
  }
  throw ConfigError("target.type must be sphere, clifford or euclidean");
}

/// Sample points covering the certified set: polar grid on a cap, or a
/// uniform angle grid on the Clifford torus.
inline std::vector<std::vector<double>> certificate_samples(const EmbeddedTarget& target,
                                                            const RegularBallCert& cert) {
  if (cert.name == "cap") return cap_samples(target.ambient_dim() - 1, cert.radius);
  std::vector<std::vector<double>> out;
  if (target.name() == "clifford") {
    const double s = 1.0 / std::numbers::sqrt2;
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j) {
        const double a = 2.0 * std::numbers::pi * i / 32.0;
        const double b = 2.0 * std::numbers::pi * j / 32.0;
        out.push_back({s * std::cos(a), s * std::sin(a), s * std::cos(b), s * std::sin(b)});
      }
  } else {
    std::vector<double> y(target.ambient_dim(), 0.0);
    y.back() = 1.0;
    out.push_back(y);
  }
  return out;
}

inline RegularBallCert build_certificate(const BallSpec& b, const TargetSpec& t, int m, double p) {
  if (b.kind == "cap") {
    if (t.type != "sphere") throw ConfigError("ball.kind 'cap' needs a sphere target");
    const double r_max = max_admissible_cap_radius(p, m);
    if (!(b.r > 0.0) || b.r >= r_max)
      throw ConfigError("infeasible certificate: cap radius " + std::to_string(b.r) +
                        " is not below the admissible radius " + std::to_string(r_max));
    const CapOptimum best = best_cap_delta(b.r);
    const double r1 = b.r1.value_or(best.r1);
    if (!(r1 > b.r && r1 < std::numbers::pi / 2))
      throw ConfigError("ball.r1 must satisfy r < r1 < pi/2");
    const double delta = b.delta.value_or(b.r1 ? cap_delta(b.r, r1) * (1.0 - 1e-9)
                                               : best.delta * (1.0 - 1e-9));
    RegularBallCert cert = make_cap_certificate(t.n, b.r, r1, delta);
    if (b.a) {
      if (!(*b.a > 0.0 && *b.a <= b.r * b.r)) throw ConfigError("ball.a must lie in (0, r^2]");
      cert.a = *b.a;
    }
    return cert;
  }
  if (b.kind == "trivial") {
    if (t.type == "sphere") throw ConfigError("ball.kind 'trivial' needs a nonpositively curved target");
    const double a = b.a.value_or(2.0);
    if (!(a > 1.0)) throw ConfigError("ball.a must exceed 1 for the trivial certificate");
    return make_trivial_certificate(b.delta.value_or(delta_p(m, p) + 1.0), a);
  }
  throw ConfigError("ball.kind must be 'cap' or 'trivial'");
}

inline AmbientField build_initial(const InitialSpec& i, const DomainGrid& grid,
                                  const EmbeddedTarget& target,
                                  const std::optional<RegularBallCert>& cert, std::uint64_t seed) {
  const std::size_t L = target.ambient_dim();
  if (i.kind == "cap_random" || i.kind == "cap_touching") {
    if (target.name() != "sphere" || !cert || cert->name != "cap")
      throw ConfigError("initial.kind '" + i.kind + "' needs a sphere target with a cap ball");
    if (i.max_mode < 1) throw ConfigError("initial.max_mode must be >= 1");
    if (i.kind == "cap_random") {
      if (!(i.fraction > 0.0 && i.fraction < 1.0))
        throw ConfigError("initial.fraction must lie in (0, 1)");
      return cap_random_map(grid, L - 1, i.fraction * std::sqrt(cert->a), seed, i.max_mode);
    }
    if (!(i.gap > 0.0 && i.gap < cert->a)) throw ConfigError("initial.gap must lie in (0, a)");
    return cap_random_map_touching(grid, L - 1, std::sqrt(cert->a - i.gap), seed, i.max_mode);
  }
  if (i.kind == "angles") {
    if (target.name() != "clifford") throw ConfigError("initial.kind 'angles' needs the clifford target");
    return clifford_angle_map(
        grid, [&](std::span<const double> x) { return i.alpha(grid, x); },
        [&](std::span<const double> x) { return i.beta(grid, x); });
  }
  if (i.kind == "wrap") {
    if (target.name() == "clifford") return clifford_wrap(grid, i.k);
    if (target.name() == "sphere") return sphere_wrap(grid, L - 1, i.k);
    throw ConfigError("initial.kind 'wrap' needs a sphere or clifford target");
  }
  if (i.kind == "constant") {
    if (i.value.size() != L) throw ConfigError("initial.value must have one entry per ambient coordinate");
    AmbientField u = constant_map(grid, i.value);
    for (std::size_t x = 0; x < u.nodes(); ++x) target.project(u[x]);
    return u;
  }
  throw ConfigError("initial.kind must be cap_random, cap_touching, angles, wrap or constant");
}

/// Builds grid, target, certificate and initial map, and runs the pre-flight
/// checks: both certificate conditions pass on samples, delta > delta_p + 1e-9,
/// and u0 lies inside the certified set.
inline Materialised materialise(const RunSpec& spec) {
  try {
    spec.flow.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  DomainGrid grid = build_grid(spec.domain);
  EmbeddedTarget target = build_target(spec.target);
  std::optional<RegularBallCert> cert;
  CertReport reg, sub;
  if (spec.ball) {
    cert = build_certificate(*spec.ball, spec.target, spec.domain.m, spec.flow.p);
    const auto samples = certificate_samples(target, *cert);
    reg = verify_regular_set(*cert, target, samples);
    sub = verify_sublevel(*cert, target, samples);
    if (!reg.pass) throw ConfigError("infeasible certificate: regular-set condition fails on samples");
    if (!sub.pass) throw ConfigError("infeasible certificate: sublevel convexity fails on samples");
    const double dp = delta_p(spec.domain.m, spec.flow.p);
    if (!(cert->delta > dp + 1e-9))
      throw ConfigError("infeasible certificate: delta " + std::to_string(cert->delta) +
                        " does not exceed delta_p " + std::to_string(dp));
  }
  for (const auto& pr : spec.probes)
    if (!(pr.radius > 0.0) || 2.0 * pr.radius > spec.domain.period)
      throw ConfigError("probe radius must lie in (0, period / 2]");
  AmbientField u0 = build_initial(spec.initial, grid, target, cert, spec.seed);
  if (cert)
    for (std::size_t x = 0; x < u0.nodes(); ++x)
      if (!cert->contains(u0[x])) throw ConfigError("initial map leaves the certified set");
  return Materialised{std::move(grid), std::move(target), std::move(cert), std::move(u0), reg, sub};
}

}  // namespace pflow::harness
