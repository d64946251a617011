#pragma once

// Command-line front end: pflow cert|run|scenario|sweep.
// Exit codes: 0 all properties pass, 1 some property fails, 2 bad input.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pflow/certificate.hpp"
#include "pflow/harness/config.hpp"
#include "pflow/harness/io.hpp"
#include "pflow/harness/scenarios.hpp"

namespace pflow::harness {

inline constexpr int kExitPass = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitConfigError = 2;

struct CertRow {
  std::string quantity;
  std::string value;
  std::string status;  ///< PASS, FAIL or empty for plain values
};

struct CertTable {
  std::vector<CertRow> rows;
  bool admissible = false;
  json as_json;
};

/// Certification table for a cap of radius r on S^n (or the trivial
/// certificate of the Clifford torus) against delta_p(m, p).
inline CertTable certify(const std::string& target_kind, double p, int m, std::optional<double> r,
                         std::optional<double> r1) {
  if (!(p >= 2.0)) throw ConfigError("cert: --p must be >= 2");
  if (m < 1 || m > 3) throw ConfigError("cert: --m must be 1, 2 or 3");
  CertTable t;
  const double dp = delta_p(m, p);
  json j;
  j["target"] = target_kind;
  j["p"] = p;
  j["m"] = m;
  j["delta_p"] = dp;
  if (target_kind == "sphere") {
    if (!r) throw ConfigError("cert: --r is required for the sphere target");
    if (!(*r > 0.0 && *r < std::numbers::pi / 2)) throw ConfigError("cert: --r must lie in (0, pi/2)");
    const CapOptimum best = best_cap_delta(*r);
    const double rr1 = r1.value_or(best.r1);
    if (!(rr1 > *r && rr1 < std::numbers::pi / 2)) throw ConfigError("cert: --r1 must lie in (r, pi/2)");
    const double delta = r1 ? cap_delta(*r, rr1) : best.delta;
    const double r_max = max_admissible_cap_radius(p, m);
    const EmbeddedTarget target = make_sphere(2);
    const RegularBallCert cert = make_cap_certificate(2, *r, rr1, delta);
    const auto samples = cap_samples(2, *r);
    const CertReport reg = verify_regular_set(cert, target, samples);
    const CertReport sub = verify_sublevel(cert, target, samples);
    t.admissible = reg.pass && sub.pass && delta > dp + 1e-9;
    t.rows = {
        {"r", format_double(*r), ""},
        {"r1", format_double(rr1), ""},
        {"delta* (best over r1)", format_double(best.delta), ""},
        {"delta (certified)", format_double(delta), ""},
        {"delta_p", format_double(dp), ""},
        {"r_max", format_double(r_max), *r < r_max ? "PASS" : "FAIL"},
        {"regular set: min eigenvalue", format_double(reg.min_eigenvalue), reg.pass ? "PASS" : "FAIL"},
        {"pinching C", format_double(cert.pinching), reg.pinching_ok ? "PASS" : "FAIL"},
        {"sublevel convexity: min eigenvalue", format_double(sub.min_eigenvalue), sub.pass ? "PASS" : "FAIL"},
        {"delta > delta_p", format_double(delta - dp), delta > dp + 1e-9 ? "PASS" : "FAIL"},
    };
    j["r"] = *r;
    j["r1"] = rr1;
    j["delta_star"] = best.delta;
    j["delta"] = delta;
    j["r_max"] = r_max;
    j["regular_set"] = {{"status", reg.pass ? "PASS" : "FAIL"}, {"min_eigenvalue", reg.min_eigenvalue}};
    j["pinching"] = {{"status", reg.pinching_ok ? "PASS" : "FAIL"}, {"C", cert.pinching}};
    j["sublevel"] = {{"status", sub.pass ? "PASS" : "FAIL"}, {"min_eigenvalue", sub.min_eigenvalue}};
    j["delta_exceeds_delta_p"] = delta > dp + 1e-9 ? "PASS" : "FAIL";
  } else if (target_kind == "clifford") {
    // f = f* = 1 satisfies the regular-set condition for every delta when K2 = 0.
    const EmbeddedTarget target = make_clifford_torus();
    const RegularBallCert cert = make_trivial_certificate(dp + 1.0);
    const auto samples = certificate_samples(target, cert);
    const CertReport reg = verify_regular_set(cert, target, samples);
    const CertReport sub = verify_sublevel(cert, target, samples);
    t.admissible = reg.pass && sub.pass;
    t.rows = {
        {"delta (certified)", "unbounded", ""},
        {"delta_p", format_double(dp), ""},
        {"regular set: min eigenvalue", format_double(reg.min_eigenvalue), reg.pass ? "PASS" : "FAIL"},
        {"sublevel convexity: min eigenvalue", format_double(sub.min_eigenvalue), sub.pass ? "PASS" : "FAIL"},
        {"delta > delta_p", "yes", t.admissible ? "PASS" : "FAIL"},
    };
    j["delta"] = "unbounded";
    j["regular_set"] = {{"status", reg.pass ? "PASS" : "FAIL"}, {"min_eigenvalue", reg.min_eigenvalue}};
    j["sublevel"] = {{"status", sub.pass ? "PASS" : "FAIL"}, {"min_eigenvalue", sub.min_eigenvalue}};
  } else {
    throw ConfigError("cert: --target must be sphere or clifford");
  }
  j["verdict"] = t.admissible ? "ADMISSIBLE" : "NOT ADMISSIBLE";
  t.as_json = j;
  return t;
}

inline void print_cert_table(const CertTable& t, std::ostream& out) {
  std::size_t w = 0;
  for (const auto& r : t.rows) w = std::max(w, r.quantity.size());
  for (const auto& r : t.rows) {
    out << std::left << std::setw(static_cast<int>(w) + 2) << r.quantity << std::setw(26) << r.value
        << r.status << '\n';
  }
  out << (t.admissible ? "ADMISSIBLE" : "NOT ADMISSIBLE") << '\n';
}

inline void print_properties(const ScenarioResult& res, std::ostream& out) {
  for (const auto& p : res.properties) {
    out << (p.pass ? "PASS " : "FAIL ") << res.id << ' ' << p.scope << '/' << p.name
        << " value=" << format_double(p.value);
    if (!p.detail.empty()) out << " (" << p.detail << ')';
    out << '\n';
  }
  out << res.id << ": " << (res.all_pass() ? "all properties PASS" : "some properties FAIL")
      << " in " << std::fixed << std::setprecision(1) << res.wall_seconds << " s\n";
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pflow: regularised p-harmonic map heat flow simulator"};
  app.require_subcommand(1);

  std::optional<double> p, r, r1;
  std::optional<int> m;
  std::optional<std::uint64_t> seed;
  std::string config_path, out_dir, target_kind = "sphere", scenario_id;
  bool print_json = false;

  auto* cert = app.add_subcommand("cert", "certify a cap (or the Clifford torus) against delta_p");
  cert->add_option("--target", target_kind, "sphere or clifford");
  cert->add_option("--p", p, "exponent p >= 2");
  cert->add_option("--m", m, "domain dimension");
  cert->add_option("--r", r, "cap radius");
  cert->add_option("--r1", r1, "certificate parameter r1 (default: optimal)");
  cert->add_option("--out", out_dir, "directory for cert.json");
  cert->add_flag("--json", print_json, "print the JSON table instead of text");

  auto* runc = app.add_subcommand("run", "run a flow described by a JSON config");
  runc->add_option("--config", config_path, "config file")->required();
  runc->add_option("--out", out_dir, "output directory (overrides output.dir)");
  runc->add_option("--p", p, "override flow.p");
  runc->add_option("--seed", seed, "override seed");

  auto* scen = app.add_subcommand("scenario", "run one catalogue scenario");
  scen->add_option("id", scenario_id, "S1, S2, S3, S4 or S5")->required();
  scen->add_option("--out", out_dir, "output directory");
  scen->add_option("--p", p, "exponent p");
  scen->add_option("--m", m, "domain dimension (S1)");
  scen->add_option("--r", r, "cap radius (S1)");
  scen->add_option("--seed", seed, "random seed");

  auto* sweep = app.add_subcommand("sweep", "run the whole scenario catalogue");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--p", p, "exponent p for every scenario");
  sweep->add_option("--seed", seed, "random seed for every scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "pflow: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (*cert) {
      const CertTable t = certify(target_kind, p.value_or(2.0), m.value_or(2), r, r1);
      if (print_json)
        out << t.as_json.dump(2) << '\n';
      else
        print_cert_table(t, out);
      if (!out_dir.empty()) write_text(std::filesystem::path(out_dir) / "cert.json", t.as_json.dump(2) + "\n");
      return t.admissible ? kExitPass : kExitPropertyFailure;
    }
    if (*runc) {
      RunSpec spec = load_run_spec(config_path);
      if (p) spec.flow.p = *p;
      if (seed) spec.seed = *seed;
      if (!out_dir.empty()) spec.output_dir = out_dir;
      if (spec.output_dir.empty()) spec.output_dir = "pflow_out";
      const ScenarioSpec s = single_run_scenario(spec);
      const ScenarioResult res = execute_scenario(s);
      write_scenario(s, res, spec.output_dir);
      print_properties(res, out);
      return res.all_pass() ? kExitPass : kExitPropertyFailure;
    }
    ScenarioOptions opt{p, m, r, seed};
    if (*scen) {
      const ScenarioSpec s = make_scenario(scenario_id, opt);
      const ScenarioResult res = execute_scenario(s);
      write_scenario(s, res, out_dir.empty() ? "pflow_" + scenario_id : out_dir);
      print_properties(res, out);
      return res.all_pass() ? kExitPass : kExitPropertyFailure;
    }
    if (*sweep) {
      const std::filesystem::path root = out_dir.empty() ? "pflow_sweep" : out_dir;
      std::vector<ScenarioSpec> specs;
      for (const auto& id : scenario_ids()) specs.push_back(make_scenario(id, opt));
      std::vector<std::future<ScenarioResult>> jobs;
      for (const auto& s : specs)
        jobs.push_back(std::async(std::launch::async, [&s, root] {
          ScenarioResult res = execute_scenario(s);
          write_scenario(s, res, root / s.id);
          return res;
        }));
      bool all = true;
      for (auto& j : jobs) {
        const ScenarioResult res = j.get();
        print_properties(res, out);
        all = all && res.all_pass();
      }
      return all ? kExitPass : kExitPropertyFailure;
    }
  } catch (const ConfigError& e) {
    err << "pflow: configuration error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    err << "pflow: invalid input: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "pflow: error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace pflow::harness
