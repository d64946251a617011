#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pflow/harness/cli.hpp"

using namespace pflow;
using namespace pflow::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pflow_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pflow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json small_cap_config() {
  return json::parse(R"({
    "label": "small",
    "domain": {"type": "flat_torus", "m": 2, "n": 12},
    "target": {"type": "sphere", "params": {"n": 2}},
    "ball": {"kind": "cap", "r": 0.2},
    "initial": {"kind": "cap_random", "fraction": 0.8},
    "flow": {"p": 2, "eps_list": [0.01], "t_end": 1.0, "stat_tol": 1e-6},
    "seed": 3
  })");
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  write_text(p, j.dump(2));
  return p;
}

}  // namespace

TEST(Config, RoundTripsThroughJson) {
  RunSpec s = run_spec_from_json(small_cap_config());
  s.probes.push_back(BallProbe{{1.0, 2.0, 0.0}, 0.5});
  s.flow.scheme = Scheme::project_after_step;
  s.expect = {"energy_monotone"};
  const RunSpec back = run_spec_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_EQ(back.label, "small");
  EXPECT_EQ(back.domain.n, 12u);
  ASSERT_TRUE(back.ball.has_value());
  EXPECT_EQ(back.ball->r, 0.2);
  EXPECT_EQ(back.flow.scheme, Scheme::project_after_step);
  EXPECT_EQ(back.probes.size(), 1u);
  EXPECT_EQ(back.seed, 3u);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  json j = small_cap_config();
  j["flow"]["timestep"] = 1.0;
  EXPECT_THROW(run_spec_from_json(j), ConfigError);
  j = small_cap_config();
  j["colour"] = "red";
  EXPECT_THROW(run_spec_from_json(j), ConfigError);
  j = small_cap_config();
  j["flow"]["p"] = "three";
  EXPECT_THROW(run_spec_from_json(j), ConfigError);
  j = small_cap_config();
  j["flow"]["scheme"] = "implicit";
  EXPECT_THROW(run_spec_from_json(j), ConfigError);
}

TEST(Config, MissingOrMalformedFile) {
  EXPECT_THROW(load_run_spec("/nonexistent/pflow.json"), ConfigError);
  const fs::path dir = scratch("malformed");
  write_text(dir / "bad.json", "{ not json");
  EXPECT_THROW(load_run_spec((dir / "bad.json").string()), ConfigError);
}

TEST(Materialise, PreflightChecks) {
  EXPECT_NO_THROW(materialise(run_spec_from_json(small_cap_config())));

  RunSpec s = run_spec_from_json(small_cap_config());
  s.ball->r = 0.3;  // above r_max(2, 2) = 0.281
  EXPECT_THROW(materialise(s), ConfigError);

  s = run_spec_from_json(small_cap_config());
  s.flow.p = 3.0;  // r = 0.2 is far above r_max(3, 2)
  EXPECT_THROW(materialise(s), ConfigError);

  s = run_spec_from_json(small_cap_config());
  s.ball->delta = 2.5;  // below delta_p = 3
  EXPECT_THROW(materialise(s), ConfigError);

  s = run_spec_from_json(small_cap_config());
  s.ball->delta = 7.0;  // above delta* = 6.08: regular-set condition fails
  EXPECT_THROW(materialise(s), ConfigError);

  s = run_spec_from_json(small_cap_config());
  s.initial.kind = "constant";
  s.initial.value = {1.0, 0.0, 0.0};
  EXPECT_THROW(materialise(s), ConfigError);

  s = run_spec_from_json(small_cap_config());
  s.flow.eps_schedule = {};
  EXPECT_THROW(materialise(s), ConfigError);

  s = run_spec_from_json(small_cap_config());
  s.target.type = "torus";
  EXPECT_THROW(materialise(s), ConfigError);

  s = run_spec_from_json(small_cap_config());
  s.probes.push_back(BallProbe{{0, 0, 0}, 10.0});
  EXPECT_THROW(materialise(s), ConfigError);
}

TEST(Io, SeriesHeaderAndRoundTripFormatting) {
  EXPECT_STREQ(kSeriesHeader,
               "step,t,eps,energy,dissipation_residual,max_fstar,max_phi,stationarity_residual,drift");
  for (double v : {0.1, 1.0 / 3.0, 6.084004256631685, 1e-300, -2.5e17})
    EXPECT_EQ(std::stod(format_double(v)), v);
  const DomainGrid g = build_flat_torus(1, 4, 1.0);
  const double c[] = {0.0, 1.0};
  const std::string csv = final_state_csv(g, constant_map(g, c));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "node,x0,u0,u1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Cli, CertExitCodes) {
  const CliResult ok = cli({"cert", "--p", "2", "--m", "2", "--r", "0.2"});
  EXPECT_EQ(ok.code, kExitPass);
  EXPECT_NE(ok.out.find("6.08400425663"), std::string::npos);
  EXPECT_NE(ok.out.find("ADMISSIBLE"), std::string::npos);
  const CliResult too_big = cli({"cert", "--p", "2", "--m", "2", "--r", "0.3"});
  EXPECT_EQ(too_big.code, kExitPropertyFailure);
  EXPECT_NE(too_big.out.find("NOT ADMISSIBLE"), std::string::npos);
  EXPECT_EQ(cli({"cert", "--target", "clifford", "--p", "3"}).code, kExitPass);
  EXPECT_EQ(cli({"cert", "--p", "2"}).code, kExitConfigError);
  EXPECT_EQ(cli({"cert", "--p", "1", "--r", "0.1"}).code, kExitConfigError);
  EXPECT_EQ(cli({"cert", "--target", "hyperbolic"}).code, kExitConfigError);

  const fs::path dir = scratch("cert");
  EXPECT_EQ(cli({"cert", "--r", "0.2", "--out", dir.string()}).code, kExitPass);
  const json j = json::parse(slurp(dir / "cert.json"));
  EXPECT_EQ(j.at("verdict"), "ADMISSIBLE");
  EXPECT_NEAR(j.at("delta_star").get<double>(), 6.084004256631685, 1e-12);
}

TEST(Cli, BadInvocationsExitWithTwo) {
  EXPECT_EQ(cli({}).code, kExitConfigError);
  EXPECT_EQ(cli({"run"}).code, kExitConfigError);
  EXPECT_EQ(cli({"run", "--config", "/nonexistent.json"}).code, kExitConfigError);
  EXPECT_EQ(cli({"scenario", "S9"}).code, kExitConfigError);
  EXPECT_EQ(cli({"scenario", "S1", "--r", "0.3", "--out", scratch("s1bad").string()}).code, kExitConfigError);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitConfigError);
  EXPECT_EQ(cli({"cert", "--bogus"}).code, kExitConfigError);
}

TEST(Cli, RunWritesOutputsDeterministically) {
  const fs::path dir = scratch("run");
  const fs::path cfg = write_config(dir, small_cap_config());
  const CliResult a = cli({"run", "--config", cfg.string(), "--out", (dir / "a").string()});
  const CliResult b = cli({"run", "--config", cfg.string(), "--out", (dir / "b").string()});
  ASSERT_EQ(a.code, kExitPass) << a.out << a.err;
  ASSERT_EQ(b.code, kExitPass);
  const std::string series = slurp(dir / "a" / "small" / "series.csv");
  EXPECT_EQ(series.substr(0, series.find('\n')), kSeriesHeader);
  EXPECT_EQ(series, slurp(dir / "b" / "small" / "series.csv"));
  EXPECT_EQ(slurp(dir / "a" / "small" / "final_state.csv"), slurp(dir / "b" / "small" / "final_state.csv"));
  const json summary = json::parse(slurp(dir / "a" / "summary.json"));
  EXPECT_TRUE(summary.at("all_pass").get<bool>());
  EXPECT_FALSE(summary.at("properties").empty());

  // A different seed gives a different trajectory.
  const CliResult c = cli({"run", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "4"});
  ASSERT_EQ(c.code, kExitPass);
  EXPECT_NE(series, slurp(dir / "c" / "small" / "series.csv"));
}

TEST(Cli, FailingPropertyExitsWithOne) {
  // Too few steps to converge: the stationarity property fails.
  json j = small_cap_config();
  j["flow"]["t_end"] = 1e-3;
  j["expect"] = {"no_abort", "stationarity"};
  const fs::path dir = scratch("fail");
  const CliResult r = cli({"run", "--config", write_config(dir, j).string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, kExitPropertyFailure);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, ScenarioS1AtPThree) {
  const fs::path dir = scratch("s1p3");
  const CliResult r = cli({"scenario", "S1", "--p", "3", "--out", dir.string()});
  EXPECT_EQ(r.code, kExitPass) << r.out << r.err;
  const std::string series = slurp(dir / "main" / "series.csv");
  EXPECT_EQ(series.substr(0, series.find('\n')), kSeriesHeader);
  const json summary = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary.at("scenario"), "S1");
  EXPECT_TRUE(summary.at("all_pass").get<bool>());
}

TEST(Scenarios, CatalogueIsComplete) {
  EXPECT_EQ(scenario_ids(), (std::vector<std::string>{"S1", "S2", "S3", "S4", "S5"}));
  for (const auto& id : scenario_ids()) {
    const ScenarioSpec s = make_scenario(id, {});
    EXPECT_EQ(s.id, id);
    EXPECT_FALSE(s.runs.empty());
    bool checks = !s.expected.empty();
    for (const auto& r : s.runs) {
      checks = checks || !r.expect.empty();
      EXPECT_NO_THROW(materialise(r)) << id << '/' << r.label;
    }
    EXPECT_TRUE(checks) << id;
  }
  EXPECT_THROW(make_scenario("S6", {}), ConfigError);
}
