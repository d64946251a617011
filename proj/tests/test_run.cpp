#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pflow/initial.hpp"
#include "pflow/run.hpp"

using namespace pflow;

namespace {

constexpr double kPi = std::numbers::pi;

FlowConfig basic(double p, std::vector<double> eps) {
  FlowConfig c;
  c.p = p;
  c.eps_schedule = std::move(eps);
  return c;
}

}  // namespace

TEST(Run, ConstantInitialMapNeedsNoSteps) {
  const DomainGrid g = build_flat_torus(2, 16, 2 * kPi);
  const double v[] = {0.0, 0.0, 1.0};
  for (double p : {2.0, 3.0}) {
    const RunRecord rec = run(g, make_sphere(2), constant_map(g, v), basic(p, {1e-2}));
    EXPECT_TRUE(rec.converged);
    EXPECT_EQ(rec.stages[0].steps, 0u);
    EXPECT_EQ(rec.report.size(), 1u);
    EXPECT_NEAR(rec.report.energy[0], std::pow(1e-2, p / 2) * 4 * kPi * kPi / p, 1e-13);
  }
}

TEST(Run, RejectsBadInitialData) {
  const DomainGrid g = build_flat_torus(2, 8, 2 * kPi);
  const auto s2 = make_sphere(2);
  const double off[] = {0.0, 0.0, 2.0};
  EXPECT_THROW(run(g, s2, constant_map(g, off), basic(2, {1e-2})), std::invalid_argument);
  EXPECT_THROW(run(g, s2, AmbientField(g.nodes(), 4), basic(2, {1e-2})), std::invalid_argument);
  AmbientField nan = sphere_wrap(g, 2, 1);
  nan[0][0] = std::nan("");
  EXPECT_THROW(run(g, s2, nan, basic(2, {1e-2})), std::invalid_argument);
  const auto cap = make_best_cap_certificate(2, 0.2, 1.0);
  EXPECT_THROW(run(g, s2, sphere_wrap(g, 2, 1), basic(2, {1e-2}), Monitors{cap, {}}), std::invalid_argument);
  EXPECT_THROW(run(g, s2, sphere_wrap(g, 2, 1), basic(1.5, {1e-2})), std::invalid_argument);
}

TEST(Run, MatchesAManualStepLoopBitForBit) {
  const DomainGrid g = build_flat_torus(2, 12, 2 * kPi);
  const auto target = make_sphere(2);
  const AmbientField u0 = cap_random_map(g, 2, 0.4, 5);
  FlowConfig c = basic(3.0, {5e-3});
  c.stat_tol = 0.0;
  c.t_end = 1e9;
  c.max_steps_per_stage = 25;
  const RunRecord rec = run(g, target, u0, c);
  MapState s{u0, 0.0, 5e-3};
  for (std::size_t i = 1; i <= 25; ++i) s = step(s, g, target, c, i);
  EXPECT_EQ(rec.final_state.u.raw(), s.u.raw());
  EXPECT_EQ(rec.final_state.t, s.t);
}

TEST(Run, StagesWarmStartAndLabelRows) {
  const DomainGrid g = build_flat_torus(2, 12, 2 * kPi);
  FlowConfig c = basic(3.0, {1e-1, 1e-2, 1e-3});
  c.t_end = 0.5;
  const RunRecord rec = run(g, make_sphere(2), cap_random_map(g, 2, 0.4, 5), c);
  ASSERT_FALSE(rec.aborted);
  ASSERT_EQ(rec.stages.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& st = rec.stages[k];
    EXPECT_EQ(st.eps, c.eps_schedule[k]);
    EXPECT_NEAR(st.t_stop - st.t_start, 0.5, 1e-12);
    for (std::size_t r = st.first_row + 1; r <= st.last_row; ++r) {
      EXPECT_EQ(rec.report.eps[r], st.eps);
      EXPECT_LE(rec.report.energy[r], rec.report.energy[r - 1] + 1e-12 * rec.report.energy[0]);
    }
    if (k > 0) {
      EXPECT_EQ(st.t_start, rec.stages[k - 1].t_stop);
      // Lowering eps lowers the energy of the same state.
      EXPECT_LT(st.energy_start, rec.stages[k - 1].energy_stop);
    }
  }
  const auto& rep = rec.report;
  for (std::size_t n : {rep.t.size(), rep.eps.size(), rep.energy.size(), rep.dissipation_residual.size(),
                        rep.max_fstar.size(), rep.max_phi.size(), rep.stationarity_residual.size(),
                        rep.drift.size(), rep.dt.size()})
    EXPECT_EQ(n, rep.step.size());
}

TEST(Run, RecordEveryThinsRowsButKeepsStageEnds) {
  const DomainGrid g = build_flat_torus(2, 12, 2 * kPi);
  FlowConfig c = basic(2.0, {1e-2});
  c.stat_tol = 0.0;
  c.t_end = 1e9;
  c.max_steps_per_stage = 95;
  const AmbientField u0 = cap_random_map(g, 2, 0.4, 5);
  const RunRecord full = run(g, make_sphere(2), u0, c);
  c.record_every = 10;
  const RunRecord thin = run(g, make_sphere(2), u0, c);
  EXPECT_EQ(full.report.size(), 96u);
  EXPECT_EQ(thin.report.size(), 1u + 9u + 1u);
  EXPECT_EQ(thin.report.step.back(), 95u);
  EXPECT_EQ(thin.final_state.u.raw(), full.final_state.u.raw());
  double dt_sum = 0.0;
  for (double dt : thin.report.dt) dt_sum += dt;
  EXPECT_NEAR(dt_sum, thin.final_state.t, 1e-14);
}

TEST(Run, AbortIsRecordedNotThrown) {
  const DomainGrid g = build_flat_torus(2, 12, 2 * kPi);
  FlowConfig c = basic(2.0, {1e-2});
  c.fixed_dt = 5.0;
  c.reproject_every = 0;
  const RunRecord rec = run(g, make_sphere(2), cap_random_map(g, 2, 0.4, 5), c);
  EXPECT_TRUE(rec.aborted);
  EXPECT_FALSE(rec.abort_reason.empty());
  EXPECT_FALSE(rec.converged);
}

TEST(Run, LeavingTheCertifiedSetAborts) {
  // The whole-sphere wrap cannot fit in a small cap; start inside the cap
  // but force a huge step with no projection.
  const DomainGrid g = build_flat_torus(2, 12, 2 * kPi);
  FlowConfig c = basic(2.0, {1e-2});
  c.fixed_dt = 0.5;
  c.drift_abort = 10.0;
  const auto cap = make_best_cap_certificate(2, 0.2, 1.0);
  const RunRecord rec = run(g, make_sphere(2), cap_random_map(g, 2, 0.19, 5), c, Monitors{cap, {}});
  EXPECT_TRUE(rec.aborted);
}

TEST(Run, ProbesRecordEveryRow) {
  const DomainGrid g = build_flat_torus(2, 12, 2 * kPi);
  FlowConfig c = basic(2.0, {1e-2});
  c.t_end = 0.2;
  const RunRecord rec = run(g, make_sphere(2), cap_random_map(g, 2, 0.4, 5), c,
                            Monitors{std::nullopt, {BallProbe{{kPi, kPi, 0}, 1.0}}});
  ASSERT_EQ(rec.probes.size(), 1u);
  EXPECT_EQ(rec.probes[0].t.size(), rec.report.size());
  EXPECT_EQ(rec.probes[0].t.back(), rec.final_state.t);
}

TEST(Run, WrapIsConvergedImmediately) {
  const DomainGrid g = build_flat_torus(1, 64, 2 * kPi);
  FlowConfig c = basic(3.0, {1e-2, 1e-3});
  const RunRecord rec = run(g, make_clifford_torus(), clifford_wrap(g, 1), c);
  EXPECT_TRUE(rec.converged);
  EXPECT_EQ(rec.stages[0].steps + rec.stages[1].steps, 0u);
  EXPECT_EQ(rec.final_state.u.raw(), clifford_wrap(g, 1).raw());
}

TEST(Run, ScheduleEndpointDeterminesTheLimit) {
  const DomainGrid g = build_flat_torus(2, 8, 2 * kPi);
  const AmbientField u0 = clifford_angle_map(
      g, [](std::span<const double> x) { return 0.5 * std::sin(x[0]); },
      [](std::span<const double> x) { return 0.4 * std::sin(x[0] + x[1]); });
  FlowConfig a = basic(3.0, {1e-1, 1e-2});
  FlowConfig b = basic(3.0, {1e-2});
  for (FlowConfig* c : {&a, &b}) {
    c->t_end = 200;
    c->stat_tol = 1e-9;
  }
  const RunRecord ra = run(g, make_clifford_torus(), u0, a);
  const RunRecord rb = run(g, make_clifford_torus(), u0, b);
  ASSERT_TRUE(ra.converged && rb.converged);
  EXPECT_LE(sup_distance(ra.final_state.u, rb.final_state.u), 1e-4);
}
