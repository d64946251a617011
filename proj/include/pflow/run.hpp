#pragma once

// Driver for a full flow run: eps-continuation over the schedule, monitor
// recording, stopping and abort bookkeeping.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pflow/certificate.hpp"
#include "pflow/diagnostics.hpp"
#include "pflow/flow.hpp"
#include "pflow/geometry.hpp"
#include "pflow/target.hpp"

namespace pflow {

inline constexpr const char* kVersionTag = "pflow-0.3.0";

struct Monitors {
  std::optional<RegularBallCert> cert;
  std::vector<BallProbe> probes;
};

struct RunRecord {
  FlowConfig config;
  MonitorReport report;
  std::vector<StageSummary> stages;
  std::vector<ProbeHistory> probes;
  MapState initial;
  MapState final_state;
  bool aborted = false;
  std::string abort_reason;
  /// Last stage ended on the stationarity threshold.
  bool converged = false;
  double wall_seconds = 0.0;
  std::string version = kVersionTag;

  double total_dissipated() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.dissipated;
    return s;
  }
  double total_dissipated_trapezoid() const {
    double s = 0.0;
    for (const auto& st : stages) s += st.dissipated_trapezoid;
    return s;
  }
};

/// Integrates the flow from u0 through every eps of the schedule. Each stage
/// warm-starts from the previous stage's final state and runs until the
/// stationarity residual falls below stat_tol or the stage time reaches t_end.
/// Failures during stepping are recorded in the returned record.
inline RunRecord run(const DomainGrid& grid, const EmbeddedTarget& target, const AmbientField& u0,
                     const FlowConfig& config, const Monitors& monitors = {}) {
  config.validate();
  if (u0.nodes() != grid.nodes() || u0.dim() != target.ambient_dim())
    throw std::invalid_argument("run: initial map does not match grid/target");
  if (!u0.all_finite()) throw std::invalid_argument("run: initial map has non-finite entries");
  if (manifold_drift(u0, target) > config.drift_abort)
    throw std::invalid_argument("run: initial map does not lie on the target");
  if (monitors.cert)
    for (std::size_t x = 0; x < u0.nodes(); ++x)
      if (!monitors.cert->contains(u0[x]))
        throw std::invalid_argument("run: initial map leaves the certified set");

  const auto wall_start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config;
  rec.initial = MapState{u0, 0.0, config.eps_schedule.front()};
  for (const auto& pr : monitors.probes) rec.probes.push_back(ProbeHistory{pr, config.p, {}, {}, {}, 0.0});

  const double p = config.p;
  MapState state = rec.initial;
  MonitorReport& rep = rec.report;
  std::size_t global_step = 0;

  FlowFields fields;
  double E = 0.0;
  double residual = 0.0;
  double rhs_sq = 0.0;
  auto evaluate = [&] {
    fields = evaluate_flow_fields(state, grid, target, p, config.drift_abort);
    ScalarField Fp = fields.density;
    for (double& v : Fp) v = std::pow(v, 0.5 * p);
    E = integrate(Fp, grid) / p;
    rhs_sq = integrate(pointwise_norm_sq(fields.rhs), grid);
    residual = std::sqrt(rhs_sq);
  };

  StageSummary* stage = nullptr;
  auto push_row = [&](double dt, double increment) {
    rep.step.push_back(global_step);
    rep.t.push_back(state.t);
    rep.eps.push_back(state.eps);
    rep.energy.push_back(E);
    const double bal = E - stage->energy_start + stage->dissipated;
    rep.dissipation_residual.push_back(std::abs(bal) / std::abs(stage->energy_start));
    if (monitors.cert) {
      rep.max_fstar.push_back(confinement_max(state.u, *monitors.cert));
      const ScalarField phi = phi_field(state.u, fields.density, *monitors.cert);
      rep.max_phi.push_back(*std::max_element(phi.begin(), phi.end()));
    } else {
      rep.max_fstar.push_back(std::nan(""));
      rep.max_phi.push_back(std::nan(""));
    }
    rep.stationarity_residual.push_back(residual);
    rep.drift.push_back(manifold_drift(state.u, target));
    rep.dt.push_back(dt);
    rep.dissipation_increment.push_back(increment);
    rep.rhs_sq.push_back(rhs_sq);
    for (auto& h : rec.probes) h.record(state.t, state.u, grid);
  };

  for (std::size_t k = 0; k < config.eps_schedule.size() && !rec.aborted; ++k) {
    state.eps = config.eps_schedule[k];
    rec.stages.push_back(StageSummary{});
    stage = &rec.stages.back();
    stage->eps = state.eps;
    stage->t_start = state.t;
    try {
      evaluate();
    } catch (const std::exception& e) {
      rec.aborted = true;
      rec.abort_reason = e.what();
      rec.stages.pop_back();
      break;
    }
    stage->energy_start = E;
    if (k == 0) push_row(0.0, 0.0);
    stage->first_row = rep.size() - 1;
    double stage_time = 0.0;
    std::size_t since_record = 0;
    double pending_increment = 0.0;
    double pending_dt = 0.0;
    try {
      while (true) {
        if (residual < config.stat_tol) {
          stage->converged = true;
          break;
        }
        if (stage_time >= config.t_end * (1.0 - 1e-14)) break;
        if (stage->steps >= config.max_steps_per_stage) break;
        double dt = config.fixed_dt > 0.0
                        ? config.fixed_dt
                        : cfl_dt(fields.density, grid, p, config.dt_safety);
        if (stage_time + dt > config.t_end) dt = config.t_end - stage_time;
        const double rhs_sq_before = rhs_sq;
        MapState next = advance(state, fields, dt, target, config, global_step + 1);
        double inc = 0.0;
        {
          const auto& a = next.u.raw();
          const auto& b = state.u.raw();
          const std::size_t L = state.u.dim();
          double s = 0.0;
          for (std::size_t x = 0; x < state.u.nodes(); ++x) {
            double d = 0.0;
            for (std::size_t c = 0; c < L; ++c) {
              const double diff = a[x * L + c] - b[x * L + c];
              d += diff * diff;
            }
            s += d * grid.vol_density(x);
          }
          inc = s * grid.cell_volume() / dt;
        }
        state = std::move(next);
        stage_time += dt;
        ++stage->steps;
        ++global_step;
        evaluate();
        if (monitors.cert && confinement_max(state.u, *monitors.cert) >= monitors.cert->a)
          throw FlowAbort("state left the certified set");
        stage->dissipated += inc;
        stage->dissipated_trapezoid += 0.5 * dt * (rhs_sq_before + rhs_sq);
        pending_increment += inc;
        pending_dt += dt;
        ++since_record;
        const bool stage_ending = residual < config.stat_tol ||
                                  stage_time >= config.t_end * (1.0 - 1e-14) ||
                                  stage->steps >= config.max_steps_per_stage;
        if (since_record >= config.record_every || stage_ending) {
          push_row(pending_dt, pending_increment);
          since_record = 0;
          pending_increment = 0.0;
          pending_dt = 0.0;
        }
      }
    } catch (const std::exception& e) {
      rec.aborted = true;
      rec.abort_reason = e.what();
    }
    stage->energy_stop = E;
    stage->t_stop = state.t;
    stage->final_residual = residual;
    stage->last_row = rep.size() - 1;
  }
  rec.final_state = state;
  rec.converged = !rec.aborted && !rec.stages.empty() && rec.stages.back().converged;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return rec;
}

}  // namespace pflow
