#pragma once

// Persistence: per-run series CSV and final-state dumps. Numbers are written
// with %.17g so identical runs produce identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "pflow/diagnostics.hpp"
#include "pflow/field.hpp"
#include "pflow/geometry.hpp"

namespace pflow::harness {

inline constexpr const char* kSeriesHeader =
    "step,t,eps,energy,dissipation_residual,max_fstar,max_phi,stationarity_residual,drift";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string series_csv(const MonitorReport& rep) {
  std::string out = kSeriesHeader;
  out += '\n';
  for (std::size_t i = 0; i < rep.size(); ++i) {
    out += std::to_string(rep.step[i]);
    for (double v : {rep.t[i], rep.eps[i], rep.energy[i], rep.dissipation_residual[i],
                     rep.max_fstar[i], rep.max_phi[i], rep.stationarity_residual[i], rep.drift[i]}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

/// One row per node: node index, coordinates, then the ambient components.
inline std::string final_state_csv(const DomainGrid& grid, const AmbientField& u) {
  std::string out = "node";
  for (int i = 0; i < grid.dim(); ++i) out += ",x" + std::to_string(i);
  for (std::size_t k = 0; k < u.dim(); ++k) out += ",u" + std::to_string(k);
  out += '\n';
  for (std::size_t x = 0; x < u.nodes(); ++x) {
    out += std::to_string(x);
    const auto c = grid.coordinates(x);
    for (int i = 0; i < grid.dim(); ++i) out += ',' + format_double(c[static_cast<std::size_t>(i)]);
    for (double v : u[x]) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace pflow::harness
