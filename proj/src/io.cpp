#include "tdvi/io.hpp"

#include <cstdio>
#include <json.hpp>
#include <ostream>

#include "tdvi/errors.hpp"

namespace tdvi {

namespace {

std::string fmt17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

void emit_csv(const Trajectory& traj, std::ostream& out) {
  traj.validate();
  const int n = static_cast<int>(traj.points.front().q.size());

  out << "k,t";
  for (int i = 1; i <= n; ++i) {
    out << ",q_" << i;
  }
  out << ",h,E_d,energy_residual";
  for (const auto& label : traj.generator_labels) {
    out << ",J_" << label;
  }
  out << ",newton_iters,final_residual\n";

  for (int k = 0; k < traj.segments(); ++k) {
    const ExtendedPoint& p = traj.points[k];
    out << k << ',' << fmt17(p.t);
    for (int i = 0; i < n; ++i) {
      out << ',' << fmt17(p.q[i]);
    }
    out << ',' << fmt17(traj.h_series[k]) << ',' << fmt17(traj.Ed_series[k]) << ','
        << fmt17(traj.energy_residual_series[k]);
    for (const auto& series : traj.momentum_series) {
      out << ',' << fmt17(series[k]);
    }
    out << ',' << traj.stats_series[k].iterations << ','
        << fmt17(traj.stats_series[k].final_residual) << '\n';
  }
}

void emit_json(const Trajectory& traj, std::ostream& out) {
  traj.validate();
  const int n = static_cast<int>(traj.points.front().q.size());
  nlohmann::ordered_json doc;
  doc["segments"] = traj.segments();
  doc["generator_labels"] = traj.generator_labels;

  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (int k = 0; k < traj.segments(); ++k) {
    nlohmann::ordered_json row;
    row["k"] = k;
    row["t"] = traj.points[k].t;
    auto& q = row["q"] = nlohmann::ordered_json::array();
    for (int i = 0; i < n; ++i) {
      q.push_back(traj.points[k].q[i]);
    }
    row["h"] = traj.h_series[k];
    row["E_d"] = traj.Ed_series[k];
    row["energy_residual"] = traj.energy_residual_series[k];
    for (std::size_t g = 0; g < traj.generator_labels.size(); ++g) {
      row["J_" + traj.generator_labels[g]] = traj.momentum_series[g][k];
    }
    row["newton_iters"] = traj.stats_series[k].iterations;
    row["final_residual"] = traj.stats_series[k].final_residual;
    rows.push_back(std::move(row));
  }

  const ExtendedPoint& last = traj.points.back();
  doc["final_point"]["t"] = last.t;
  auto& fq = doc["final_point"]["q"] = nlohmann::ordered_json::array();
  for (int i = 0; i < n; ++i) {
    fq.push_back(last.q[i]);
  }
  doc["boundary_energies"]["t0"] = traj.energy_t0;
  doc["boundary_energies"]["tN"] = traj.energy_tN;
  if (traj.failure) {
    doc["failure"]["step_index"] = traj.failure->step_index;
    doc["failure"]["kind"] = traj.failure->kind;
    doc["failure"]["message"] = traj.failure->message;
  } else {
    doc["failure"] = nullptr;
  }

  out << doc.dump(2) << '\n';
}

void emit(const Trajectory& traj, const std::string& format, std::ostream& out) {
  if (format == "csv") {
    emit_csv(traj, out);
  } else if (format == "json") {
    emit_json(traj, out);
  } else {
    throw ValidationError("unknown output format '" + format + "' (expected csv or json)");
  }
  out.flush();
  if (!out) {
    throw std::ios_base::failure("output sink failed while writing trajectory");
  }
}

}  // namespace tdvi
