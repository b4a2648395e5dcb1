#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tdvi/types.hpp"

namespace tdvi {

/// Per-step solver statistics.
struct StepStats {
  int iterations = 0;
  double final_residual = 0.0;
  double jacobian_condition_estimate = 0.0;
  int backtracks = 0;
};

/// Failure record attached to a partial trajectory.
struct TrajectoryFailure {
  int step_index = 0;     // segment index the solver was producing
  std::string kind;       // stable error tag (Error::kind())
  std::string message;
};

/// Discrete trajectory with per-segment diagnostic series. With M + 1 points
/// there are M segments and every series has length M; entry k belongs to the
/// segment (t_k, q_k) -> (t_{k+1}, q_{k+1}). energy_residual_series[k] is the
/// energy-form residual of the window ending at segment k (0 for k = 0, where
/// no window exists); stats_series[0] is all-zero (the initial segment comes
/// from the reference integrator, not a Newton solve).
struct Trajectory {
  std::vector<ExtendedPoint> points;
  std::vector<double> h_series;
  std::vector<double> Ed_series;
  std::vector<double> energy_residual_series;
  std::vector<std::string> generator_labels;
  std::vector<std::vector<double>> momentum_series;  // [generator][segment]
  std::vector<StepStats> stats_series;
  /// Boundary energies: left endpoint carries the h0 * dLbar/dt0 correction,
  /// right endpoint is E_d of the last segment.
  double energy_t0 = std::numeric_limits<double>::quiet_NaN();
  double energy_tN = std::numeric_limits<double>::quiet_NaN();
  std::optional<TrajectoryFailure> failure;

  [[nodiscard]] int segments() const noexcept { return static_cast<int>(points.size()) - 1; }
  /// Checks monotone times and consistent series lengths.
  void validate() const;
};

}  // namespace tdvi
