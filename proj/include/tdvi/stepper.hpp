#pragma once

#include <cmath>
#include <functional>

#include "tdvi/discretization.hpp"
#include "tdvi/problems.hpp"
#include "tdvi/trajectory.hpp"
#include "tdvi/types.hpp"

namespace tdvi {

/// Newton solver configuration shared by every step kind.
struct SolverConfig {
  double newton_tol = 1e-10;
  int max_newton_iters = 50;
  /// FD step scale for residual Jacobians and second-derivative probes.
  double fd_eps = 6.0554544523933395e-06;  // cbrt(machine epsilon)
  double min_h = 1e-8;
  double max_h = 1e2;
  /// Residual-halving backtracking line search (max 30 halvings per step).
  bool damping = true;
};

/// Residual of the two-step extremality equations on a window, components
/// ordered [position block (n), time entry (1)]:
///   position: h_k D2(k) + h_{k-1} D4(k-1)
///   time:     h_k D1(k) - L_d(k) + h_{k-1} D3(k-1) + L_d(k-1)
/// where segment k is (t_cur, q_cur, t_next, q_next). This is exactly the
/// gradient of the action sum with respect to the interior point, in the order
/// [dS/dq_k, dS/dt_k].
[[nodiscard]] Vector del_residual(const DiscreteLagrangian& ld, const Window& w);

/// Energy balance residual of a window:
///   (E_d(k) - E_d(k-1)) / h_k + (D1 + D3)(k),
/// the discrete form of dE/dt = -dL/dt. Identity: h_k times this value equals
/// the time entry of del_residual.
[[nodiscard]] double energy_form_residual(const DiscreteLagrangian& ld, const Window& w);

struct StepResult {
  SegmentState next;
  StepStats stats;
};

/// Solves the full window residual for (t_next, q_next), adapting the step
/// duration. Predictor: linear extrapolation in t and q. Errors:
/// SingularJacobian (rank-deficient barD12 at prev or rank-deficient Newton
/// matrix), NewtonDivergence, NonMonotoneTime (solved h outside
/// [min_h, max_h]).
[[nodiscard]] StepResult step_adaptive(const DiscreteLagrangian& ld, const SegmentState& prev,
                                       const SolverConfig& cfg = {});

struct FixedStepResult {
  Vector q_next;
  StepStats stats;
};

/// Solves the position block only, with t_next prescribed.
[[nodiscard]] FixedStepResult step_fixed(const DiscreteLagrangian& ld, const SegmentState& prev,
                                         double t_next, const SolverConfig& cfg = {});

/// Grad of an autonomous two-point Lagrangian A(q0, q1, h) by slot.
struct AutoGradBlocks {
  Vector d_q0;
  Vector d_q1;
  double d_h = 0.0;
};

/// Autonomous reduction of a two-point Lagrangian: A(q0, q1, h) =
/// L_d(t, q0, t+h, q1) for any t. Only valid for autonomous sources.
struct AutonomousDiscreteLagrangian {
  int dim = 1;
  std::function<double(const Vector& q0, const Vector& q1, double h)> eval;
  std::function<AutoGradBlocks(const Vector& q0, const Vector& q1, double h)>
      analytic_grad;  // nullable
  double fd_eps = std::sqrt(std::numeric_limits<double>::epsilon());
};

/// Builds the reduction; throws ValidationError unless ld.source is autonomous.
[[nodiscard]] AutonomousDiscreteLagrangian autonomous_reduce(const DiscreteLagrangian& ld);

/// E_d(q0, q1, h) = -A - h dA/dh for the reduced Lagrangian.
[[nodiscard]] double discrete_energy(const AutonomousDiscreteLagrangian& ad, const Vector& q0,
                                     const Vector& q1, double h);

struct KmoResult {
  Vector q_next;
  double h = 0.0;
  StepStats stats;
};

/// Energy-conserving step for autonomous systems: solves
///   h_k dA/dq0(q_cur, q_next, h_k) + h_prev dA/dq1(q_prev, q_cur, h_prev) = 0
///   E_d(q_cur, q_next, h_k) - E_d(q_prev, q_cur, h_prev) = 0
/// for (q_next, h_k). Same error contract as step_adaptive.
[[nodiscard]] KmoResult kmo_step(const AutonomousDiscreteLagrangian& ad, const Vector& q_prev,
                                 const Vector& q_cur, double h_prev, const SolverConfig& cfg = {});

/// Produces the first segment from point initial data by one high-accuracy
/// reference-solve pass over [t0, t0 + h0] (internal substeps sized so the
/// local error stays below 1e-12). h0 must lie in [min_h, max_h].
[[nodiscard]] SegmentState initialize(const LagrangianModel& model, const DiscreteLagrangian& ld,
                                      double t0, const Vector& q0, const Vector& v0, double h0,
                                      const SolverConfig& cfg = {});

/// Runs a trajectory of `n_steps` segments (the first from initialize, the
/// rest from the mode's stepper), recording the diagnostic series and both
/// boundary energies. On a step error the partial trajectory is returned with
/// `failure` set. `on_segment`, when non-null, is invoked after each recorded
/// segment with its index.
[[nodiscard]] Trajectory run_trajectory(
    const ProblemSpec& problem, StepMode mode, const SolverConfig& cfg, int n_steps,
    const std::function<void(int, const Trajectory&)>& on_segment = nullptr);

}  // namespace tdvi
