#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "tdvi/discretization.hpp"
#include "tdvi/problems.hpp"
#include "tdvi/stepper.hpp"
#include "tdvi/trajectory.hpp"
#include "tdvi/types.hpp"

namespace tdvi {

/// Covectors and matrices over a segment use the fixed coordinate basis
/// (dt0, dq0[1..n], dt1, dq1[1..n]), dimension 2n + 2.
using Covector = Vector;

[[nodiscard]] Vector pack_segment(const SegmentState& s);
[[nodiscard]] SegmentState unpack_segment(const Vector& x, int dim);

/// Pre-step one-form: dq0 block (t1-t0) D2, dt0 entry (t1-t0) D1 - L_d,
/// dt1/dq1 entries zero. Equals the (t0, q0) gradient block of (t1-t0) L_d.
[[nodiscard]] Covector theta_minus(const DiscreteLagrangian& ld, const SegmentState& s);

/// Post-step one-form: dq1 block (t1-t0) D4, dt1 entry (t1-t0) D3 + L_d,
/// dt0/dq0 entries zero. Its dt1 entry equals -E_d of the segment, and
/// theta_minus + theta_plus is the exact differential of (t1-t0) L_d.
[[nodiscard]] Covector theta_plus(const DiscreteLagrangian& ld, const SegmentState& s);

/// Discrete two-form Omega = d(theta_minus) as an antisymmetric matrix,
/// Omega(i, j) = d_i theta_j - d_j theta_i, by central differences with step
/// 1e-6 * max(1, |coordinate|). Nondegenerate iff barD12_matrix is regular.
[[nodiscard]] Matrix omega_matrix(const DiscreteLagrangian& ld, const SegmentState& s);

/// Discrete flow on segments: (t_{k-1}, q_{k-1}, t_k, q_k) ->
/// (t_k, q_k, t_{k+1}, q_{k+1}).
using FlowMap = std::function<SegmentState(const SegmentState&)>;

/// Adaptive step as a FlowMap with the Newton tolerance tightened to at most
/// 1e-13, suitable for finite-difference linearization.
[[nodiscard]] FlowMap make_adaptive_flow(const DiscreteLagrangian& ld, SolverConfig cfg = {});

/// FD linearization of a flow map, rows = output coordinates, cols = input
/// coordinates, step probe_scale * max(1, |coordinate|). The upper half is
/// [0 | I] to FD accuracy because the flow copies the last pair.
[[nodiscard]] Matrix flow_jacobian(const FlowMap& flow, const SegmentState& s,
                                   double probe_scale = 1e-6);

/// || DPhi^T Omega(Phi(s)) DPhi - Omega(s) ||_max, the pointwise defect of
/// two-form preservation.
[[nodiscard]] double symplecticity_defect(const DiscreteLagrangian& ld, const FlowMap& flow,
                                          const SegmentState& s);

/// Boundary energies of a trajectory: left endpoint
/// h0 (D1 + D3)(first segment) + E_d(first segment), right endpoint
/// E_d(last segment). Returned as (energy_t0, energy_tN).
[[nodiscard]] std::pair<double, double> boundary_energies(const DiscreteLagrangian& ld,
                                                          const Trajectory& traj);

/// Momentum map of a generator evaluated on a segment:
///   [L_d + (t1-t0) D3] xi_time(t1, q1) + (t1-t0) D4 . xi_config(t1, q1).
/// The time factor equals -E_d, so the pure time-translation momentum is -E_d.
[[nodiscard]] double momentum_map(const DiscreteLagrangian& ld, const SegmentState& s,
                                  const SymmetryGenerator& gen);

/// Directional derivative of (t1-t0) L_d along the diagonal action of the
/// generator at s (central FD in the group parameter). Zero for exact
/// symmetries; momentum conservation holds only when this vanishes.
[[nodiscard]] double invariance_defect(const DiscreteLagrangian& ld, const SegmentState& s,
                                       const SymmetryGenerator& gen);

struct ConvergenceStudy {
  std::vector<double> h;
  std::vector<double> error;
  /// Least-squares slope of log(error) against log(h); NaN when `exact`.
  double observed_order = 0.0;
  /// True when every error is at or below 1e-12 (slope meaningless).
  bool exact = false;
};

/// End-state error study against a high-accuracy reference solve for fixed
/// mode, one run per listed step size, each covering [t0, t_end] exactly.
/// Other modes raise ValidationError (no end-time alignment is defined).
[[nodiscard]] ConvergenceStudy convergence_order(const ProblemSpec& problem, StepMode mode,
                                                 std::span<const double> h_list, double t_end,
                                                 const SolverConfig& cfg = {});

}  // namespace tdvi
