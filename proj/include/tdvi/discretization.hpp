#pragma once

#include <functional>
#include <memory>
#include <span>

#include "tdvi/lagrangian.hpp"
#include "tdvi/types.hpp"

namespace tdvi {

/// First partials of a two-point Lagrangian L_d(t0, q0, t1, q1) by slot.
struct GradBlocks {
  double d_t0 = 0.0;  // D1
  Vector d_q0;        // D2
  double d_t1 = 0.0;  // D3
  Vector d_q1;        // D4
};

/// Two-point (discrete) Lagrangian. `analytic_grad`, when present, must agree
/// with central differences of `eval`; `source` points back to the continuous
/// model a discretization was built from (null for hand-rolled L_d).
struct DiscreteLagrangian {
  int dim = 1;
  std::function<double(double t0, const Vector& q0, double t1, const Vector& q1)> eval;
  std::function<GradBlocks(double t0, const Vector& q0, double t1, const Vector& q1)>
      analytic_grad;  // nullable
  std::shared_ptr<const LagrangianModel> source;  // nullable
  double fd_eps = std::sqrt(std::numeric_limits<double>::epsilon());
};

/// Midpoint rule: L_d(t0,q0,t1,q1) = L((t0+t1)/2, (q0+q1)/2, (q1-q0)/(t1-t0)).
/// Analytic grad blocks are synthesized by the chain rule when the model has
/// analytic partials:
///   D1 = Lt/2 + (Lv.v)/h   D2 = Lq/2 - Lv/h
///   D3 = Lt/2 - (Lv.v)/h   D4 = Lq/2 + Lv/h
/// with everything evaluated at the midpoint arguments.
[[nodiscard]] DiscreteLagrangian midpoint_discretize(const LagrangianModel& model);

/// Evaluates L_d on a segment. Throws ZeroTimeStep when t1 == t0.
[[nodiscard]] double eval_discrete(const DiscreteLagrangian& ld, const SegmentState& s);

/// Grad blocks on a segment, analytic when available, otherwise central FD.
[[nodiscard]] GradBlocks grad_blocks(const DiscreteLagrangian& ld, const SegmentState& s);

/// Mixed second-derivative block of the action summand (t1-t0)*L_d:
///   entry(i, j) = d^2[(t1-t0) L_d] / d x_i d y_j,  x = (t0, q0), y = (t1, q1),
/// a (1+n) x (1+n) matrix obtained by differencing first derivatives. Its
/// regularity is the existence condition for the adaptive step; it equals the
/// off-diagonal block of the discrete two-form.
[[nodiscard]] Matrix barD12_matrix(const DiscreteLagrangian& ld, const SegmentState& s);

/// True when the smallest singular value of barD12 falls below
/// 1e-8 * (largest singular value).
[[nodiscard]] bool segment_degenerate(const DiscreteLagrangian& ld, const SegmentState& s);

/// Discrete energy E_d(t, x, h, y) = -L_d(t,x,t+h,y) - h * D3(t,x,t+h,y).
/// Throws NonMonotoneTime when h <= 0.
[[nodiscard]] double discrete_energy(const DiscreteLagrangian& ld, double t, const Vector& x,
                                     double h, const Vector& y);

/// Action sum S = sum_k (t_{k+1} - t_k) * L_d(t_k, q_k, t_{k+1}, q_{k+1}).
/// Throws NonMonotoneTime unless times increase strictly.
[[nodiscard]] double action_sum(const DiscreteLagrangian& ld, std::span<const ExtendedPoint> points);

/// Central-difference gradient of the action sum with respect to the interior
/// point (t_k, q_k), components ordered [dS/dq_k, dS/dt_k] to match
/// del_residual. Requires 0 < k < points.size() - 1.
[[nodiscard]] Vector action_point_gradient(const DiscreteLagrangian& ld,
                                           std::span<const ExtendedPoint> points, int k);

}  // namespace tdvi
