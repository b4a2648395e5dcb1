#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tdvi/types.hpp"

namespace tdvi {

/// Time-dependent Lagrangian L(t, q, v) on Q = R^n with optional analytic
/// first partials. When a partial callback is absent the library falls back to
/// central differences with per-coordinate step fd_eps * max(1, |x|).
struct LagrangianModel {
  int dim = 1;
  std::function<double(double t, const Vector& q, const Vector& v)> lag;
  std::function<double(double t, const Vector& q, const Vector& v)> d_t;  // nullable
  std::function<Vector(double t, const Vector& q, const Vector& v)> d_q;  // nullable
  std::function<Vector(double t, const Vector& q, const Vector& v)> d_v;  // nullable
  std::string label;
  /// True when L has no explicit time dependence; gates the kmo stepper.
  bool autonomous = false;
  double fd_eps = std::sqrt(std::numeric_limits<double>::epsilon());

  [[nodiscard]] bool has_analytic_partials() const {
    return static_cast<bool>(d_t) && static_cast<bool>(d_q) && static_cast<bool>(d_v);
  }
};

struct Partials {
  double d_t = 0.0;
  Vector d_q;
  Vector d_v;
};

/// One sample of a continuous reference trajectory.
struct StatePoint {
  double t = 0.0;
  Vector q;
  Vector v;
};

/// Evaluates L; throws EvaluationError on non-finite results (message carries
/// the probe point).
[[nodiscard]] double eval_lagrangian(const LagrangianModel& model, double t, const Vector& q,
                                     const Vector& v);

/// First partials of L, analytic when supplied, otherwise central differences.
[[nodiscard]] Partials partials(const LagrangianModel& model, double t, const Vector& q,
                                const Vector& v);

/// Energy function E_L = v . dL/dv - L.
[[nodiscard]] double continuous_energy(const LagrangianModel& model, double t, const Vector& q,
                                       const Vector& v);

/// Acceleration from the Euler-Lagrange equations, solving
///   d2L/dv2 . a = dL/dq - d2L/(dt dv) - d2L/(dq dv) . v.
/// Throws DegenerateLagrangian when the velocity Hessian is singular.
[[nodiscard]] Vector acceleration(const LagrangianModel& model, double t, const Vector& q,
                                  const Vector& v);

/// Classical fixed-step RK4 on (q, v), returning steps + 1 samples including
/// both endpoints. Invertibility of the velocity Hessian is checked at every
/// stage evaluation.
[[nodiscard]] std::vector<StatePoint> reference_solve(const LagrangianModel& model, double t0,
                                                      const Vector& q0, const Vector& v0,
                                                      double t_end, int steps);

}  // namespace tdvi
