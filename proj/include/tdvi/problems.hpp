#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tdvi/lagrangian.hpp"
#include "tdvi/types.hpp"

namespace tdvi {

/// A ready-to-run problem: model, initial data, declared symmetry generators,
/// and (when available in closed form) the exact solution.
struct ProblemSpec {
  LagrangianModel model;
  double t0 = 0.0;
  Vector q0;
  Vector v0;
  double h0 = 0.1;
  std::vector<SymmetryGenerator> generators;
  std::function<StatePoint(double t)> exact_solution;  // nullable
  std::string notes;
};

/// Names of the builtin problems, in listing order.
[[nodiscard]] std::vector<std::string> builtin_names();

/// Constructs a builtin problem by name. `overrides` accepts the problem's
/// parameter keys (scalars as plain numbers, q0/v0 as comma-separated lists);
/// unknown names raise UnknownProblem, unknown or malformed parameters raise
/// ValidationError.
[[nodiscard]] ProblemSpec builtin(const std::string& name,
                                  const std::map<std::string, std::string>& overrides = {});

/// Scalar potential V(t, x) with analytic partials, for the 1D reference
/// scheme below.
struct Potential1D {
  std::function<double(double t, double x)> value;
  std::function<double(double t, double x)> d_t;
  std::function<double(double t, double x)> d_x;
};

/// Independent hand-coded residual of the classical midpoint update for a 1D
/// particle with L = (m/2) v^2 - V(t, x), in textbook force-balance form:
///   [0]: m (v_k - v_{k-1}) + (1/2) [h_k Vx(mid_k) + h_{k-1} Vx(mid_{k-1})]
///   [1]: E(mid_k) - E(mid_{k-1}) - (1/2) [h_k Vt(mid_k) + h_{k-1} Vt(mid_{k-1})]
/// with E(t, x, v) = (m/2) v^2 + V(t, x) evaluated at segment midpoints.
/// Conventions relative to the generic residual (verified by the tests):
/// component [0] equals MINUS the del_residual position entry, and component
/// [1] equals h_k times the energy-form residual, exactly.
[[nodiscard]] Eigen::Vector2d forced_particle_reference_residual(const Potential1D& V, double mass,
                                                                 const Window& w);

}  // namespace tdvi
