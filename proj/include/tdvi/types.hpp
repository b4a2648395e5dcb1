#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <string_view>

namespace tdvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of extended configuration space: time paired with configuration.
struct ExtendedPoint {
  double t = 0.0;
  Vector q;
};

/// One segment of a discrete trajectory. Invariants: t1 > t0 strictly, all
/// entries finite, q0 and q1 of equal dimension. `validate()` enforces them.
struct SegmentState {
  double t0 = 0.0;
  Vector q0;
  double t1 = 0.0;
  Vector q1;

  [[nodiscard]] double h() const noexcept { return t1 - t0; }
  [[nodiscard]] ExtendedPoint left() const { return {t0, q0}; }
  [[nodiscard]] ExtendedPoint right() const { return {t1, q1}; }
  void validate() const;
};

/// Three consecutive trajectory points: the stencil of the two-step equations.
struct Window {
  double t_prev = 0.0;
  Vector q_prev;
  double t_cur = 0.0;
  Vector q_cur;
  double t_next = 0.0;
  Vector q_next;

  [[nodiscard]] SegmentState prev_segment() const { return {t_prev, q_prev, t_cur, q_cur}; }
  [[nodiscard]] SegmentState next_segment() const { return {t_cur, q_cur, t_next, q_next}; }
  [[nodiscard]] double h_prev() const noexcept { return t_cur - t_prev; }
  [[nodiscard]] double h_next() const noexcept { return t_next - t_cur; }
  /// Joins two segments sharing their middle point (not re-checked here).
  static Window join(const SegmentState& a, const SegmentState& b);
  void validate() const;
};

/// Infinitesimal generator of a one-parameter symmetry acting diagonally on
/// extended space: (t, q) -> (t + eps * xi_time, q + eps * xi_config).
struct SymmetryGenerator {
  std::function<double(double t, const Vector& q)> xi_time;
  std::function<Vector(double t, const Vector& q)> xi_config;
  std::string label;
};

enum class StepMode { Adaptive, Fixed, Kmo };

[[nodiscard]] std::string_view to_string(StepMode mode) noexcept;

}  // namespace tdvi
