#include "tdvi/types.hpp"

#include <cmath>
#include <sstream>

#include "tdvi/errors.hpp"

namespace tdvi {

namespace {

bool all_finite(const Vector& v) {
  return v.allFinite();
}

[[noreturn]] void throw_non_monotone(double t0, double t1) {
  std::ostringstream os;
  os << "times must increase strictly: t0=" << t0 << ", t1=" << t1;
  throw NonMonotoneTime(os.str());
}

}  // namespace

void SegmentState::validate() const {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !all_finite(q0) || !all_finite(q1)) {
    throw EvaluationError("segment contains non-finite entries");
  }
  if (q0.size() != q1.size()) {
    throw EvaluationError("segment endpoint dimensions differ");
  }
  if (!(t1 > t0)) {
    throw_non_monotone(t0, t1);
  }
}

Window Window::join(const SegmentState& a, const SegmentState& b) {
  Window w;
  w.t_prev = a.t0;
  w.q_prev = a.q0;
  w.t_cur = a.t1;
  w.q_cur = a.q1;
  w.t_next = b.t1;
  w.q_next = b.q1;
  return w;
}

void Window::validate() const {
  prev_segment().validate();
  next_segment().validate();
}

std::string_view to_string(StepMode mode) noexcept {
  switch (mode) {
    case StepMode::Adaptive:
      return "adaptive";
    case StepMode::Fixed:
      return "fixed";
    case StepMode::Kmo:
      return "kmo";
  }
  return "unknown";
}

}  // namespace tdvi
