#include "tdvi/trajectory.hpp"

#include <cstddef>

#include "tdvi/errors.hpp"

namespace tdvi {

void Trajectory::validate() const {
  if (points.size() < 2) {
    throw EvaluationError("trajectory needs at least two points");
  }
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    if (!(points[k + 1].t > points[k].t)) {
      throw NonMonotoneTime("trajectory times must increase strictly");
    }
  }
  const auto m = points.size() - 1;
  if (h_series.size() != m || Ed_series.size() != m || energy_residual_series.size() != m ||
      stats_series.size() != m) {
    throw EvaluationError("trajectory series lengths inconsistent with segment count");
  }
  if (momentum_series.size() != generator_labels.size()) {
    throw EvaluationError("momentum series count does not match generator labels");
  }
  for (const auto& series : momentum_series) {
    if (series.size() != m) {
      throw EvaluationError("momentum series length inconsistent with segment count");
    }
  }
}

}  // namespace tdvi
