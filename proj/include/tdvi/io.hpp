#pragma once

#include <iosfwd>
#include <string>

#include "tdvi/trajectory.hpp"

namespace tdvi {

/// Writes one CSV row per segment, columns in fixed order:
///   k, t, q_1..q_n, h, E_d, energy_residual, J_<label> per generator,
///   newton_iters, final_residual
/// with a header row. (t, q) is the segment's left endpoint. Floats carry 17
/// significant digits, which round-trips double precision losslessly, so
/// identical trajectories serialize bit-identically.
void emit_csv(const Trajectory& traj, std::ostream& out);

/// Writes a JSON object mirroring the CSV fields row by row, plus the final
/// trajectory point, boundary_energies, and failure (null when absent).
/// Numbers use shortest-round-trip formatting, also lossless.
void emit_json(const Trajectory& traj, std::ostream& out);

/// Dispatches on format ("csv" | "json"; anything else raises
/// ValidationError). A sink in a failed state afterwards raises
/// std::ios_base::failure.
void emit(const Trajectory& traj, const std::string& format, std::ostream& out);

}  // namespace tdvi
