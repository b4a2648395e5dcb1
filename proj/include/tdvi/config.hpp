#pragma once

#include <map>
#include <string>
#include <vector>

#include "tdvi/problems.hpp"
#include "tdvi/stepper.hpp"
#include "tdvi/types.hpp"

namespace tdvi {

/// A fully described run: problem selection, step mode, solver knobs,
/// diagnostic options, and the output sink.
struct RunConfig {
  std::string problem_name;
  std::map<std::string, std::string> problem_params;
  StepMode mode = StepMode::Fixed;
  int n_steps = 100;
  SolverConfig solver;
  /// Segment sampling period for the symplecticity report (0 disables it).
  int symplecticity_every = 10;
  /// Generator labels to record; empty means every declared generator.
  std::vector<std::string> generators;
  /// Machine-readable output file; empty means console summary only.
  std::string output_path;
  std::string output_format = "csv";  // "csv" | "json"
};

/// Parses the line-oriented key=value format (dotted prefixes for sections,
/// '#' comments, later assignments override earlier ones):
///
///   problem=harmonic_oscillator   # required
///   problem.k=2.0                 # problem parameter overrides
///   mode=fixed                    # adaptive | fixed | kmo
///   n_steps=100
///   solver.newton_tol=1e-10       # also: max_newton_iters, fd_eps, min_h,
///                                 #       max_h, damping
///   diagnostics.symplecticity_every=10
///   diagnostics.generators=rotation,time_translation
///   output.path=run.csv
///   output.format=csv             # csv | json
///
/// Malformed lines raise ParseError with the 1-based line number; unknown
/// keys, bad values, out-of-range numbers, a missing problem, unresolvable
/// generator labels, and kmo mode on a non-autonomous problem all raise
/// ValidationError naming the offending key.
[[nodiscard]] RunConfig parse_config(const std::string& text);

/// Builds the problem the config names, applies its parameter overrides, and
/// keeps only the selected generators (in config order when a selection is
/// given). parse_config has already proven this cannot fail for a config it
/// returned.
[[nodiscard]] ProblemSpec resolve_problem(const RunConfig& cfg);

}  // namespace tdvi
