#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace unifactor {

/// Diagnostics shared by the iterative solvers.
struct FitReport {
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
  /// Terminal step size (direct search) or the stopping tolerance in force.
  double final_tolerance = 0.0;
  std::size_t evaluations = 0;
  /// Why the loop ended, e.g. "tolerance", "max_iters", "loewner", "budget".
  std::string stop_reason;
  std::vector<std::string> warnings;
};

}  // namespace unifactor
