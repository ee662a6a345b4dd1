#pragma once

#include <string>
#include <vector>

#include "lggm/detail/matrix_util.hpp"
#include "lggm/stack.hpp"

namespace lggm {

/// Unordered nonzero off-diagonal pairs summed over all K+1 layers.
inline long nonzero_pairs(const PrecisionStack& stack) {
  long count = 0;
  for (const auto& w : stack.omegas) count += detail::nonzero_pairs(w);
  return count;
}

/// Result of one estimator run. edge_count uses the symmetric-count
/// convention (each nonzero unordered pair counted twice).
struct FitReport {
  PrecisionStack estimate;
  std::vector<double> objective_trace;  // penalized log-likelihood per M-step
  int iterations = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
  long edge_count = 0;
  std::vector<std::string> warnings;
};

inline long symmetric_edge_count(const PrecisionStack& stack) {
  return 2 * nonzero_pairs(stack);
}

}  // namespace lggm
