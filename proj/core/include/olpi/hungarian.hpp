#pragma once

#include <vector>

namespace olpi {

struct AssignmentResult {
  std::vector<int> assignment;  // assignment[row] = column
  double cost = 0.0;            // sum of cost[row][assignment[row]]
};

// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
// potentials, O(n^3)). The optimal value is unique even when the matching is
// not. Throws on non-square or non-finite input.
AssignmentResult hungarian_2d_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace olpi
