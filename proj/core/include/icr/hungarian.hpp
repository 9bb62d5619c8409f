#pragma once

#include <vector>

#include "icr/matrix.hpp"

namespace icr {

struct Assignment {
  std::vector<int> row_to_col;  // -1 for unassigned rows
  std::vector<int> col_to_row;  // -1 for unassigned columns
  double total_cost = 0.0;      // sum over assigned real pairs
};

/// Minimum-cost assignment (Kuhn-Munkres with potentials, O(n^3)).
///
/// Rectangular inputs are padded to square with `pad_cost`; padded pairs are
/// dropped from the result, leaving max(rows, cols) - min(rows, cols)
/// entries unassigned. Costs must be finite.
Assignment solve_assignment(const MatrixD& cost, double pad_cost = 1e6);

}  // namespace icr
