#include "icr/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace icr {

Assignment solve_assignment(const MatrixD& cost, double pad_cost) {
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  Assignment out;
  out.row_to_col.assign(rows, -1);
  out.col_to_row.assign(cols, -1);
  if (rows == 0 || cols == 0) return out;
  for (double c : cost.data()) {
    if (!std::isfinite(c)) throw InvalidArgument("assignment costs must be finite");
  }

  const std::size_t n = std::max(rows, cols);
  const auto at = [&](std::size_t i, std::size_t j) {
    return (i < rows && j < cols) ? cost(i, j) : pad_cost;
  };

  // 1-based potentials; p[j] is the row matched to column j, 0 = free.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j];
    if (i == 0 || i - 1 >= rows || j - 1 >= cols) continue;
    out.row_to_col[i - 1] = static_cast<int>(j - 1);
    out.col_to_row[j - 1] = static_cast<int>(i - 1);
    out.total_cost += cost(i - 1, j - 1);
  }
  return out;
}

}  // namespace icr
