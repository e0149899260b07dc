#include "assignment.hpp"

#include <limits>

namespace flockkit {

std::vector<int> solve_assignment(const Matrix& cost, double* total) {
  const int n = static_cast<int>(cost.rows());
  require(cost.cols() == n, ErrorKind::Input, "assignment: cost matrix must be square");
  require(cost.allFinite(), ErrorKind::Input, "assignment: non-finite cost");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based rows/columns; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      const double* row = cost.row(i0 - 1).data();
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n);
  for (int j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  if (total) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += cost(i, assignment[i]);
    *total = s;
  }
  return assignment;
}

}  // namespace flockkit
