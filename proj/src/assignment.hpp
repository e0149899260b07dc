#pragma once

#include <vector>

#include "geometry.hpp"

namespace flockkit {

// Minimum-cost perfect matching of a square cost matrix (Hungarian method with
// dual potentials, O(n^3)). Returns assignment[row] = column.
std::vector<int> solve_assignment(const Matrix& cost, double* total = nullptr);

}  // namespace flockkit
