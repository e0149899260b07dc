#pragma once

#include "geometry.hpp"

namespace flockkit {

// Cyclic Jacobi for a symmetric matrix. On return `values` holds the
// eigenvalues in descending order and the columns of `vectors` the matching
// orthonormal eigenvectors. Throws a numerical error if the sweeps stall.
void jacobi_eigen(const Matrix& a, Vector& values, Matrix& vectors, int max_sweeps = 100);

}  // namespace flockkit
