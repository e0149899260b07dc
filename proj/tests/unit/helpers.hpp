#pragma once

#include <doctest.h>

#include "dynamics.hpp"
#include "rng.hpp"

namespace fk_test {

using namespace flockkit;

inline Matrix random_matrix(Rng& rng, int n, int d, double lo, double hi) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) m(i, c) = uniform(rng, lo, hi);
  return m;
}

inline Matrix random_ball(Rng& rng, int n, int d, double r) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) uniform_in_ball(rng, d, r, m.row(i).data());
  return m;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace fk_test
