#pragma once

#include <optional>
#include <vector>

#include "dynamics.hpp"

namespace flockkit {

// Edge i~j iff U(q_i - q_j) > threshold. Self-loops are stored but ignored.
struct CommGraph {
  int n = 0;
  std::vector<unsigned char> adjacency;  // row-major n x n

  bool edge(int i, int j) const { return adjacency[static_cast<std::size_t>(i) * n + j] != 0; }
};

CommGraph build_graph(const Matrix& q, const Potential& potential, double threshold = 0.0);
bool is_connected(const CommGraph& g);

struct FlockReport {
  bool flocking = false;
  std::optional<Vector> v;
  std::optional<double> t_detect;
  double window = 0.0;
  double epsilon = 0.0;
  // Per-frame verdicts of the two clauses, aligned with the trajectory frames.
  std::vector<bool> clustered;
  std::vector<bool> connected;
};

// v is the terminal mean velocity; window defaults to 20% of the trajectory span.
FlockReport detect_flocking(const Trajectory& traj, const Potential& potential, double epsilon,
                            std::optional<double> window = std::nullopt,
                            double threshold = 0.0);

}  // namespace flockkit
