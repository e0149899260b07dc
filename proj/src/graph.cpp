#include "graph.hpp"

#include <deque>

namespace flockkit {

CommGraph build_graph(const Matrix& q, const Potential& potential, double threshold) {
  require(threshold >= 0.0, ErrorKind::Input, "graph threshold must be non-negative");
  const Domain& dom = potential.domain();
  require(q.cols() == dom.dim(), ErrorKind::Input, "graph: dimension mismatch");
  CommGraph g;
  g.n = static_cast<int>(q.rows());
  g.adjacency.assign(static_cast<std::size_t>(g.n) * g.n, 0);
  std::array<double, kMaxDim> r{};
  for (int i = 0; i < g.n; ++i) {
    g.adjacency[static_cast<std::size_t>(i) * g.n + i] = potential.value(r.data()) > threshold;
    for (int j = i + 1; j < g.n; ++j) {
      dom.displacement(q.row(i).data(), q.row(j).data(), r.data());
      const unsigned char e = potential.value(r.data()) > threshold;
      g.adjacency[static_cast<std::size_t>(i) * g.n + j] = e;
      g.adjacency[static_cast<std::size_t>(j) * g.n + i] = e;
    }
  }
  return g;
}

bool is_connected(const CommGraph& g) {
  if (g.n <= 1) return true;
  std::vector<bool> seen(g.n, false);
  std::deque<int> queue{0};
  seen[0] = true;
  int count = 1;
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int j = 0; j < g.n; ++j) {
      if (j != i && !seen[j] && g.edge(i, j)) {
        seen[j] = true;
        ++count;
        queue.push_back(j);
      }
    }
  }
  return count == g.n;
}

FlockReport detect_flocking(const Trajectory& traj, const Potential& potential, double epsilon,
                            std::optional<double> window, double threshold) {
  require(epsilon > 0.0, ErrorKind::Input, "flocking radius must be positive");
  require(traj.frames() >= 1, ErrorKind::Input, "flock detection needs at least one frame");
  FlockReport rep;
  rep.epsilon = epsilon;
  const double t0 = traj.times.front(), t1 = traj.times.back();
  rep.window = window.value_or(0.2 * (t1 - t0));
  require(rep.window >= 0.0 && rep.window <= t1 - t0 + 1e-12, ErrorKind::Input,
          "flocking window must lie within the trajectory span");

  const Vector v = mean_row(traj.states.back().p);
  const int frames = traj.frames();
  rep.clustered.resize(frames);
  rep.connected.resize(frames);
  for (int k = 0; k < frames; ++k) {
    const auto& s = traj.states[k];
    rep.clustered[k] = (s.p.rowwise() - v.transpose()).rowwise().norm().maxCoeff() < epsilon;
    rep.connected[k] = is_connected(build_graph(s.q, potential, threshold));
  }
  // Earliest frame from which both clauses hold up to the end.
  int start = frames;
  while (start > 0 && rep.clustered[start - 1] && rep.connected[start - 1]) --start;
  const double window_start = t1 - rep.window;
  if (start < frames && traj.times[start] <= window_start + 1e-12) {
    rep.flocking = true;
    rep.v = v;
    rep.t_detect = traj.times[start];
  }
  return rep;
}

}  // namespace flockkit
