#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "geometry.hpp"

namespace flockkit {

struct ParticleEnsemble {
  Domain domain = Domain::free_space(1);
  Matrix q;  // N x d
  Matrix p;  // N x d

  // Validates shapes and finiteness; torus positions are wrapped into [0, D).
  static ParticleEnsemble make(const Domain& domain, Matrix q, Matrix p);

  int size() const { return static_cast<int>(q.rows()); }
  int dim() const { return domain.dim(); }
};

struct Plain {
  bool operator==(const Plain&) const = default;
};
struct Regularized {
  double epsilon = 0.1;
  bool operator==(const Regularized&) const = default;
};
using DynamicsMode = std::variant<Plain, Regularized>;

// 0 for Plain.
double mode_epsilon(const DynamicsMode& mode);
std::string mode_name(const DynamicsMode& mode);
void validate_mode(const DynamicsMode& mode);

struct MetricsRecord {
  double t = 0.0;
  double dist_to_manifold = 0.0;
  Vector mean_velocity;
  double second_moment = 0.0;  // (1/N) sum |p_i|^2
  std::optional<bool> connected;
  std::optional<double> spectral_gap;
  std::optional<bool> flock;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ParticleEnsemble> states;
  std::vector<MetricsRecord> metrics;

  int frames() const { return static_cast<int>(times.size()); }
};

struct IntegrateOptions {
  int save_every = 1;
  // Called after every step (and once for the initial state) with the step index.
  std::function<void(int, double, const ParticleEnsemble&)> observer;
};

// dq = p, dp_i = sum_j a_ij (p_j - p_i).
void rhs(const ParticleEnsemble& state, const Potential& potential, const DynamicsMode& mode,
         Matrix& dq, Matrix& dp);

// Alignment part only, for positions q and velocities p.
void alignment(const Domain& domain, const Matrix& q, const Matrix& p, const Potential& potential,
               double epsilon, Matrix& dp);

Trajectory integrate(const ParticleEnsemble& w0, const Potential& potential,
                     const DynamicsMode& mode, double T, double dt,
                     const IntegrateOptions& options = {});

// 1e-3 * (interaction range / max initial speed).
double default_time_step(const Potential& potential, const ParticleEnsemble& w0);

Matrix barycenter_project(const Matrix& p);
Vector mean_row(const Matrix& p);
double dist_to_manifold(const Matrix& p);
inline double dist_to_manifold(const ParticleEnsemble& s) { return dist_to_manifold(s.p); }

MetricsRecord basic_metrics(double t, const ParticleEnsemble& s);

struct BallReport {
  double max_speed = 0.0;
  double radius = 0.0;
  bool violated = false;
};
BallReport check_velocity_ball(const Trajectory& traj, double r, double tol = 1e-9);

struct MeanBallReport {
  double max_deviation = 0.0;       // max_t |p(t) - Omega p(0)|
  double max_manifold_dist = 0.0;   // max_t dist(w(t), I)
  double epsilon = 0.0;
  bool deviation_violated = false;  // > eps + tol
  bool neighborhood_violated = false;  // > 2 eps + tol
};
MeanBallReport check_mean_velocity_ball(const Trajectory& traj, double epsilon, double tol = 1e-9);

}  // namespace flockkit
