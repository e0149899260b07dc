#pragma once

#include <vector>

#include "kinetic.hpp"

namespace flockkit {

// f0(x, v) = D^-d on the torus times an isotropic Gaussian of width sigma
// truncated to |v| <= vmax.
struct ReferenceDensity {
  Domain domain = Domain::torus(1, 1.0);
  double sigma = 0.25;
  double vmax = 0.95;
  double log_norm_v = 0.0;  // log of the truncated Gaussian's normalizer
  double entropy_v = 0.0;

  static ReferenceDensity make(const Domain& domain, double sigma = 0.25, double vmax = 0.95);
  PointCloud sample(int m, Rng& rng) const;
  double log_density(const double* x, const double* v) const;
  // -int f0 log f0
  double entropy() const;
};

struct JacobianReport {
  double t = 0.0;
  double det_fd = 1.0;
  double det_theory = 1.0;
  double rel_err = 0.0;
  double h_integral = 0.0;  // int h^eps along the base path
};

// Central-difference Jacobian of w -> T_{t,t0} w over the 2d phase coordinates.
JacobianReport flow_jacobian(std::span<const double> x, std::span<const double> v,
                             const MeasureCurve& curve, const FieldSpec& field, double t,
                             double fd_step, double dt);

// Kozachenko-Leonenko estimate of -int f log f from the k-th neighbour
// distances in phase space (min-image in x). Velocities are measured in units
// stretched by v_scale, and the estimate is mapped back by -d log(v_scale).
double knn_entropy(const Matrix& x, const Matrix& v, const Domain& domain, int k = 4,
                   double v_scale = 1.0);

// Stretch that gives the velocity block the spread of a uniform torus coordinate.
double block_velocity_scale(const Matrix& v, const Domain& domain);

struct EntropyRow {
  double t = 0.0;
  double h_transport = 0.0;
  double h_knn = 0.0;
  double mean_h = 1.0;  // sample mean of h^eps at time t
};

struct EntropyTable {
  std::vector<EntropyRow> rows;
  double h0 = 0.0;
  double slope_transport = 0.0;
  double slope_knn = 0.0;
  // max over interior steps of |slope_fd - (-d mean h)| / |d mean h|
  double max_rate_rel_err = 0.0;
};

EntropyTable entropy_decay_check(const ReferenceDensity& f0, int samples,
                                 const MeasureCurve& curve, const FieldSpec& field,
                                 const std::vector<double>& times, double dt, std::uint64_t seed,
                                 int k = 4, bool block_scaling = true);

struct MomentRow {
  double t = 0.0;
  Vector mean_x;  // of unwrapped positions
  Vector mean_v;
  double second_moment = 0.0;
  double identity_residual = 0.0;  // |mean_x(t) - mean_x(0) - int mean_v|
};

struct MomentReport {
  std::vector<MomentRow> rows;
  double max_identity_residual = 0.0;
  double identity_tolerance = 0.0;
  bool identity_ok = true;
  double max_increase = 0.0;  // largest frame-to-frame growth of the second moment
  double increase_tolerance = 1e-9;
  bool monotone_ok = true;
};

// Frames must be equally spaced in time; quadrature is fourth order.
MomentReport moment_diagnostics(const std::vector<double>& times,
                                const std::vector<const Matrix*>& q,
                                const std::vector<const Matrix*>& p, const Domain& domain);
MomentReport moment_diagnostics(const Trajectory& traj);
MomentReport moment_diagnostics(const MeasureCurve& curve);

// Least-squares slope, intercept and R^2.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace flockkit
