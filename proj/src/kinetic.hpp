#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dynamics.hpp"
#include "rng.hpp"

namespace flockkit {

// Uniformly weighted atoms (x_j, v_j) with |v_j| <= 1.
struct PointCloud {
  Domain domain = Domain::free_space(1);
  Matrix x;
  Matrix v;

  static PointCloud make(const Domain& domain, Matrix x, Matrix v);
  int size() const { return static_cast<int>(x.rows()); }
  int dim() const { return domain.dim(); }
};

enum class Interpolation { ConstantLeft, Linear, CubicHermite };

// Regularized mean-field increment. Literal: A/(U*nu + eps) - v, which tends
// to -v when the overlap vanishes. Weighted: int U (u - v) dnu / (U*nu + eps),
// which tends to 0 and has velocity divergence -d h^eps.
enum class RegularizedConvention { Literal, Weighted };

struct FieldSpec {
  Potential potential;
  DynamicsMode mode = Plain{};
  RegularizedConvention convention = RegularizedConvention::Literal;

  // Plain mode needs a torus potential with positive infimum.
  void validate() const;
  double epsilon() const { return mode_epsilon(mode); }
  bool plain() const { return std::holds_alternative<Plain>(mode); }
  const Domain& domain() const { return potential.domain(); }
};

// t -> mu_t sampled on a grid. rate_x / rate_v hold the time derivatives of
// each atom at each grid time; they are only read by CubicHermite.
struct MeasureCurve {
  std::vector<double> grid;
  std::vector<PointCloud> clouds;
  std::vector<Matrix> rate_x;
  std::vector<Matrix> rate_v;
  Interpolation interpolation = Interpolation::ConstantLeft;

  int frames() const { return static_cast<int>(grid.size()); }
  void validate() const;
  // Interpolated atoms at time t (positions are lifts, not wrapped).
  void sample(double t, Matrix& x, Matrix& v) const;
  // Constant-in-time curve.
  static MeasureCurve constant(const PointCloud& cloud, const std::vector<double>& grid,
                               Interpolation interpolation);
};

struct FieldValue {
  Vector m;            // M or M_eps
  double conv = 0.0;   // (U * nu)(x)
  double h_eps = 1.0;  // conv / (conv + eps); 1 in plain mode
};

FieldValue mean_field(const double* x, const double* v, const Matrix& ys, const Matrix& us,
                      const FieldSpec& field);
Vector mean_field_M(std::span<const double> x, std::span<const double> v, const PointCloud& cloud,
                    const FieldSpec& field);
// A(x, nu) = int U(x - y) u dnu / (U * nu + eps).
Vector alignment_average(const double* x, const Matrix& ys, const Matrix& us,
                         const FieldSpec& field);

struct LipschitzProbe {
  std::string lemma;  // "le2", "le3" or "le5"
  double empirical = 0.0;
  double constant = 0.0;
  bool holds = false;
};

// Constant of the Lipschitz lemma matching the field's hypotheses.
LipschitzProbe lipschitz_constant(const FieldSpec& field);
LipschitzProbe lipschitz_probe(const FieldSpec& field, const PointCloud& cloud, int samples,
                               Rng& rng);

// Batch of phase points flowed along a frozen curve.
struct FlowBatch {
  Matrix x, v;
  Matrix m;           // dv/dt at the current state, filled by flow_batch
  Vector h_integral;  // int h^eps ds along each path (trapezoid on the step grid)
  double t = 0.0;
};

// Integrates from batch.t to t_final with steps of at most dt; the observer sees
// every step (after updating) including the start.
void flow_batch(FlowBatch& batch, const MeasureCurve& curve, const FieldSpec& field,
                double t_final, double dt,
                const std::function<void(const FlowBatch&, const Vector& h_now)>& observer = {});

struct CharacteristicPath {
  std::vector<double> times;
  Matrix x, v;  // one row per time
  Vector h_integral;
};

CharacteristicPath flow_characteristics(std::span<const double> x0, std::span<const double> v0,
                                        const MeasureCurve& curve, const FieldSpec& field,
                                        double t0, double t_final, double dt);

// mu_0 pushed along the characteristics of `driver`, sampled on the driver's grid.
MeasureCurve push_forward(const PointCloud& mu0, const MeasureCurve& driver,
                          const FieldSpec& field, double dt);

// Self-consistent evolution of the cloud (the N-particle system in mean-field
// normalization), recorded every `stride` steps.
MeasureCurve evolve_cloud(const PointCloud& mu0, const FieldSpec& field, double T, double dt,
                          int stride, Interpolation interpolation);

struct TransportResult {
  double w_hat = 0.0;  // min(W1, 1)
  double w1 = 0.0;
  int n = 0;
};

// Optimal assignment W1 under sqrt(|dx|^2 + |dv|^2) (min-image in x), clipped at
// 1. Unequal sizes subsample the larger cloud; above `cap` both are subsampled.
TransportResult transport_distance(const PointCloud& a, const PointCloud& b,
                                   std::uint64_t seed = 0, int cap = 2000);

using CloudSampler = std::function<PointCloud(int, Rng&)>;

struct ConvergenceRow {
  int n = 0;
  int seed = 0;
  double t = 0.0;
  double w_hat = 0.0;
};
struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::vector<int> sizes;
  std::vector<double> medians;
  bool strictly_decreasing = false;
};

ConvergenceTable mean_field_convergence(const CloudSampler& sampler,
                                        const std::vector<int>& sizes, int n_ref, double t_eval,
                                        const FieldSpec& field, int seeds, double dt,
                                        std::uint64_t global_seed);

// c0 = 2d (sup|grad U| + sup U), a = inf U (plain) or eps, c = L + c0/a.
struct GronwallConstants {
  double lipschitz = 0.0;
  double c0 = 0.0;
  double a = 0.0;
  double c = 0.0;
};
GronwallConstants gronwall_constants(const FieldSpec& field);

struct StabilityRow {
  double t = 0.0;
  double w_hat = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
};
struct StabilityReport {
  std::vector<StabilityRow> rows;
  GronwallConstants constants;
  double tolerance = 0.01;
  bool holds = false;
};

StabilityReport stability_bound_check(const PointCloud& mu0a, const PointCloud& mu0b,
                                      const FieldSpec& field, double T, double dt, int stride,
                                      std::uint64_t seed, double tolerance = 0.01);

struct PicardStep {
  int iteration = 0;
  double d_alpha = 0.0;
  std::optional<double> ratio;
};
struct PicardReport {
  std::vector<PicardStep> steps;
  std::vector<MeasureCurve> curves;
  MeasureCurve direct;
  std::vector<double> final_vs_direct;  // W_hat per grid time
  double alpha = 0.0;
  double lipschitz = 0.0;
  double bound = 0.0;  // c0 / (a (alpha - L))
  bool converged = false;
};

// alpha <= 0 selects 2L.
PicardReport picard_iterate(const PointCloud& mu0, const FieldSpec& field, double T, int grid_k,
                            int iters, double dt, double alpha, Interpolation interpolation,
                            std::uint64_t seed);

}  // namespace flockkit
