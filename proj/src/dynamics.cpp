#include "dynamics.hpp"

#include <string>

namespace flockkit {

ParticleEnsemble ParticleEnsemble::make(const Domain& domain, Matrix q, Matrix p) {
  const int d = domain.dim();
  require(q.cols() == d && p.cols() == d, ErrorKind::Input,
          "ensemble: positions and velocities need " + std::to_string(d) + " columns");
  require(q.rows() == p.rows(), ErrorKind::Input,
          "ensemble: positions and velocities differ in particle count");
  require(q.rows() >= 1, ErrorKind::Input, "ensemble: at least one particle is required");
  require(q.allFinite() && p.allFinite(), ErrorKind::Input, "ensemble: non-finite state");
  for (Eigen::Index i = 0; i < q.rows(); ++i) domain.wrap(q.row(i).data());
  return ParticleEnsemble{domain, std::move(q), std::move(p)};
}

double mode_epsilon(const DynamicsMode& mode) {
  if (const auto* r = std::get_if<Regularized>(&mode)) return r->epsilon;
  return 0.0;
}

std::string mode_name(const DynamicsMode& mode) {
  return std::holds_alternative<Plain>(mode) ? "plain" : "regularized";
}

void validate_mode(const DynamicsMode& mode) {
  if (const auto* r = std::get_if<Regularized>(&mode))
    require(std::isfinite(r->epsilon) && r->epsilon > 0.0, ErrorKind::Config,
            "regularized mode needs epsilon > 0");
}

namespace {

template <class K>
void alignment_kernel(const K& kernel, const Domain& domain, const Matrix& q, const Matrix& p,
                      double epsilon, Matrix& dp) {
  const int n = static_cast<int>(q.rows()), d = domain.dim();
  std::array<double, kMaxDim> r{};
  const double self = kernel.value(r.data());
  Vector denom = Vector::Constant(n, self);
  dp.setZero(n, d);
  for (int i = 0; i < n; ++i) {
    const double* qi = q.row(i).data();
    const double* pi = p.row(i).data();
    for (int j = i + 1; j < n; ++j) {
      domain.displacement(qi, q.row(j).data(), r.data());
      const double u = kernel.value(r.data());
      if (u == 0.0) continue;
      denom[i] += u;
      denom[j] += u;
      const double* pj = p.row(j).data();
      for (int k = 0; k < d; ++k) {
        const double diff = pj[k] - pi[k];
        dp(i, k) += u * diff;
        dp(j, k) -= u * diff;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (epsilon == 0.0 && !(denom[i] >= 1e-30))
      fail(ErrorKind::Numerical, "interaction denominator underflow at particle " +
                                     std::to_string(i) + "; check the potential parameters");
    dp.row(i) /= denom[i] + epsilon;
  }
}

void check_finite(const Matrix& m, const char* what) {
  require(m.allFinite(), ErrorKind::Input, std::string("non-finite ") + what);
}

}  // namespace

void alignment(const Domain& domain, const Matrix& q, const Matrix& p, const Potential& potential,
               double epsilon, Matrix& dp) {
  potential.visit(
      [&](const auto& kernel) { alignment_kernel(kernel, domain, q, p, epsilon, dp); });
}

void rhs(const ParticleEnsemble& state, const Potential& potential, const DynamicsMode& mode,
         Matrix& dq, Matrix& dp) {
  require(potential.domain() == state.domain, ErrorKind::Input,
          "rhs: potential and ensemble live on different domains");
  check_finite(state.q, "positions");
  check_finite(state.p, "velocities");
  dq = state.p;
  alignment(state.domain, state.q, state.p, potential, mode_epsilon(mode), dp);
}

// Shifted by the first row, so identical rows give that row back exactly.
Vector mean_row(const Matrix& p) {
  if (p.rows() == 0) return Vector::Zero(p.cols());
  const Eigen::RowVectorXd base = p.row(0);
  return (base + (p.rowwise() - base).colwise().mean()).transpose();
}

Matrix barycenter_project(const Matrix& p) {
  require(p.rows() >= 1, ErrorKind::Input, "barycenter of an empty ensemble");
  const Vector m = mean_row(p);
  Matrix out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) out.row(i) = m.transpose();
  return out;
}

double dist_to_manifold(const Matrix& p) {
  const Vector m = mean_row(p);
  return (p.rowwise() - m.transpose()).norm();
}

MetricsRecord basic_metrics(double t, const ParticleEnsemble& s) {
  MetricsRecord m;
  m.t = t;
  m.dist_to_manifold = dist_to_manifold(s.p);
  m.mean_velocity = mean_row(s.p);
  m.second_moment = s.p.squaredNorm() / s.size();
  return m;
}

double default_time_step(const Potential& potential, const ParticleEnsemble& w0) {
  const double speed = w0.p.rowwise().norm().maxCoeff();
  const double range = potential.range();
  return speed > 0.0 ? 1e-3 * range / speed : 1e-3 * range;
}

Trajectory integrate(const ParticleEnsemble& w0, const Potential& potential,
                     const DynamicsMode& mode, double T, double dt,
                     const IntegrateOptions& options) {
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::Input, "dt must be positive");
  require(std::isfinite(T) && T >= 0.0, ErrorKind::Input, "T must be non-negative");
  require(options.save_every >= 1, ErrorKind::Input, "save_every must be at least 1");
  require(potential.domain() == w0.domain, ErrorKind::Input,
          "integrate: potential and ensemble live on different domains");
  validate_mode(mode);
  check_finite(w0.q, "positions");
  check_finite(w0.p, "velocities");

  const long steps = T == 0.0 ? 0 : static_cast<long>(std::ceil(T / dt - 1e-9));
  const double h = steps == 0 ? 0.0 : T / static_cast<double>(steps);
  const double eps = mode_epsilon(mode);
  const Domain& dom = w0.domain;
  const int n = w0.size(), d = w0.dim();

  Trajectory traj;
  ParticleEnsemble s = w0;
  auto save = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    traj.metrics.push_back(basic_metrics(t, s));
  };
  save(0.0);
  if (options.observer) options.observer(0, 0.0, s);

  Matrix k1(n, d), k2(n, d), k3(n, d), k4(n, d), qs(n, d), ps(n, d);
  for (long step = 1; step <= steps; ++step) {
    // Velocities of each stage are the position rates.
    alignment(dom, s.q, s.p, potential, eps, k1);
    qs = s.q + (0.5 * h) * s.p;
    ps = s.p + (0.5 * h) * k1;
    const Matrix v2 = ps;
    alignment(dom, qs, ps, potential, eps, k2);
    qs = s.q + (0.5 * h) * v2;
    ps = s.p + (0.5 * h) * k2;
    const Matrix v3 = ps;
    alignment(dom, qs, ps, potential, eps, k3);
    qs = s.q + h * v3;
    ps = s.p + h * k3;
    const Matrix v4 = ps;
    alignment(dom, qs, ps, potential, eps, k4);
    s.q += (h / 6.0) * (s.p + 2.0 * v2 + 2.0 * v3 + v4);
    s.p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!s.q.allFinite() || !s.p.allFinite())
      fail(ErrorKind::Numerical,
           "integration blew up at step " + std::to_string(step) + " (t = " +
               std::to_string(step * h) + ")");
    for (int i = 0; i < n; ++i) dom.wrap(s.q.row(i).data());
    const double t = step == steps ? T : step * h;
    if (step % options.save_every == 0 || step == steps) save(t);
    if (options.observer) options.observer(static_cast<int>(step), t, s);
  }
  return traj;
}

BallReport check_velocity_ball(const Trajectory& traj, double r, double tol) {
  BallReport rep;
  rep.radius = r;
  for (const auto& s : traj.states)
    rep.max_speed = std::max(rep.max_speed, s.p.rowwise().norm().maxCoeff());
  rep.violated = rep.max_speed > r + tol;
  return rep;
}

MeanBallReport check_mean_velocity_ball(const Trajectory& traj, double epsilon, double tol) {
  MeanBallReport rep;
  rep.epsilon = epsilon;
  if (traj.states.empty()) return rep;
  const Vector omega0 = mean_row(traj.states.front().p);
  for (const auto& s : traj.states) {
    rep.max_deviation = std::max(rep.max_deviation, (s.p.rowwise() - omega0.transpose()).norm());
    rep.max_manifold_dist = std::max(rep.max_manifold_dist, dist_to_manifold(s.p));
  }
  rep.deviation_violated = rep.max_deviation > epsilon + tol;
  rep.neighborhood_violated = rep.max_manifold_dist > 2.0 * epsilon + tol;
  return rep;
}

}  // namespace flockkit
