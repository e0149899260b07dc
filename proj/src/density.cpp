#include "density.hpp"

#include <Eigen/LU>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <numbers>

#include "parallel.hpp"

namespace flockkit {

ReferenceDensity ReferenceDensity::make(const Domain& domain, double sigma, double vmax) {
  require(domain.periodic(), ErrorKind::Config, "reference density: x-marginal needs a torus");
  require(sigma > 0.0 && vmax > 0.0 && vmax <= 1.0, ErrorKind::Config,
          "reference density: need sigma > 0 and 0 < vmax <= 1");
  ReferenceDensity f;
  f.domain = domain;
  f.sigma = sigma;
  f.vmax = vmax;
  const int d = domain.dim();
  const double area = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  boost::math::quadrature::gauss_kronrod<double, 61> rule;
  const double z = area * rule.integrate(
                              [&](double r) { return std::pow(r, d - 1) * std::exp(-r * r * inv); },
                              0.0, vmax, 15, 1e-14);
  const double m2 = area * rule.integrate(
                               [&](double r) { return std::pow(r, d + 1) * std::exp(-r * r * inv); },
                               0.0, vmax, 15, 1e-14) /
                    z;
  f.log_norm_v = std::log(z);
  f.entropy_v = f.log_norm_v + inv * m2;
  return f;
}

PointCloud ReferenceDensity::sample(int m, Rng& rng) const {
  require(m >= 1, ErrorKind::Input, "reference density: sample size must be positive");
  const int d = domain.dim();
  Matrix x(m, d), v(m, d);
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < d; ++c) x(i, c) = uniform(rng, 0.0, domain.side());
    truncated_normal_in_ball(rng, d, sigma, vmax, v.row(i).data());
  }
  return PointCloud::make(domain, std::move(x), std::move(v));
}

double ReferenceDensity::log_density(const double*, const double* v) const {
  const int d = domain.dim();
  double n2 = 0.0;
  for (int c = 0; c < d; ++c) n2 += v[c] * v[c];
  if (n2 > vmax * vmax) return -std::numeric_limits<double>::infinity();
  return -d * std::log(domain.side()) - log_norm_v - n2 / (2.0 * sigma * sigma);
}

double ReferenceDensity::entropy() const {
  return domain.dim() * std::log(domain.side()) + entropy_v;
}

JacobianReport flow_jacobian(std::span<const double> x, std::span<const double> v,
                             const MeasureCurve& curve, const FieldSpec& field, double t,
                             double fd_step, double dt) {
  const Domain& dom = field.domain();
  const int d = dom.dim(), n = 2 * d;
  require(static_cast<int>(x.size()) == d && static_cast<int>(v.size()) == d, ErrorKind::Input,
          "jacobian: dimension mismatch");
  require(fd_step > 0.0, ErrorKind::Input, "jacobian: finite-difference step must be positive");
  curve.validate();
  const double t0 = curve.grid.front();
  require(t >= t0 && t <= curve.grid.back() + 1e-12, ErrorKind::Input,
          "jacobian: t must lie within the curve's grid span");
  JacobianReport rep;
  rep.t = t;
  if (t == t0) return rep;

  // Row 0 is the base point, rows 1 + 2k and 2 + 2k the +/- perturbations.
  FlowBatch b;
  b.x.resize(1 + 2 * n, d);
  b.v.resize(1 + 2 * n, d);
  for (int r = 0; r < 1 + 2 * n; ++r) {
    for (int c = 0; c < d; ++c) {
      b.x(r, c) = x[c];
      b.v(r, c) = v[c];
    }
  }
  for (int k = 0; k < n; ++k) {
    Matrix& target = k < d ? b.x : b.v;
    const int c = k % d;
    target(1 + 2 * k, c) += fd_step;
    target(2 + 2 * k, c) -= fd_step;
  }
  b.t = t0;
  flow_batch(b, curve, field, t, dt);

  Eigen::MatrixXd jac(n, n);
  std::array<double, kMaxDim> dx{};
  for (int k = 0; k < n; ++k) {
    dom.displacement(b.x.row(1 + 2 * k).data(), b.x.row(2 + 2 * k).data(), dx.data());
    for (int c = 0; c < d; ++c) {
      jac(c, k) = dx[c] / (2.0 * fd_step);
      jac(d + c, k) = (b.v(1 + 2 * k, c) - b.v(2 + 2 * k, c)) / (2.0 * fd_step);
    }
  }
  require(jac.allFinite(), ErrorKind::Numerical, "jacobian: non-finite finite differences");
  rep.det_fd = Eigen::PartialPivLU<Eigen::MatrixXd>(jac).determinant();
  require(std::isfinite(rep.det_fd) && rep.det_fd > 0.0, ErrorKind::Numerical,
          "jacobian: finite-difference matrix is singular or inverted; reduce the step h or dt");
  rep.h_integral = b.h_integral[0];
  const bool weighted =
      !field.plain() && field.convention == RegularizedConvention::Weighted;
  rep.det_theory = std::exp(-d * (weighted ? rep.h_integral : t - t0));
  rep.rel_err = std::abs(rep.det_fd - rep.det_theory) / rep.det_theory;
  return rep;
}

double block_velocity_scale(const Matrix& v, const Domain& domain) {
  require(domain.periodic(), ErrorKind::Input, "velocity scaling needs a torus");
  const Vector mean = mean_row(v);
  const double var = (v.rowwise() - mean.transpose()).squaredNorm() / (v.rows() * v.cols());
  require(var > 0.0, ErrorKind::Numerical, "velocity scaling: degenerate velocity sample");
  return domain.side() / std::sqrt(12.0 * var);
}

double knn_entropy(const Matrix& x, const Matrix& v, const Domain& domain, int k,
                   double v_scale) {
  require(v_scale > 0.0, ErrorKind::Input, "knn entropy: velocity scale must be positive");
  const int m = static_cast<int>(x.rows()), d = domain.dim();
  require(k >= 1 && m > k, ErrorKind::Config, "knn entropy: need more samples than neighbours");
  std::vector<double> logs(m);
  parallel_for(m, [&](int i) {
    std::vector<double> best(k, std::numeric_limits<double>::infinity());
    std::array<double, kMaxDim> r{};
    const double* xi = x.row(i).data();
    const double* vi = v.row(i).data();
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      domain.displacement(xi, x.row(j).data(), r.data());
      double s = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dv = v_scale * (vi[c] - v(j, c));
        s += r[c] * r[c] + dv * dv;
      }
      if (s < best[k - 1]) {
        int pos = k - 1;
        while (pos > 0 && best[pos - 1] > s) {
          best[pos] = best[pos - 1];
          --pos;
        }
        best[pos] = s;
      }
    }
    logs[i] = 0.5 * std::log(best[k - 1]);
  });
  const int dim = 2 * d;
  double mean_log = 0.0;
  for (double l : logs) mean_log += l;
  mean_log /= m;
  using boost::math::digamma;
  return digamma(static_cast<double>(m)) - digamma(static_cast<double>(k)) +
         std::log(unit_ball_volume(dim)) + dim * mean_log - d * std::log(v_scale);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::Input,
          "fit: need at least two aligned points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  require(sxx > 0.0, ErrorKind::Input, "fit: abscissae are all equal");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

EntropyTable entropy_decay_check(const ReferenceDensity& f0, int samples,
                                 const MeasureCurve& curve, const FieldSpec& field,
                                 const std::vector<double>& times, double dt, std::uint64_t seed,
                                 int k, bool block_scaling) {
  require(samples >= 100, ErrorKind::Config,
          "entropy: the nearest-neighbour estimator needs at least 100 samples");
  require(!times.empty() && std::is_sorted(times.begin(), times.end()), ErrorKind::Input,
          "entropy: times must be non-empty and sorted");
  require(f0.domain == field.domain(), ErrorKind::Input,
          "entropy: density and potential live on different domains");
  curve.validate();
  require(times.front() >= curve.grid.front() && times.back() <= curve.grid.back() + 1e-12,
          ErrorKind::Input, "entropy: times must lie within the curve's grid span");
  const int d = f0.domain.dim();
  const bool weighted = !field.plain() && field.convention == RegularizedConvention::Weighted;
  Rng rng = make_rng(seed, "entropy.samples");
  const PointCloud cloud = f0.sample(samples, rng);

  EntropyTable table;
  table.h0 = f0.entropy();
  FlowBatch b;
  b.x = cloud.x;
  b.v = cloud.v;
  b.t = curve.grid.front();

  // Transport estimate on every step, for the instantaneous-rate comparison.
  std::vector<double> step_t, step_h, step_rate;
  auto transport = [&](const FlowBatch& s, const Vector& h_now) {
    step_t.push_back(s.t);
    step_h.push_back(table.h0 - d * (weighted ? s.h_integral.mean() : s.t - curve.grid.front()));
    step_rate.push_back(-d * (weighted ? h_now.mean() : 1.0));
  };
  for (double t : times) {
    const bool first = step_t.empty();
    flow_batch(b, curve, field, t, dt, [&](const FlowBatch& s, const Vector& h_now) {
      if (!first && s.t == step_t.back()) return;
      transport(s, h_now);
    });
    EntropyRow row;
    row.t = t;
    row.h_transport = step_h.back();
    row.mean_h = -step_rate.back() / d;
    const double scale = block_scaling ? block_velocity_scale(b.v, f0.domain) : 1.0;
    row.h_knn = knn_entropy(b.x, b.v, f0.domain, k, scale);
    table.rows.push_back(row);
  }
  std::vector<double> ts, ht, hk;
  for (const auto& r : table.rows) {
    ts.push_back(r.t);
    ht.push_back(r.h_transport);
    hk.push_back(r.h_knn);
  }
  if (ts.size() >= 2 && ts.back() > ts.front()) {
    table.slope_transport = fit_line(ts, ht).slope;
    table.slope_knn = fit_line(ts, hk).slope;
  }
  for (std::size_t i = 1; i + 1 < step_t.size(); ++i) {
    const double span = step_t[i + 1] - step_t[i - 1];
    if (span <= 0.0) continue;
    const double fd = (step_h[i + 1] - step_h[i - 1]) / span;
    const double predicted = step_rate[i];
    if (std::abs(predicted) > 0.0)
      table.max_rate_rel_err =
          std::max(table.max_rate_rel_err, std::abs(fd - predicted) / std::abs(predicted));
  }
  return table;
}

MomentReport moment_diagnostics(const std::vector<double>& times,
                                const std::vector<const Matrix*>& q,
                                const std::vector<const Matrix*>& p, const Domain& domain) {
  const int frames = static_cast<int>(times.size());
  require(frames >= 1 && q.size() == times.size() && p.size() == times.size(), ErrorKind::Input,
          "moments: frames misaligned");
  const int n = static_cast<int>(q[0]->rows()), d = domain.dim();
  MomentReport rep;
  // Unwrap each particle by accumulating minimum-image steps between frames.
  Matrix lift = *q[0];
  std::array<double, kMaxDim> step{};
  std::vector<Vector> mean_v(frames);
  for (int f = 0; f < frames; ++f) {
    if (f > 0) {
      for (int i = 0; i < n; ++i) {
        domain.displacement(q[f]->row(i).data(), q[f - 1]->row(i).data(), step.data());
        for (int c = 0; c < d; ++c) lift(i, c) += step[c];
      }
    }
    MomentRow row;
    row.t = times[f];
    row.mean_x = mean_row(lift);
    row.mean_v = mean_row(*p[f]);
    row.second_moment = p[f]->squaredNorm() / n;
    mean_v[f] = row.mean_v;
    rep.rows.push_back(row);
  }
  // Cumulative integral of the mean velocity, fourth order: interior intervals
  // use the four-point Lagrange rule, the end intervals its one-sided variant.
  const double h = frames > 1 ? (times.back() - times.front()) / (frames - 1) : 0.0;
  for (int f = 1; f < frames; ++f)
    require(std::abs(times[f] - times[f - 1] - h) <= 1e-9 * std::max(1.0, h) + 1e-12,
            ErrorKind::Input, "moments: frames must be equally spaced in time");
  Vector integral = Vector::Zero(d);
  for (int f = 1; f < frames; ++f) {
    Vector piece;
    if (frames < 4) {
      piece = 0.5 * h * (mean_v[f - 1] + mean_v[f]);
    } else if (f == 1) {
      piece = h / 24.0 * (9 * mean_v[0] + 19 * mean_v[1] - 5 * mean_v[2] + mean_v[3]);
    } else if (f == frames - 1) {
      piece = h / 24.0 *
              (9 * mean_v[f] + 19 * mean_v[f - 1] - 5 * mean_v[f - 2] + mean_v[f - 3]);
    } else {
      piece = h / 24.0 * (-mean_v[f - 2] + 13 * mean_v[f - 1] + 13 * mean_v[f] - mean_v[f + 1]);
    }
    integral += piece;
    auto& row = rep.rows[f];
    row.identity_residual = (row.mean_x - rep.rows[0].mean_x - integral).norm();
    rep.max_identity_residual = std::max(rep.max_identity_residual, row.identity_residual);
    rep.max_increase =
        std::max(rep.max_increase, row.second_moment - rep.rows[f - 1].second_moment);
  }
  const double span = times.back() - times.front();
  rep.identity_tolerance = span * std::pow(h, 4) + 1e-9;
  rep.identity_ok = rep.max_identity_residual <= rep.identity_tolerance;
  rep.monotone_ok = rep.max_increase <= rep.increase_tolerance;
  return rep;
}

MomentReport moment_diagnostics(const Trajectory& traj) {
  require(traj.frames() >= 1, ErrorKind::Input, "moments: empty trajectory");
  std::vector<const Matrix*> q, p;
  for (const auto& s : traj.states) {
    q.push_back(&s.q);
    p.push_back(&s.p);
  }
  return moment_diagnostics(traj.times, q, p, traj.states.front().domain);
}

MomentReport moment_diagnostics(const MeasureCurve& curve) {
  curve.validate();
  std::vector<const Matrix*> q, p;
  for (const auto& c : curve.clouds) {
    q.push_back(&c.x);
    p.push_back(&c.v);
  }
  return moment_diagnostics(curve.grid, q, p, curve.clouds.front().domain);
}

}  // namespace flockkit
