#include "kinetic.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "assignment.hpp"
#include "parallel.hpp"

namespace flockkit {

PointCloud PointCloud::make(const Domain& domain, Matrix x, Matrix v) {
  const int d = domain.dim();
  require(x.cols() == d && v.cols() == d, ErrorKind::Input,
          "point cloud: expected " + std::to_string(d) + " columns");
  require(x.rows() == v.rows() && x.rows() >= 1, ErrorKind::Input,
          "point cloud: positions and velocities must have the same positive count");
  require(x.allFinite() && v.allFinite(), ErrorKind::Input, "point cloud: non-finite atoms");
  require(v.rowwise().norm().maxCoeff() <= 1.0 + 1e-12, ErrorKind::Input,
          "point cloud: velocities must lie in the unit ball");
  for (Eigen::Index i = 0; i < x.rows(); ++i) domain.wrap(x.row(i).data());
  return PointCloud{domain, std::move(x), std::move(v)};
}

void FieldSpec::validate() const {
  validate_mode(mode);
  if (plain()) {
    require(potential.domain().periodic(), ErrorKind::Config,
            "field: plain mode is only defined on the torus (use regularized mode in free space)");
    require(potential.positive_on_torus(), ErrorKind::Config,
            "field: plain mode needs a periodized potential with positive infimum on the torus");
  }
}

void MeasureCurve::validate() const {
  require(!grid.empty() && grid.size() == clouds.size(), ErrorKind::Input,
          "measure curve: grid and clouds must be non-empty and aligned");
  for (std::size_t k = 1; k < grid.size(); ++k)
    require(grid[k] > grid[k - 1], ErrorKind::Input, "measure curve: grid must increase");
  for (const auto& c : clouds)
    require(c.size() == clouds.front().size(), ErrorKind::Input,
            "measure curve: particle count must be constant");
  if (interpolation == Interpolation::CubicHermite)
    require(rate_x.size() == grid.size() && rate_v.size() == grid.size(), ErrorKind::Input,
            "measure curve: cubic Hermite interpolation needs rates at every grid time");
}

MeasureCurve MeasureCurve::constant(const PointCloud& cloud, const std::vector<double>& grid,
                                    Interpolation interpolation) {
  MeasureCurve c;
  c.grid = grid;
  c.interpolation = interpolation;
  c.clouds.assign(grid.size(), cloud);
  const Matrix zero = Matrix::Zero(cloud.size(), cloud.dim());
  c.rate_x.assign(grid.size(), zero);
  c.rate_v.assign(grid.size(), zero);
  return c;
}

void MeasureCurve::sample(double t, Matrix& x, Matrix& v) const {
  const int kk = frames();
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  int k = static_cast<int>(it - grid.begin()) - 1;
  if (k < 0) k = 0;
  if (k >= kk - 1 || interpolation == Interpolation::ConstantLeft || t <= grid[k]) {
    x = clouds[std::min(k, kk - 1)].x;
    v = clouds[std::min(k, kk - 1)].v;
    return;
  }
  const PointCloud& a = clouds[k];
  const PointCloud& b = clouds[k + 1];
  const Domain& dom = a.domain;
  const int n = a.size(), d = a.dim();
  const double dt = grid[k + 1] - grid[k];
  const double tau = (t - grid[k]) / dt;
  x.resize(n, d);
  v.resize(n, d);
  std::array<double, kMaxDim> step{};
  if (interpolation == Interpolation::Linear) {
    for (int i = 0; i < n; ++i) {
      dom.displacement(b.x.row(i).data(), a.x.row(i).data(), step.data());
      for (int c = 0; c < d; ++c) {
        x(i, c) = a.x(i, c) + tau * step[c];
        v(i, c) = a.v(i, c) + tau * (b.v(i, c) - a.v(i, c));
      }
    }
    return;
  }
  const double t2 = tau * tau, t3 = t2 * tau;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + tau, h01 = -2 * t3 + 3 * t2,
               h11 = t3 - t2;
  const Matrix& ax = rate_x[k];
  const Matrix& bx = rate_x[k + 1];
  const Matrix& av = rate_v[k];
  const Matrix& bv = rate_v[k + 1];
  for (int i = 0; i < n; ++i) {
    dom.displacement(b.x.row(i).data(), a.x.row(i).data(), step.data());
    for (int c = 0; c < d; ++c) {
      x(i, c) = a.x(i, c) + h10 * dt * ax(i, c) + h01 * step[c] + h11 * dt * bx(i, c);
      v(i, c) = h00 * a.v(i, c) + h10 * dt * av(i, c) + h01 * b.v(i, c) + h11 * dt * bv(i, c);
    }
  }
}

namespace {

template <class K>
FieldValue field_kernel(const K& kernel, const Domain& dom, const double* x, const double* v,
                        const Matrix& ys, const Matrix& us, const FieldSpec& field) {
  const int n = static_cast<int>(ys.rows()), d = dom.dim();
  std::array<double, kMaxDim> r{}, diff{}, num{};
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    dom.displacement(x, ys.row(j).data(), r.data());
    const double u = kernel.value(r.data());
    if (u == 0.0) continue;
    s += u;
    const double* uj = us.row(j).data();
    for (int c = 0; c < d; ++c) {
      diff[c] += u * (uj[c] - v[c]);
      num[c] += u * uj[c];
    }
  }
  const double inv_n = 1.0 / n;
  s *= inv_n;
  FieldValue out;
  out.m.resize(d);
  out.conv = s;
  const double eps = field.epsilon();
  if (field.plain()) {
    require(s > 0.0, ErrorKind::Config,
            "field: plain mode met a vanishing convolution; the field needs a torus potential "
            "with positive infimum");
    for (int c = 0; c < d; ++c) out.m[c] = diff[c] * inv_n / s;
    out.h_eps = 1.0;
  } else if (field.convention == RegularizedConvention::Weighted) {
    for (int c = 0; c < d; ++c) out.m[c] = diff[c] * inv_n / (s + eps);
    out.h_eps = s / (s + eps);
  } else {
    for (int c = 0; c < d; ++c) out.m[c] = num[c] * inv_n / (s + eps) - v[c];
    out.h_eps = s / (s + eps);
  }
  return out;
}

// Self-interaction of a cloud: rates of every atom against the cloud itself.
template <class K>
void self_field_kernel(const K& kernel, const Domain& dom, const Matrix& x, const Matrix& v,
                       const FieldSpec& field, Matrix& m, Vector* h) {
  const int n = static_cast<int>(x.rows()), d = dom.dim();
  std::array<double, kMaxDim> r{};
  const double self = kernel.value(r.data());
  Vector s = Vector::Constant(n, self);
  Matrix diff = Matrix::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i).data();
    const double* vi = v.row(i).data();
    for (int j = i + 1; j < n; ++j) {
      dom.displacement(xi, x.row(j).data(), r.data());
      const double u = kernel.value(r.data());
      if (u == 0.0) continue;
      s[i] += u;
      s[j] += u;
      const double* vj = v.row(j).data();
      for (int c = 0; c < d; ++c) {
        const double dd = vj[c] - vi[c];
        diff(i, c) += u * dd;
        diff(j, c) -= u * dd;
      }
    }
  }
  // Sums above are unnormalized; eps scales with N accordingly.
  const double eps_n = field.epsilon() * n;
  m.resize(n, d);
  if (h) h->resize(n);
  for (int i = 0; i < n; ++i) {
    if (field.plain()) {
      require(s[i] > 0.0, ErrorKind::Config, "field: plain mode met a vanishing convolution");
      m.row(i) = diff.row(i) / s[i];
    } else if (field.convention == RegularizedConvention::Weighted) {
      m.row(i) = diff.row(i) / (s[i] + eps_n);
    } else {
      // sum U u_j = diff_i + s_i v_i
      m.row(i) = (diff.row(i) + s[i] * v.row(i)) / (s[i] + eps_n) - v.row(i);
    }
    if (h) (*h)[i] = field.plain() ? 1.0 : s[i] / (s[i] + eps_n);
  }
}

void self_field(const FieldSpec& field, const Matrix& x, const Matrix& v, Matrix& m,
                Vector* h = nullptr) {
  field.potential.visit([&](const auto& k) {
    self_field_kernel(k, field.domain(), x, v, field, m, h);
  });
}

void batch_field(const FieldSpec& field, const Matrix& x, const Matrix& v, const Matrix& ys,
                 const Matrix& us, Matrix& m, Vector& h) {
  const int n = static_cast<int>(x.rows());
  m.resize(n, x.cols());
  h.resize(n);
  parallel_for(n, [&](int i) {
    const FieldValue f = mean_field(x.row(i).data(), v.row(i).data(), ys, us, field);
    m.row(i) = f.m.transpose();
    h[i] = f.h_eps;
  });
}

int step_count(double span, double dt) {
  if (span == 0.0) return 0;
  return std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-9)));
}

}  // namespace

FieldValue mean_field(const double* x, const double* v, const Matrix& ys, const Matrix& us,
                      const FieldSpec& field) {
  const Domain& dom = field.domain();
  return field.potential.visit(
      [&](const auto& k) { return field_kernel(k, dom, x, v, ys, us, field); });
}

Vector mean_field_M(std::span<const double> x, std::span<const double> v, const PointCloud& cloud,
                    const FieldSpec& field) {
  const int d = field.domain().dim();
  require(static_cast<int>(x.size()) == d && static_cast<int>(v.size()) == d, ErrorKind::Input,
          "mean field: dimension mismatch");
  require(cloud.domain == field.domain(), ErrorKind::Input,
          "mean field: cloud and potential live on different domains");
  return mean_field(x.data(), v.data(), cloud.x, cloud.v, field).m;
}

Vector alignment_average(const double* x, const Matrix& ys, const Matrix& us,
                         const FieldSpec& field) {
  // A = M + v for the literal and plain forms; evaluated at v = u_0 so that the
  // plain branch is the difference form u_0 + sum U (u_j - u_0) / (U*nu).
  const int d = field.domain().dim();
  const double* u0 = us.row(0).data();
  const FieldValue f = mean_field(x, u0, ys, us, field);
  Vector a(d);
  if (field.plain() || field.convention == RegularizedConvention::Weighted) {
    const double scale = field.plain() ? 1.0 : f.h_eps;
    for (int c = 0; c < d; ++c) a[c] = f.m[c] + scale * u0[c];
  } else {
    for (int c = 0; c < d; ++c) a[c] = f.m[c] + u0[c];
  }
  return a;
}

LipschitzProbe lipschitz_constant(const FieldSpec& field) {
  field.validate();
  const Potential& u = field.potential;
  LipschitzProbe p;
  if (!field.plain()) {
    require(u.compact_support() && u.sup_gradient() <= 1.0 + 1e-12, ErrorKind::Config,
            "lipschitz: the regularized lemma needs a compactly supported U with sup|grad U| <= 1");
    p.lemma = "le5";
    p.constant = 2.0 / field.epsilon();
    return p;
  }
  const auto& spec = u.spec();
  if (const auto* lg = std::get_if<LogGradBounded>(&spec)) {
    p.lemma = "le2";
    p.constant = 2.0 / lg->decay;
  } else if (const auto* gp = std::get_if<GaussianPeriodized>(&spec)) {
    p.lemma = "le3";
    p.constant = u.domain().side() / (gp->width * gp->width);
  } else {
    fail(ErrorKind::Config, "lipschitz: no lemma covers this plain-mode potential");
  }
  return p;
}

LipschitzProbe lipschitz_probe(const FieldSpec& field, const PointCloud& cloud, int samples,
                               Rng& rng) {
  LipschitzProbe p = lipschitz_constant(field);
  require(samples >= 1, ErrorKind::Input, "lipschitz: need at least one sample");
  require(cloud.domain == field.domain(), ErrorKind::Input,
          "lipschitz: cloud and potential live on different domains");
  const Domain& dom = field.domain();
  const int d = dom.dim();
  const double range = field.potential.range();
  Vector lo(d), hi(d);
  if (dom.periodic()) {
    lo.setZero();
    hi.setConstant(dom.side());
  } else {
    lo = cloud.x.colwise().minCoeff().transpose().array() - range;
    hi = cloud.x.colwise().maxCoeff().transpose().array() + range;
  }
  std::array<double, kMaxDim> x{}, z{}, dir{}, vv{}, sep{};
  for (int s = 0; s < samples; ++s) {
    for (int c = 0; c < d; ++c) x[c] = uniform(rng, lo[c], hi[c]);
    uniform_in_ball(rng, d, 1.0, dir.data());
    double dn = 0.0;
    for (int c = 0; c < d; ++c) dn += dir[c] * dir[c];
    dn = std::sqrt(dn);
    if (dn == 0.0) continue;
    const double r = range * std::pow(10.0, uniform(rng, -3.0, 0.0));
    for (int c = 0; c < d; ++c) z[c] = x[c] + r * dir[c] / dn;
    dom.displacement(x.data(), z.data(), sep.data());
    double dist = 0.0;
    for (int c = 0; c < d; ++c) dist += sep[c] * sep[c];
    dist = std::sqrt(dist);
    Vector fx, fz;
    if (p.lemma == "le5") {
      uniform_in_ball(rng, d, 1.0, vv.data());
      fx = mean_field(x.data(), vv.data(), cloud.x, cloud.v, field).m;
      fz = mean_field(z.data(), vv.data(), cloud.x, cloud.v, field).m;
    } else {
      fx = alignment_average(x.data(), cloud.x, cloud.v, field);
      fz = alignment_average(z.data(), cloud.x, cloud.v, field);
    }
    p.empirical = std::max(p.empirical, (fx - fz).cwiseAbs().maxCoeff() / dist);
  }
  p.holds = p.empirical <= p.constant;
  return p;
}

void flow_batch(FlowBatch& batch, const MeasureCurve& curve, const FieldSpec& field,
                double t_final, double dt,
                const std::function<void(const FlowBatch&, const Vector& h_now)>& observer) {
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::Input, "dt must be positive");
  const Domain& dom = field.domain();
  const int n = static_cast<int>(batch.x.rows()), d = dom.dim();
  require(batch.x.cols() == d && batch.v.cols() == d && batch.v.rows() == n, ErrorKind::Input,
          "flow: batch shape mismatch");
  if (batch.h_integral.size() != n) batch.h_integral = Vector::Zero(n);
  const int steps = step_count(t_final - batch.t, dt);
  const double h = steps == 0 ? 0.0 : (t_final - batch.t) / steps;

  Matrix ys, us;
  Vector h0, hs;
  auto eval = [&](double t, const Matrix& x, const Matrix& v, Matrix& m, Vector& hv) {
    curve.sample(t, ys, us);
    batch_field(field, x, v, ys, us, m, hv);
  };
  Matrix k1, k2, k3, k4, xs, vs;
  eval(batch.t, batch.x, batch.v, k1, h0);
  batch.m = k1;
  if (observer) observer(batch, h0);
  const double t_start = batch.t;
  for (int s = 1; s <= steps; ++s) {
    const double t = batch.t;
    xs = batch.x + (0.5 * h) * batch.v;
    vs = batch.v + (0.5 * h) * k1;
    const Matrix v2 = vs;
    eval(t + 0.5 * h, xs, vs, k2, hs);
    xs = batch.x + (0.5 * h) * v2;
    vs = batch.v + (0.5 * h) * k2;
    const Matrix v3 = vs;
    eval(t + 0.5 * h, xs, vs, k3, hs);
    xs = batch.x + h * v3;
    vs = batch.v + h * k3;
    const Matrix v4 = vs;
    eval(t + h, xs, vs, k4, hs);
    batch.x += (h / 6.0) * (batch.v + 2.0 * v2 + 2.0 * v3 + v4);
    batch.v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!batch.x.allFinite() || !batch.v.allFinite())
      fail(ErrorKind::Numerical, "characteristics blew up at step " + std::to_string(s));
    for (int i = 0; i < n; ++i) dom.wrap(batch.x.row(i).data());
    batch.t = s == steps ? t_final : t_start + s * h;
    Vector h1;
    eval(batch.t, batch.x, batch.v, k1, h1);
    batch.h_integral += (0.5 * h) * (h0 + h1);
    h0 = h1;
    batch.m = k1;
    if (observer) observer(batch, h0);
  }
}

CharacteristicPath flow_characteristics(std::span<const double> x0, std::span<const double> v0,
                                        const MeasureCurve& curve, const FieldSpec& field,
                                        double t0, double t_final, double dt) {
  const int d = field.domain().dim();
  require(static_cast<int>(x0.size()) == d && static_cast<int>(v0.size()) == d, ErrorKind::Input,
          "characteristics: dimension mismatch");
  curve.validate();
  const double lo = curve.grid.front(), hi = curve.grid.back();
  require(t0 >= lo - 1e-12 && t0 <= hi + 1e-12 && t_final >= lo - 1e-12 &&
              t_final <= hi + 1e-12,
          ErrorKind::Input, "characteristics: times must lie within the curve's grid span");
  FlowBatch b;
  b.x = Eigen::Map<const Matrix>(x0.data(), 1, d);
  b.v = Eigen::Map<const Matrix>(v0.data(), 1, d);
  b.t = t0;
  CharacteristicPath path;
  std::vector<double> xs, vs;
  flow_batch(b, curve, field, t_final, dt, [&](const FlowBatch& s, const Vector&) {
    path.times.push_back(s.t);
    xs.insert(xs.end(), s.x.data(), s.x.data() + d);
    vs.insert(vs.end(), s.v.data(), s.v.data() + d);
  });
  const int rows = static_cast<int>(path.times.size());
  path.x = Eigen::Map<Matrix>(xs.data(), rows, d);
  path.v = Eigen::Map<Matrix>(vs.data(), rows, d);
  path.h_integral = b.h_integral;
  return path;
}

MeasureCurve push_forward(const PointCloud& mu0, const MeasureCurve& driver,
                          const FieldSpec& field, double dt) {
  driver.validate();
  MeasureCurve out;
  out.grid = driver.grid;
  out.interpolation = driver.interpolation;
  FlowBatch b;
  b.x = mu0.x;
  b.v = mu0.v;
  b.t = driver.grid.front();
  auto record = [&]() {
    out.clouds.push_back(PointCloud{mu0.domain, b.x, b.v});
    out.rate_x.push_back(b.v);
    out.rate_v.push_back(b.m);
  };
  // A zero-length flow only evaluates the rates at the initial time.
  flow_batch(b, driver, field, b.t, dt);
  record();
  for (int k = 1; k < driver.frames(); ++k) {
    flow_batch(b, driver, field, driver.grid[k], dt);
    record();
  }
  return out;
}

MeasureCurve evolve_cloud(const PointCloud& mu0, const FieldSpec& field, double T, double dt,
                          int stride, Interpolation interpolation) {
  field.validate();
  require(mu0.domain == field.domain(), ErrorKind::Input,
          "evolve: cloud and potential live on different domains");
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::Input, "dt must be positive");
  require(T >= 0.0, ErrorKind::Input, "T must be non-negative");
  require(stride >= 1, ErrorKind::Input, "stride must be at least 1");
  const Domain& dom = field.domain();
  const int steps = step_count(T, dt);
  const double h = steps == 0 ? 0.0 : T / steps;
  const int n = mu0.size();
  MeasureCurve out;
  out.interpolation = interpolation;
  Matrix x = mu0.x, v = mu0.v, k1, k2, k3, k4, xs, vs;
  self_field(field, x, v, k1);
  auto record = [&](double t) {
    out.grid.push_back(t);
    out.clouds.push_back(PointCloud{dom, x, v});
    out.rate_x.push_back(v);
    out.rate_v.push_back(k1);
  };
  record(0.0);
  for (int s = 1; s <= steps; ++s) {
    xs = x + (0.5 * h) * v;
    vs = v + (0.5 * h) * k1;
    const Matrix v2 = vs;
    self_field(field, xs, vs, k2);
    xs = x + (0.5 * h) * v2;
    vs = v + (0.5 * h) * k2;
    const Matrix v3 = vs;
    self_field(field, xs, vs, k3);
    xs = x + h * v3;
    vs = v + h * k3;
    const Matrix v4 = vs;
    self_field(field, xs, vs, k4);
    x += (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
    v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || !v.allFinite())
      fail(ErrorKind::Numerical, "cloud evolution blew up at step " + std::to_string(s));
    for (int i = 0; i < n; ++i) dom.wrap(x.row(i).data());
    self_field(field, x, v, k1);
    if (s % stride == 0 || s == steps) record(s == steps ? T : s * h);
  }
  return out;
}

namespace {

std::vector<int> subsample(int n, int m, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(uniform01(rng) * (n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TransportResult transport_distance(const PointCloud& a, const PointCloud& b, std::uint64_t seed,
                                   int cap) {
  require(a.domain == b.domain, ErrorKind::Input, "transport: clouds live on different domains");
  require(cap >= 1, ErrorKind::Input, "transport: cap must be positive");
  const int m = std::min({a.size(), b.size(), cap});
  Rng rng(splitmix64(seed));
  std::vector<int> ia(a.size()), ib(b.size());
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);
  if (a.size() > m) ia = subsample(a.size(), m, rng);
  if (b.size() > m) ib = subsample(b.size(), m, rng);
  const Domain& dom = a.domain;
  const int d = dom.dim();
  Matrix cost(m, m);
  std::array<double, kMaxDim> r{};
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      dom.displacement(a.x.row(ia[i]).data(), b.x.row(ib[j]).data(), r.data());
      double s = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dv = a.v(ia[i], c) - b.v(ib[j], c);
        s += r[c] * r[c] + dv * dv;
      }
      cost(i, j) = std::sqrt(s);
    }
  }
  double total = 0.0;
  solve_assignment(cost, &total);
  TransportResult out;
  out.n = m;
  out.w1 = total / m;
  out.w_hat = std::min(out.w1, 1.0);
  return out;
}

ConvergenceTable mean_field_convergence(const CloudSampler& sampler,
                                        const std::vector<int>& sizes, int n_ref, double t_eval,
                                        const FieldSpec& field, int seeds, double dt,
                                        std::uint64_t global_seed) {
  field.validate();
  require(!sizes.empty() && seeds >= 1 && n_ref >= 1, ErrorKind::Input,
          "convergence: need sizes, a reference size and at least one seed");
  ConvergenceTable table;
  table.sizes = sizes;
  const int ns = static_cast<int>(sizes.size());
  const int steps = std::max(1, step_count(t_eval, dt));
  auto evolve_final = [&](const PointCloud& c) {
    if (t_eval == 0.0) return c;
    return evolve_cloud(c, field, t_eval, dt, steps, Interpolation::ConstantLeft).clouds.back();
  };
  std::vector<ConvergenceRow> rows(static_cast<std::size_t>(seeds) * ns);
  // One reference cloud stands in for the limit; the seeds resample the N-clouds.
  Rng ref_rng = make_rng(global_seed, "converge.reference");
  const PointCloud ref = evolve_final(sampler(n_ref, ref_rng));
  for (int s = 0; s < seeds; ++s) {
    parallel_for(ns, [&](int k) {
      Rng rng = make_rng(global_seed, "converge.sample", static_cast<std::uint64_t>(s) * ns + k);
      const PointCloud c = evolve_final(sampler(sizes[k], rng));
      const auto w = transport_distance(
          c, ref, stream_seed(global_seed, "converge.subsample", static_cast<std::uint64_t>(s) * ns + k));
      rows[static_cast<std::size_t>(s) * ns + k] = ConvergenceRow{sizes[k], s, t_eval, w.w_hat};
    });
  }
  table.rows = rows;
  for (int k = 0; k < ns; ++k) {
    std::vector<double> w;
    for (int s = 0; s < seeds; ++s) w.push_back(rows[static_cast<std::size_t>(s) * ns + k].w_hat);
    std::sort(w.begin(), w.end());
    const std::size_t h = w.size() / 2;
    table.medians.push_back(w.size() % 2 ? w[h] : 0.5 * (w[h - 1] + w[h]));
  }
  table.strictly_decreasing = true;
  for (int k = 1; k < ns; ++k)
    if (!(table.medians[k] < table.medians[k - 1])) table.strictly_decreasing = false;
  return table;
}

GronwallConstants gronwall_constants(const FieldSpec& field) {
  GronwallConstants g;
  g.lipschitz = lipschitz_constant(field).constant;
  const Potential& u = field.potential;
  g.c0 = 2.0 * u.dim() * (u.sup_gradient() + u.sup_value());
  g.a = field.plain() ? u.inf_value() : field.epsilon();
  require(g.a > 0.0, ErrorKind::Config, "stability: the denominator lower bound a must be positive");
  g.c = g.lipschitz + g.c0 / g.a;
  return g;
}

StabilityReport stability_bound_check(const PointCloud& mu0a, const PointCloud& mu0b,
                                      const FieldSpec& field, double T, double dt, int stride,
                                      std::uint64_t seed, double tolerance) {
  StabilityReport rep;
  rep.tolerance = tolerance;
  rep.constants = gronwall_constants(field);
  const double w0 = transport_distance(mu0a, mu0b, seed).w_hat;
  require(w0 > 0.0, ErrorKind::Input,
          "stability: initial clouds coincide, the distance ratio is undefined");
  const MeasureCurve a = evolve_cloud(mu0a, field, T, dt, stride, Interpolation::ConstantLeft);
  const MeasureCurve b = evolve_cloud(mu0b, field, T, dt, stride, Interpolation::ConstantLeft);
  rep.holds = true;
  for (int k = 0; k < a.frames(); ++k) {
    StabilityRow row;
    row.t = a.grid[k];
    row.w_hat = transport_distance(a.clouds[k], b.clouds[k], seed).w_hat;
    row.ratio = row.w_hat / w0;
    row.bound = std::exp(rep.constants.c * row.t);
    if (!(row.ratio <= row.bound * (1.0 + tolerance))) rep.holds = false;
    rep.rows.push_back(row);
  }
  return rep;
}

PicardReport picard_iterate(const PointCloud& mu0, const FieldSpec& field, double T, int grid_k,
                            int iters, double dt, double alpha, Interpolation interpolation,
                            std::uint64_t seed) {
  field.validate();
  require(T > 0.0 && grid_k >= 1 && iters >= 1, ErrorKind::Input,
          "picard: need T > 0, at least one grid interval and one iteration");
  const GronwallConstants g = gronwall_constants(field);
  PicardReport rep;
  rep.lipschitz = g.lipschitz;
  rep.alpha = alpha > 0.0 ? alpha : 2.0 * g.lipschitz;
  require(rep.alpha > g.lipschitz, ErrorKind::Config, "picard: alpha must exceed L");
  rep.bound = g.c0 / (g.a * (rep.alpha - g.lipschitz));

  const int per = step_count(T / grid_k, dt);
  const double h = T / (static_cast<double>(grid_k) * per);
  std::vector<double> grid(grid_k + 1);
  for (int k = 0; k <= grid_k; ++k) grid[k] = k == grid_k ? T : k * (T / grid_k);

  rep.direct = evolve_cloud(mu0, field, T, h, per, interpolation);
  rep.direct.grid = grid;
  rep.curves.push_back(MeasureCurve::constant(mu0, grid, interpolation));

  auto d_alpha = [&](const MeasureCurve& a, const MeasureCurve& b) {
    double best = 0.0;
    for (int k = 0; k <= grid_k; ++k)
      best = std::max(best, std::exp(-rep.alpha * grid[k]) *
                                transport_distance(a.clouds[k], b.clouds[k], seed).w_hat);
    return best;
  };
  for (int it = 1; it <= iters; ++it) {
    rep.curves.push_back(push_forward(mu0, rep.curves.back(), field, h));
    PicardStep step;
    step.iteration = it;
    step.d_alpha = d_alpha(rep.curves[it], rep.curves[it - 1]);
    if (it >= 2 && rep.steps.back().d_alpha > 1e-14)
      step.ratio = step.d_alpha / rep.steps.back().d_alpha;
    rep.steps.push_back(step);
    if (step.d_alpha <= 1e-14) break;
  }
  const auto& last = rep.steps.back();
  rep.converged = last.d_alpha <= 1e-8 || (last.ratio && *last.ratio < 1.0);
  for (int k = 0; k <= grid_k; ++k)
    rep.final_vs_direct.push_back(
        transport_distance(rep.curves.back().clouds[k], rep.direct.clouds[k], seed).w_hat);
  return rep;
}

}  // namespace flockkit
