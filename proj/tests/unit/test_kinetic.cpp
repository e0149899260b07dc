#include <algorithm>
#include <numeric>

#include "assignment.hpp"
#include "helpers.hpp"
#include "kinetic.hpp"

using namespace fk_test;

namespace {

const Domain kTorus = Domain::torus(2, 10.0);

PointCloud random_cloud(Rng& rng, const Domain& dom, int n, double extent) {
  Matrix x = random_matrix(rng, n, dom.dim(), 0.0, extent);
  Matrix v = random_ball(rng, n, dom.dim(), 1.0);
  return PointCloud::make(dom, x, v);
}

double brute_force_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("mean field of a single atom") {
  const FieldSpec plain{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
  Matrix y(1, 2), u(1, 2);
  y << 3.0, 4.0;
  u << 0.2, -0.4;
  const double x[] = {3.1, 3.9}, v[] = {0.5, 0.5};
  const FieldValue f = mean_field(x, v, y, u, plain);
  CHECK(std::abs(f.m[0] - (0.2 - 0.5)) < 1e-15);
  CHECK(std::abs(f.m[1] - (-0.4 - 0.5)) < 1e-15);
  CHECK(f.h_eps == 1.0);
}

TEST_CASE("regularized field without overlap") {
  const Domain free = Domain::free_space(2);
  Matrix y(1, 2), u(1, 2);
  y << 5.0, 5.0;
  u << 0.2, -0.4;
  const double x[] = {0.0, 0.0}, v[] = {0.3, 0.1};
  const FieldSpec literal{Potential(CompactBump{1.0}, free), Regularized{0.1},
                          RegularizedConvention::Literal};
  const FieldValue a = mean_field(x, v, y, u, literal);
  CHECK(a.m[0] == -0.3);
  CHECK(a.m[1] == -0.1);
  CHECK(a.h_eps == 0.0);
  const FieldSpec weighted{Potential(CompactBump{1.0}, free), Regularized{0.1},
                           RegularizedConvention::Weighted};
  const FieldValue b = mean_field(x, v, y, u, weighted);
  CHECK(b.m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("field hypotheses are validated") {
  const FieldSpec bad{Potential(CompactBump{1.0}, kTorus), Plain{}};
  CHECK_THROWS_AS(bad.validate(), Error);
  const FieldSpec free_plain{Potential(LogGradBounded{1.0}, Domain::free_space(2)), Plain{}};
  CHECK_THROWS_AS(free_plain.validate(), Error);
  const FieldSpec zero_eps{Potential(CompactBump{1.0}, Domain::free_space(2)), Regularized{0.0}};
  CHECK_THROWS_AS(zero_eps.validate(), Error);
  CHECK_THROWS_AS(PointCloud::make(kTorus, Matrix::Zero(1, 2), Matrix::Constant(1, 2, 0.8)), Error);
}

TEST_CASE("mean field is bounded by two") {
  Rng rng = make_rng(1, "kinetic.bound");
  const FieldSpec fields[] = {
      {Potential(GaussianPeriodized{1.0}, kTorus), Plain{}},
      {Potential(LogGradBounded{1.0}, kTorus), Plain{}},
      {Potential(CompactBump{1.0}, Domain::free_space(2)), Regularized{0.05}},
      {Potential(CompactBump{1.0}, Domain::free_space(2)), Regularized{0.05},
       RegularizedConvention::Weighted},
  };
  for (const auto& f : fields) {
    for (int k = 0; k < 300; ++k) {
      const PointCloud c = random_cloud(rng, f.domain(), 1 + k % 30, f.domain().periodic() ? 10.0 : 3.0);
      Vector x(2), v(2);
      for (int i = 0; i < 2; ++i) x[i] = uniform(rng, 0.0, 3.0);
      uniform_in_ball(rng, 2, 1.0, v.data());
      const FieldValue m = mean_field(x.data(), v.data(), c.x, c.v, f);
      CHECK(m.m.norm() <= 2.0);
    }
  }
}

TEST_CASE("Lipschitz quotients stay below the lemma constants") {
  Rng rng = make_rng(2, "kinetic.lipschitz");
  SUBCASE("constant-velocity cloud has a constant average") {
    Matrix x = random_matrix(rng, 40, 2, 0.0, 10.0), v(40, 2);
    v.rowwise() = Eigen::RowVector2d(0.3, 0.2);
    const FieldSpec f{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
    const LipschitzProbe p = lipschitz_probe(f, PointCloud::make(kTorus, x, v), 200, rng);
    CHECK(p.empirical < 1e-12);
  }
  SUBCASE("periodized Gaussian, L = D / R^2") {
    const FieldSpec f{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
    const LipschitzProbe p = lipschitz_probe(f, random_cloud(rng, kTorus, 50, 10.0), 300, rng);
    CHECK(p.lemma == "le3");
    CHECK(p.constant == doctest::Approx(10.0));
    CHECK(p.empirical <= p.constant);
    CHECK(p.holds);
  }
  SUBCASE("log-gradient bound K = 2 gives L = 4") {
    const Domain tor = Domain::torus(2, 6.0);
    const FieldSpec f{Potential(LogGradBounded{0.5}, tor), Plain{}};
    const LipschitzProbe p = lipschitz_probe(f, random_cloud(rng, tor, 50, 6.0), 300, rng);
    CHECK(p.lemma == "le2");
    CHECK(p.constant == doctest::Approx(4.0));
    CHECK(p.empirical <= p.constant);
  }
  SUBCASE("regularized compact bump, L = 2 / eps") {
    const Domain free = Domain::free_space(2);
    const FieldSpec f{Potential(CompactBump{2.0}, free), Regularized{0.1}};
    const LipschitzProbe p = lipschitz_probe(f, random_cloud(rng, free, 50, 2.0), 300, rng);
    CHECK(p.lemma == "le5");
    CHECK(p.constant == doctest::Approx(20.0));
    CHECK(p.empirical <= p.constant);
  }
}

TEST_CASE("transport distance") {
  Rng rng = make_rng(3, "kinetic.transport");
  const PointCloud a = random_cloud(rng, kTorus, 30, 10.0);
  CHECK(transport_distance(a, a).w_hat == 0.0);

  Matrix x1(1, 2), v1(1, 2), x2(1, 2), v2(1, 2);
  x1 << 1.0, 1.0;
  v1 << 0.0, 0.0;
  x2 << 1.0, 1.0 + 0.3 * 0.6;
  v2 << 0.3 * 0.8, 0.0;
  const double w = transport_distance(PointCloud::make(kTorus, x1, v1), PointCloud::make(kTorus, x2, v2)).w_hat;
  CHECK(std::abs(w - 0.3) < 1e-15);
  // Across the periodic boundary.
  x2 << 9.9, 1.0;
  v2 << 0.0, 0.0;
  CHECK(std::abs(transport_distance(PointCloud::make(kTorus, x1, v1), PointCloud::make(kTorus, x2, v2)).w1 - 1.1) < 1e-12);

  for (int n = 1; n <= 7; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      Matrix cost = random_matrix(rng, n, n, 0.0, 1.0);
      double total = 0.0;
      const std::vector<int> assign = solve_assignment(cost, &total);
      std::vector<int> seen(n, 0);
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        seen[assign[i]]++;
        s += cost(i, assign[i]);
      }
      CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
      CHECK(std::abs(s - total) < 1e-12);
      CHECK(std::abs(total - brute_force_assignment(cost)) < 1e-12);
      const PointCloud p = random_cloud(rng, kTorus, n, 10.0), q = random_cloud(rng, kTorus, n, 10.0);
      Matrix c(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double r[2];
          kTorus.displacement(p.x.row(i).data(), q.x.row(j).data(), r);
          c(i, j) = std::sqrt(r[0] * r[0] + r[1] * r[1] + (p.v.row(i) - q.v.row(j)).squaredNorm());
        }
      CHECK(std::abs(transport_distance(p, q).w1 - brute_force_assignment(c) / n) < 1e-12);
    }
  }
}

TEST_CASE("characteristics") {
  Rng rng = make_rng(4, "kinetic.characteristics");
  const FieldSpec f{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
  SUBCASE("a co-moving single atom is a fixed point of the relative state") {
    Matrix y(1, 2), u(1, 2);
    y << 2.0, 3.0;
    u << 0.4, 0.1;
    const PointCloud atom = PointCloud::make(kTorus, y, u);
    const MeasureCurve c = evolve_cloud(atom, f, 1.0, 0.01, 10, Interpolation::CubicHermite);
    const double x0[] = {2.0, 3.0}, v0[] = {0.4, 0.1};
    const CharacteristicPath p = flow_characteristics(x0, v0, c, f, 0.0, 1.0, 0.01);
    CHECK(std::abs(p.v(p.v.rows() - 1, 0) - 0.4) < 1e-14);
    CHECK(std::abs(p.x(p.x.rows() - 1, 0) - 2.4) < 1e-12);
  }
  SUBCASE("flowing forward then backward returns to the start") {
    const PointCloud cloud = random_cloud(rng, kTorus, 40, 10.0);
    // Cubic Hermite makes the driving field C^1 in time.
    const MeasureCurve c = evolve_cloud(cloud, f, 1.0, 0.01, 10, Interpolation::CubicHermite);
    for (int k = 0; k < 5; ++k) {
      double x0[2], v0[2];
      x0[0] = uniform(rng, 0.0, 10.0);
      x0[1] = uniform(rng, 0.0, 10.0);
      uniform_in_ball(rng, 2, 1.0, v0);
      const CharacteristicPath fw = flow_characteristics(x0, v0, c, f, 0.0, 1.0, 1e-3);
      const Eigen::Index e = fw.x.rows() - 1;
      const Vector x1 = fw.x.row(e).transpose(), v1 = fw.v.row(e).transpose();
      const CharacteristicPath bw = flow_characteristics(std::span<const double>(x1.data(), 2),
                                                         std::span<const double>(v1.data(), 2), c, f,
                                                         1.0, 0.0, 1e-3);
      const Eigen::Index b = bw.x.rows() - 1;
      double r[2];
      kTorus.displacement(bw.x.row(b).data(), x0, r);
      CHECK(std::hypot(r[0], r[1]) < 1e-8);
      CHECK(std::hypot(bw.v(b, 0) - v0[0], bw.v(b, 1) - v0[1]) < 1e-8);
    }
  }
  SUBCASE("characteristics of the atoms reproduce the empirical trajectory") {
    const PointCloud cloud = random_cloud(rng, kTorus, 25, 10.0);
    const MeasureCurve c = evolve_cloud(cloud, f, 1.0, 0.01, 1, Interpolation::CubicHermite);
    const MeasureCurve pushed = push_forward(cloud, c, f, 0.01);
    double worst = 0.0;
    for (int k = 0; k < c.frames(); ++k)
      worst = std::max(worst, transport_distance(pushed.clouds[k], c.clouds[k]).w1);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("measure curve sampling") {
  Matrix x0(1, 1), v0(1, 1), x1(1, 1), v1(1, 1);
  x0 << 0.0;
  v0 << 0.0;
  x1 << 1.0;
  v1 << 0.5;
  const Domain line = Domain::free_space(1);
  MeasureCurve c;
  c.grid = {0.0, 1.0};
  c.clouds = {PointCloud::make(line, x0, v0), PointCloud::make(line, x1, v1)};
  c.rate_x = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  c.rate_v = {Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 0.5)};
  Matrix x, v;
  c.interpolation = Interpolation::ConstantLeft;
  c.sample(0.7, x, v);
  CHECK(x(0, 0) == 0.0);
  c.interpolation = Interpolation::Linear;
  c.sample(0.7, x, v);
  CHECK(x(0, 0) == doctest::Approx(0.7));
  c.interpolation = Interpolation::CubicHermite;
  c.sample(0.3, x, v);
  // Data of the line x = t, v = t / 2 are reproduced exactly.
  CHECK(x(0, 0) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(v(0, 0) == doctest::Approx(0.15).epsilon(1e-14));
  c.sample(1.0, x, v);
  CHECK(x(0, 0) == 1.0);
}

TEST_CASE("convergence experiment degenerate cases") {
  const FieldSpec f{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
  SUBCASE("a single atom gives identical clouds") {
    auto sampler = [](int n, Rng&) {
      Matrix x = Matrix::Constant(n, 2, 4.0), v = Matrix::Constant(n, 2, 0.1);
      return PointCloud::make(kTorus, x, v);
    };
    const ConvergenceTable t = mean_field_convergence(sampler, {4, 16}, 64, 0.5, f, 3, 0.05, 1);
    for (const auto& r : t.rows) CHECK(r.w_hat < 1e-12);
  }
  SUBCASE("no dynamics leaves the sampling error, decreasing in N") {
    auto sampler = [](int n, Rng& rng) { return random_cloud(rng, kTorus, n, 10.0); };
    const ConvergenceTable t = mean_field_convergence(sampler, {100, 400, 1600}, 6400, 0.0, f, 5, 0.05, 2);
    CHECK(t.strictly_decreasing);
    CHECK(t.rows.size() == 15);
  }
}

TEST_CASE("Gronwall constants") {
  const FieldSpec f{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
  const GronwallConstants g = gronwall_constants(f);
  const Potential& u = f.potential;
  CHECK(g.lipschitz == doctest::Approx(10.0));
  CHECK(g.c0 == doctest::Approx(4.0 * (u.sup_gradient() + u.sup_value())));
  CHECK(g.a == u.inf_value());
  CHECK(g.c == doctest::Approx(g.lipschitz + g.c0 / g.a));
  const FieldSpec r{Potential(CompactBump{1.0}, Domain::free_space(2)), Regularized{0.2}};
  CHECK(gronwall_constants(r).a == 0.2);
}

TEST_CASE("translated copies keep their distance") {
  Rng rng = make_rng(5, "kinetic.galilean");
  const FieldSpec f{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
  const PointCloud a = random_cloud(rng, kTorus, 30, 10.0);
  Matrix x = a.x;
  x.col(0).array() += 0.05;
  const PointCloud b = PointCloud::make(kTorus, x, a.v);
  const StabilityReport rep = stability_bound_check(a, b, f, 1.0, 0.02, 10, 7);
  for (const auto& row : rep.rows) CHECK(std::abs(row.ratio - 1.0) < 1e-9);
  CHECK(rep.holds);
  CHECK_THROWS_AS(stability_bound_check(a, a, f, 1.0, 0.02, 10, 7), Error);
}

TEST_CASE("Picard iteration from aligned data is immediately fixed") {
  Rng rng = make_rng(6, "kinetic.picard");
  const FieldSpec f{Potential(GaussianPeriodized{1.0}, kTorus), Plain{}};
  Matrix x = random_matrix(rng, 20, 2, 0.0, 10.0), v(20, 2);
  v.rowwise() = Eigen::RowVector2d(0.2, 0.3);
  const PicardReport rep = picard_iterate(PointCloud::make(kTorus, x, v), f, 0.5, 5, 4, 0.02, 0.0,
                                          Interpolation::CubicHermite, 3);
  // Curve 0 is frozen while the atoms stream, so the first step moves; the
  // second already reproduces the first.
  REQUIRE(rep.steps.size() >= 2);
  CHECK(rep.steps[1].d_alpha < 1e-12);
  CHECK(rep.converged);
  for (double w : rep.final_vs_direct) CHECK(w < 1e-12);
}
