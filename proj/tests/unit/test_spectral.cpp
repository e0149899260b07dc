#include <Eigen/Eigenvalues>

#include "graph.hpp"
#include "helpers.hpp"
#include "jacobi.hpp"
#include "spectral.hpp"

using namespace fk_test;

namespace {

Matrix connected_cloud(Rng& rng, int n, double spread) {
  // A random walk with steps below the range keeps the graph connected.
  Matrix q(n, 2);
  q.row(0).setZero();
  for (int i = 1; i < n; ++i) {
    const int parent = static_cast<int>(uniform01(rng) * i);
    double step[2];
    uniform_in_ball(rng, 2, spread, step);
    q(i, 0) = q(parent, 0) + step[0];
    q(i, 1) = q(parent, 1) + step[1];
  }
  return q;
}

}  // namespace

TEST_CASE("two-particle interaction matrix") {
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  Matrix q = Matrix::Zero(2, 2);
  const InteractionMatrix m0 = interaction_matrix(q, u, Plain{});
  CHECK(max_abs(m0.a.array() - 0.5) < 1e-15);

  q(1, 0) = 0.4;
  const double u0 = u.at_origin();
  const double r[] = {0.4, 0.0};
  const double uu = u.value(r);
  const InteractionMatrix m = interaction_matrix(q, u, Plain{});
  CHECK(m.a(0, 0) == doctest::Approx(u0 / (u0 + uu)).epsilon(1e-15));
  CHECK(m.a(0, 1) == doctest::Approx(uu / (u0 + uu)).epsilon(1e-15));
  CHECK(m.a(1, 0) == doctest::Approx(uu / (u0 + uu)).epsilon(1e-15));

  const SpectrumReport s = spectrum(m);
  CHECK(std::abs(s.eigenvalues[0] - 1.0) < 1e-12);
  CHECK(std::abs(s.eigenvalues[1] - (u0 - uu) / (u0 + uu)) < 1e-12);
  CHECK(std::abs(c_matrix_gap(s) - 2.0 * uu / (u0 + uu)) < 1e-12);
  CHECK(s.perron_simple);
}

TEST_CASE("isolated particles give the identity") {
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  Matrix q(3, 2);
  q << 0, 0, 3, 0, 0, 3;
  const InteractionMatrix m = interaction_matrix(q, u, Plain{});
  CHECK(max_abs(m.a - Matrix::Identity(3, 3)) == 0.0);
  CHECK_FALSE(m.irreducible);
  const SpectrumReport s = spectrum(m);
  CHECK(max_abs(s.eigenvalues.array() - 1.0) < 1e-15);
  CHECK(s.gap < 1e-15);
  CHECK_FALSE(s.perron_simple);
  bool precondition = false;
  try {
    c_matrix_gap(s);
  } catch (const Error& e) {
    precondition = e.kind() == ErrorKind::Precondition;
  }
  CHECK(precondition);
  CHECK_THROWS_AS(velocity_projector(m), Error);
}

TEST_CASE("complete uniform graph has unit gap") {
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  const InteractionMatrix m = interaction_matrix(Matrix::Zero(6, 2), u, Plain{});
  CHECK(max_abs(m.a.array() - 1.0 / 6.0) < 1e-15);
  const SpectrumReport s = spectrum(m);
  CHECK(std::abs(s.gap - 1.0) < 1e-12);
}

TEST_CASE("row sums, detailed balance and real spectrum on random configurations") {
  Rng rng = make_rng(1, "spectral.random");
  const Domain tor = Domain::torus(2, 8.0);
  const Potential fams[] = {Potential(CompactBump{1.0}, tor), Potential(GaussianPeriodized{1.0}, tor),
                            Potential(LogGradBounded{1.0}, tor)};
  for (int k = 0; k < 100; ++k) {
    const Potential& u = fams[k % 3];
    const int n = 3 + k % 20;
    Matrix q = random_matrix(rng, n, 2, 0.0, 8.0);
    for (const DynamicsMode& mode : {DynamicsMode(Plain{}), DynamicsMode(Regularized{0.2})}) {
      const InteractionMatrix m = interaction_matrix(q, u, mode);
      if (std::holds_alternative<Plain>(mode))
        CHECK((m.row_sums.array() - 1.0).abs().maxCoeff() < 1e-12);
      else
        CHECK(m.row_sums.maxCoeff() < 1.0);
      const Matrix bal = m.stationary.asDiagonal() * m.a;
      CHECK(max_abs(bal - bal.transpose()) < 1e-12);
      CHECK(std::abs(m.stationary.sum() - 1.0) < 1e-12);
      const SpectrumReport s = spectrum(m);
      CHECK(s.max_imag_residual < 1e-10);
      CHECK(s.eigenvalues.cwiseAbs().maxCoeff() <= 1.0 + 1e-10);
      // Galilean invariance: a rigid translation leaves the spectrum unchanged.
      Matrix shifted = q;
      shifted.col(0).array() += 2.7;
      shifted.col(1).array() -= 1.3;
      for (int i = 0; i < n; ++i) tor.wrap(shifted.row(i).data());
      const SpectrumReport s2 = spectrum(interaction_matrix(shifted, u, mode));
      CHECK(max_abs(s.eigenvalues - s2.eigenvalues) < 1e-10);
    }
  }
}

TEST_CASE("stationary distribution is the normalized row mass") {
  Rng rng = make_rng(2, "spectral.stationary");
  const Domain dom = Domain::free_space(2);
  const Potential u(LogGradBounded{1.0}, dom);
  const Matrix q = random_matrix(rng, 7, 2, -2.0, 2.0);
  const InteractionMatrix m = interaction_matrix(q, u, Plain{});
  double total = 0.0;
  Vector s = Vector::Zero(7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      const double r[] = {q(i, 0) - q(j, 0), q(i, 1) - q(j, 1)};
      s[i] += u.value(r);
      total += u.value(r);
    }
  CHECK(max_abs(m.stationary - s / total) < 1e-15);
}

TEST_CASE("Perron eigenvalue is simple for connected configurations") {
  Rng rng = make_rng(3, "spectral.perron");
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  for (int k = 0; k < 50; ++k) {
    const Matrix q = connected_cloud(rng, 4 + k % 12, 0.9);
    REQUIRE(is_connected(build_graph(q, u)));
    const InteractionMatrix m = interaction_matrix(q, u, Plain{});
    CHECK(m.irreducible);
    const SpectrumReport s = spectrum(m);
    CHECK(std::abs(s.eigenvalues[0] - 1.0) < 1e-10);
    CHECK(s.perron_simple);
    CHECK(s.gap > 0.0);
    for (Eigen::Index i = 1; i < s.eigenvalues.size(); ++i) CHECK(std::abs(s.eigenvalues[i]) < 1.0);
  }
}

TEST_CASE("Jacobi eigensolver agrees with a library solver") {
  Rng rng = make_rng(4, "spectral.jacobi");
  for (int n : {1, 2, 5, 17, 40}) {
    Matrix a = random_matrix(rng, n, n, -1.0, 1.0);
    a = (a + a.transpose()).eval();
    Vector values;
    Matrix vectors;
    jacobi_eigen(a, values, vectors);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(Eigen::MatrixXd(a), Eigen::EigenvaluesOnly);
    const Vector sorted = ref.eigenvalues().reverse();
    CHECK(max_abs(values - sorted) < 1e-12 * std::max(1.0, a.norm()));
    CHECK(max_abs(a * vectors - vectors * values.asDiagonal()) < 1e-11);
    CHECK(max_abs(vectors.transpose() * vectors - Matrix::Identity(n, n)) < 1e-12);
  }
}

TEST_CASE("velocity projector") {
  Rng rng = make_rng(5, "spectral.projector");
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  SUBCASE("symmetric configuration has the uniform projector") {
    Matrix q(4, 2);
    q << 0.3, 0, 0, 0.3, -0.3, 0, 0, -0.3;
    const Matrix P = velocity_projector(interaction_matrix(q, u, Plain{}));
    CHECK(max_abs(P.array() - 0.25) < 1e-12);
  }
  SUBCASE("idempotent and commuting with the matrix") {
    for (int k = 0; k < 20; ++k) {
      const Matrix q = connected_cloud(rng, 8, 0.9);
      for (const DynamicsMode& mode : {DynamicsMode(Plain{}), DynamicsMode(Regularized{0.1})}) {
        const InteractionMatrix m = interaction_matrix(q, u, mode);
        const Matrix P = velocity_projector(m);
        CHECK(max_abs(P * P - P) < 1e-12);
        if (std::holds_alternative<Plain>(mode)) {
          CHECK(max_abs(m.a * P - P) < 1e-10);
          CHECK(max_abs(P * m.a - P) < 1e-10);
        } else {
          CHECK(max_abs(m.a * P - P * m.a) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("operator-norm bound for matrix perturbations") {
  Rng rng = make_rng(6, "spectral.bnorm");
  const Domain dom = Domain::free_space(2);
  const Potential u(CompactBump{1.0}, dom);
  const Matrix q0 = connected_cloud(rng, 10, 0.8);
  const BNormCheck same = b_norm_check(q0, q0, u);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  for (int k = 0; k < 50; ++k) {
    const Matrix qt = q0 + random_matrix(rng, 10, 2, -0.05, 0.05);
    const BNormCheck b = b_norm_check(qt, q0, u);
    CHECK(b.lhs <= b.rhs);
    CHECK(b.rhs <= b.rhs_eta_zero);
    CHECK(b.eta_certified);
    // Dense sampling along each segment never finds a value below the certified bound.
    double grid = 1e300;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j)
        for (int s = 0; s <= 1000; ++s) {
          const double t = s / 1000.0;
          const double r[] = {(1 - t) * (q0(i, 0) - q0(j, 0)) + t * (qt(i, 0) - qt(j, 0)),
                              (1 - t) * (q0(i, 1) - q0(j, 1)) + t * (qt(i, 1) - qt(j, 1))};
          grid = std::min(grid, u.value(r));
        }
    CHECK(grid >= b.eta);
  }
  Matrix m(2, 2);
  m << 3, 0, 0, -4;
  CHECK(operator_norm(m) == doctest::Approx(4.0));
}
