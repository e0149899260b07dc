#include "spectral.hpp"

#include <Eigen/SVD>
#include <deque>
#include <limits>

#include "jacobi.hpp"

namespace flockkit {

namespace {

bool pattern_connected(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  if (n <= 1) return true;
  std::vector<bool> seen(n, false);
  std::deque<int> queue{0};
  seen[0] = true;
  int count = 1;
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int j = 0; j < n; ++j)
      if (!seen[j] && a(i, j) > 0.0) {
        seen[j] = true;
        ++count;
        queue.push_back(j);
      }
  }
  return count == n;
}

Matrix pair_values(const Matrix& q, const Potential& potential) {
  const Domain& dom = potential.domain();
  const int n = static_cast<int>(q.rows());
  Matrix u(n, n);
  std::array<double, kMaxDim> r{};
  const double self = potential.value(r.data());
  for (int i = 0; i < n; ++i) {
    u(i, i) = self;
    for (int j = i + 1; j < n; ++j) {
      dom.displacement(q.row(i).data(), q.row(j).data(), r.data());
      u(i, j) = u(j, i) = potential.value(r.data());
    }
  }
  return u;
}

}  // namespace

InteractionMatrix interaction_matrix(const Matrix& q, const Potential& potential,
                                     const DynamicsMode& mode) {
  require(q.cols() == potential.dim(), ErrorKind::Input, "interaction matrix: dimension mismatch");
  require(q.rows() >= 1, ErrorKind::Input, "interaction matrix: empty configuration");
  validate_mode(mode);
  const double eps = mode_epsilon(mode);
  const Matrix u = pair_values(q, potential);
  InteractionMatrix m;
  const Vector s = u.rowwise().sum();
  if (eps == 0.0)
    for (Eigen::Index i = 0; i < s.size(); ++i)
      require(s[i] > 0.0, ErrorKind::Numerical,
              "interaction matrix: zero row denominator at particle " + std::to_string(i));
  m.weights = s.array() + eps;
  m.a = u.array().colwise() / m.weights.array();
  m.stationary = m.weights / m.weights.sum();
  m.row_sums = m.a.rowwise().sum();
  m.substochastic = eps > 0.0;
  m.irreducible = pattern_connected(m.a);
  return m;
}

SpectrumReport spectrum(const InteractionMatrix& m) {
  const Eigen::Index n = m.a.rows();
  require(m.weights.size() == n && (m.weights.array() > 0.0).all(), ErrorKind::Precondition,
          "spectrum: stationary weights must be strictly positive");
  SpectrumReport rep;
  rep.irreducible = m.irreducible;
  rep.sqrt_weights = m.weights.array().sqrt();
  const Matrix sym = (rep.sqrt_weights.asDiagonal() * m.a) *
                     rep.sqrt_weights.cwiseInverse().asDiagonal();
  rep.max_imag_residual = (sym - sym.transpose()).norm();
  jacobi_eigen(sym, rep.eigenvalues, rep.eigenvectors);
  rep.gap = n >= 2 ? 1.0 - rep.eigenvalues[1] : 1.0;
  rep.perron_simple = n == 1 || rep.eigenvalues[0] - rep.eigenvalues[1] > 1e-10;
  return rep;
}

double c_matrix_gap(const SpectrumReport& report) {
  require(report.irreducible && report.perron_simple, ErrorKind::Precondition,
          "spectral gap of C(q) requires an irreducible interaction matrix");
  return report.gap;
}

Matrix velocity_projector(const InteractionMatrix& m) {
  const SpectrumReport rep = spectrum(m);
  require(rep.irreducible && rep.perron_simple, ErrorKind::Precondition,
          "velocity projector requires an irreducible interaction matrix");
  // Right and left Perron vectors of A from the symmetrized eigenvector y:
  // r = S^-1 y, l = S y.
  const Vector y = rep.eigenvectors.col(0);
  const Vector r = y.cwiseQuotient(rep.sqrt_weights);
  const Vector l = y.cwiseProduct(rep.sqrt_weights);
  return (r * l.transpose()) / l.dot(r);
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()[0];
}

BNormCheck b_norm_check(const Matrix& q_t, const Matrix& q_0, const Potential& potential) {
  require(q_t.rows() == q_0.rows() && q_t.cols() == q_0.cols(), ErrorKind::Input,
          "b_norm_check: configurations differ in shape");
  require(q_t.cols() == potential.dim(), ErrorKind::Input, "b_norm_check: dimension mismatch");
  const Domain& dom = potential.domain();
  const int n = static_cast<int>(q_t.rows()), d = dom.dim();
  BNormCheck out;
  const InteractionMatrix at = interaction_matrix(q_t, potential, Plain{});
  const InteractionMatrix a0 = interaction_matrix(q_0, potential, Plain{});
  out.lhs = operator_norm(at.a - a0.a);

  constexpr int kGrid = 128;
  double eta_end = std::numeric_limits<double>::infinity();
  double eta_grid = std::numeric_limits<double>::infinity();
  std::array<double, kMaxDim> r0{}, r1{}, rs{};
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      dom.displacement(q_0.row(i).data(), q_0.row(k).data(), r0.data());
      dom.displacement(q_t.row(i).data(), q_t.row(k).data(), r1.data());
      double shift = 0.0;
      for (int c = 0; c < d; ++c) shift += (r1[c] - r0[c]) * (r1[c] - r0[c]);
      out.max_shift = std::max(out.max_shift, std::sqrt(shift));
      eta_end = std::min({eta_end, potential.value(r0.data()), potential.value(r1.data())});
      for (int g = 0; g <= kGrid; ++g) {
        const double s = static_cast<double>(g) / kGrid;
        for (int c = 0; c < d; ++c) rs[c] = r0[c] + s * (r1[c] - r0[c]);
        if (dom.periodic()) dom.fold(rs.data());
        eta_grid = std::min(eta_grid, potential.value(rs.data()));
      }
    }
  }
  if (n < 2) eta_end = eta_grid = 0.0;
  out.eta_grid = eta_grid;
  // Along a straight segment |r(s)| never exceeds the larger endpoint norm, so a
  // radially non-increasing U attains its segment minimum at an endpoint.
  out.eta_certified = potential.monotone_radial();
  out.eta = out.eta_certified ? eta_end : 0.0;
  const double lead = 2.0 * n * potential.sup_gradient() * out.max_shift;
  out.rhs = lead / (potential.at_origin() + (n - 1) * out.eta);
  out.rhs_eta_zero = lead / potential.at_origin();
  return out;
}

}  // namespace flockkit
