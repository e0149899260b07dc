#pragma once

#include "dynamics.hpp"

namespace flockkit {

struct InteractionMatrix {
  Matrix a;           // a_ij = U_ij / (S_i + eps)
  Vector weights;     // S_i + eps, the reversibility weights
  Vector stationary;  // weights / sum(weights)
  Vector row_sums;
  bool substochastic = false;
  bool irreducible = false;  // positive-entry pattern is connected
};

InteractionMatrix interaction_matrix(const Matrix& q, const Potential& potential,
                                     const DynamicsMode& mode);

struct SpectrumReport {
  Vector eigenvalues;  // descending
  double gap = 0.0;    // 1 - lambda_2
  bool perron_simple = false;
  bool irreducible = false;
  // || S A S^-1 - (S A S^-1)^T ||_F, the obstruction to a real spectrum.
  double max_imag_residual = 0.0;
  Matrix eigenvectors;  // of the symmetrized matrix, columns match eigenvalues
  Vector sqrt_weights;
};

SpectrumReport spectrum(const InteractionMatrix& m);

// alpha(q) = 1 - lambda_2; precondition error when the matrix is reducible.
double c_matrix_gap(const SpectrumReport& report);

// Spectral projector onto the Perron pair; 1 mu^T for the plain matrix.
Matrix velocity_projector(const InteractionMatrix& m);

struct BNormCheck {
  double lhs = 0.0;              // ||A(q_t) - A(q_0)||_2
  double rhs = 0.0;              // bound with the certified eta
  double rhs_eta_zero = 0.0;     // bound with eta = 0
  double eta = 0.0;              // certified lower bound, 0 when not certified
  double eta_grid = 0.0;         // 128-point segment estimate (diagnostic)
  bool eta_certified = false;
  double max_shift = 0.0;        // max_{i,k} |(q_i - q_k)(t) - (q_i - q_k)(0)|
};

BNormCheck b_norm_check(const Matrix& q_t, const Matrix& q_0, const Potential& potential);

// Largest singular value.
double operator_norm(const Matrix& m);

}  // namespace flockkit
