#pragma once

#include <Eigen/Dense>

#include "mpim/operators.hpp"

namespace mpim {

struct CgResult {
  Eigen::VectorXd z;
  int iterations = 0;
  /// ||rho|| after the last iteration, i.e. the recurrence's residual estimate.
  double recurrence_residual = 0.0;
};

/// Fixed-iteration conjugate gradient on op z = r starting from z = 0. Runs
/// exactly m iterations unless the recurrence residual becomes exactly zero.
/// Throws BreakdownError when <w, v> = 0.
CgResult cg_inner(LinearOperator& op, const Eigen::VectorXd& r, int m);

/// Arnoldi basis, Hessenberg matrix and least-squares coefficients of one
/// GMRES cycle.
struct GmresResult {
  Eigen::VectorXd z;
  Eigen::MatrixXd basis;       // N x (k+1), orthonormal columns v(1..k+1)
  Eigen::MatrixXd hessenberg;  // (k+1) x k
  Eigen::VectorXd y;           // length k
  double beta = 0.0;
  int iterations = 0;          // k, the Krylov dimension actually used
  bool happy_breakdown = false;
};

/// One GMRES cycle of dimension m with modified Gram-Schmidt Arnoldi. With
/// `add_identity` the operator is op + I, the identity part applied
/// digitally. Throws DomainError for r = 0.
GmresResult gmres_inner(LinearOperator& op, const Eigen::VectorXd& r, int m, bool add_identity);

/// argmin_y || beta e1 - H y ||_2 for an (k+1) x k upper Hessenberg H,
/// by Givens rotations.
Eigen::VectorXd hessenberg_least_squares(const Eigen::MatrixXd& h, double beta);

}  // namespace mpim
