#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpim/noise_model.hpp"
#include "mpim/refinement.hpp"

namespace mpim {

/// Decaying model covariance: A_ij = 1/|i-j| off the diagonal and
/// 1 + sqrt(i) on it, with 1-based i.
Eigen::MatrixXd model_covariance(Eigen::Index n);

/// Right-hand side with iid uniform [0, 1) entries, reproducible from the seed.
Eigen::VectorXd generate_rhs(Eigen::Index n, std::uint64_t seed);

/// Expression values, one row per sample and one column per gene.
struct ExpressionMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> gene_ids;
  std::vector<std::string> cohorts;  // one label per sample, may be empty

  Eigen::Index samples() const noexcept { return values.rows(); }
  Eigen::Index genes() const noexcept { return values.cols(); }

  /// Samples whose cohort label equals `label`.
  ExpressionMatrix cohort(const std::string& label) const;
  /// n samples drawn uniformly without replacement, original order kept.
  ExpressionMatrix subsample(Eigen::Index n, std::uint64_t seed) const;
};

/// Unbiased sample covariance (divisor samples - 1).
Eigen::MatrixXd sample_covariance(const ExpressionMatrix& x);

/// Draws from N(0, precision^{-1}).
ExpressionMatrix sample_gaussian_cohort(const Eigen::MatrixXd& precision, Eigen::Index samples, std::uint64_t seed,
                                        const std::string& cohort_label = "");

/// Sparse SPD precision matrix with a unit-diagonal chain of +/-0.4
/// couplings plus genes/4 random extra couplings of +/-0.3, shifted on the
/// diagonal until its smallest eigenvalue is at least 0.2.
Eigen::MatrixXd make_sparse_precision(Eigen::Index genes, std::uint64_t seed);

/// Mixed-precision pipeline used for covariance inversion: Jacobi
/// preconditioning, off-diagonal part on the crossbar, GMRES inner solver
/// with the identity added digitally.
struct InverseCovarianceOptions {
  NoiseModel model;
  int k_per_element = 4;
  int m = 5;
  double tol = 1e-3;
  int max_refinements = 200;
  bool calibrate = true;
  /// Use an exact double-precision operator instead of the crossbar.
  bool exact_matvec = false;
  /// Track errors against a direct inverse.
  bool track_error = true;
};

struct InverseCovarianceResult {
  Eigen::MatrixXd sigma;
  std::vector<SolveTrace> traces;  // one per column
  std::vector<int> failed_columns;
  std::size_t device_count = 0;
};

/// Solves A x(n) = e(n) for every column; failed columns are reported, not thrown.
InverseCovarianceResult solve_inverse_columns(const Eigen::MatrixXd& a, const InverseCovarianceOptions& opts);

/// As solve_inverse_columns, but throws ConvergenceError naming the failed columns.
Eigen::MatrixXd inverse_covariance(const Eigen::MatrixXd& a, const InverseCovarianceOptions& opts);

}  // namespace mpim
