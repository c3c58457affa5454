#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpim/krylov.hpp"
#include "mpim/operators.hpp"

namespace mpim {

/// A x = b in double precision, optionally with a diagonal preconditioner
/// M^{-1} = m_inv_diag.
struct LinearProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::optional<Eigen::VectorXd> m_inv_diag;

  Eigen::Index size() const noexcept { return a.rows(); }
  /// Throws DomainError on shape mismatch or a zero preconditioner entry.
  void validate() const;
};

/// Counts high-precision matrix-vector products.
struct MatvecCounter {
  std::size_t count = 0;
};

/// r = b - A x in double precision.
Eigen::VectorXd residual(const LinearProblem& prob, const Eigen::VectorXd& x, MatvecCounter* counter = nullptr);

struct PreconditionSplit {
  Eigen::MatrixXd offdiag;     // M^{-1} A with its (unit) diagonal zeroed
  Eigen::VectorXd m_inv_diag;  // 1 / diag(A)
};

/// Jacobi scaling: the returned off-diagonal part is what gets encoded, the
/// unit diagonal is restored digitally by the inner solver.
PreconditionSplit precondition_split(const Eigen::MatrixXd& a);

/// Approximate solver for the correction equation.
class InnerSolver {
public:
  virtual ~InnerSolver() = default;
  virtual Eigen::VectorXd solve(const Eigen::VectorXd& r) = 0;
  /// Cumulative low-precision (analog) matvecs issued so far.
  virtual std::size_t matvecs() const = 0;
  virtual std::string name() const = 0;
};

class CgInnerSolver final : public InnerSolver {
public:
  CgInnerSolver(LinearOperator& op, int m) : op_(op), m_(m) {}
  Eigen::VectorXd solve(const Eigen::VectorXd& r) override { return cg_inner(op_, r, m_).z; }
  std::size_t matvecs() const override { return op_.applications(); }
  std::string name() const override { return "cg"; }

private:
  LinearOperator& op_;
  int m_;
};

class GmresInnerSolver final : public InnerSolver {
public:
  GmresInnerSolver(LinearOperator& op, int m, bool add_identity) : op_(op), m_(m), add_identity_(add_identity) {}
  Eigen::VectorXd solve(const Eigen::VectorXd& r) override { return gmres_inner(op_, r, m_, add_identity_).z; }
  std::size_t matvecs() const override { return op_.applications(); }
  std::string name() const override { return "gmres"; }

private:
  LinearOperator& op_;
  int m_;
  bool add_identity_;
};

/// Exact LU solve; converges the refinement in one step. Oracle only.
class ExactInnerSolver final : public InnerSolver {
public:
  explicit ExactInnerSolver(const Eigen::MatrixXd& a) : lu_(a) {}
  Eigen::VectorXd solve(const Eigen::VectorXd& r) override { return lu_.solve(r); }
  std::size_t matvecs() const override { return 0; }
  std::string name() const override { return "exact"; }

private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

struct RefinementRecord {
  int refinement = 0;             // number of corrections applied before this residual
  double residual_norm = 0.0;     // ||r||_2 of the (preconditioned) residual
  std::optional<double> error_norm;       // ||x - x_ref||_2
  std::optional<double> relative_error;   // ||x - x_ref||_2 / ||x_ref||_2
  std::optional<double> error_inf;        // ||x - x_ref||_inf
  std::size_t analog_matvecs = 0;         // cumulative
  std::size_t high_precision_matvecs = 0; // cumulative
};

struct SolveTrace {
  std::vector<RefinementRecord> records;
  bool converged = false;
  bool diverged = false;
  int refinements_used = 0;
  std::size_t analog_matvecs() const { return records.empty() ? 0 : records.back().analog_matvecs; }
  std::size_t high_precision_matvecs() const {
    return records.empty() ? 0 : records.back().high_precision_matvecs;
  }
  double final_residual() const { return records.empty() ? 0.0 : records.back().residual_norm; }
};

struct RefineOptions {
  double tol = 1e-5;
  int max_refinements = 200;
  /// Abort when the residual grew on this many consecutive refinements.
  int divergence_window = 10;
  /// Exact solution, when known, for error tracking.
  std::optional<Eigen::VectorXd> reference;
};

struct SolveResult {
  Eigen::VectorXd x;
  SolveTrace trace;
};

/// Mixed-precision iterative refinement from x0 = 0: the residual is formed in
/// double precision, the correction comes from the inner solver. With a
/// preconditioner the refinement runs on M^{-1} A x = M^{-1} b. Throws
/// DivergenceError on non-finite iterates.
SolveResult iterative_refine(const LinearProblem& prob, InnerSolver& inner, const RefineOptions& opts);

/// True when A equals its transpose to a relative tolerance.
bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol = 1e-12);

}  // namespace mpim
