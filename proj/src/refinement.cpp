#include "mpim/refinement.hpp"

#include <cmath>
#include <string>

#include "mpim/errors.hpp"

namespace mpim {

void LinearProblem::validate() const {
  if (a.rows() != a.cols()) throw DomainError("LinearProblem: A must be square");
  if (b.size() != a.rows()) throw DomainError("LinearProblem: length(b) != N");
  if (m_inv_diag) {
    if (m_inv_diag->size() != a.rows()) throw DomainError("LinearProblem: preconditioner length != N");
    for (Eigen::Index i = 0; i < m_inv_diag->size(); ++i)
      if ((*m_inv_diag)[i] == 0.0) throw DomainError("LinearProblem: zero preconditioner entry");
  }
}

Eigen::VectorXd residual(const LinearProblem& prob, const Eigen::VectorXd& x, MatvecCounter* counter) {
  if (x.size() != prob.a.cols()) throw DomainError("residual: length(x) != N");
  if (counter) ++counter->count;
  return prob.b - prob.a * x;
}

PreconditionSplit precondition_split(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DomainError("precondition_split: matrix must be square");
  PreconditionSplit out;
  out.m_inv_diag.resize(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) == 0.0) throw DomainError("precondition_split: zero diagonal entry at row " + std::to_string(i));
    out.m_inv_diag[i] = 1.0 / a(i, i);
  }
  out.offdiag = out.m_inv_diag.asDiagonal() * a;
  out.offdiag.diagonal().setZero();
  return out;
}

SolveResult iterative_refine(const LinearProblem& prob, InnerSolver& inner, const RefineOptions& opts) {
  prob.validate();
  if (!(opts.tol > 0.0)) throw DomainError("iterative_refine: tol must be positive");
  if (opts.max_refinements < 1) throw DomainError("iterative_refine: max_refinements must be >= 1");

  SolveResult out;
  out.x = Eigen::VectorXd::Zero(prob.size());
  MatvecCounter hp;
  const std::size_t analog_start = inner.matvecs();
  const double ref_norm = opts.reference ? opts.reference->norm() : 0.0;

  int growth_streak = 0;
  double prev_norm = 0.0;
  for (int refinement = 0;; ++refinement) {
    Eigen::VectorXd r = residual(prob, out.x, &hp);
    if (prob.m_inv_diag) r = prob.m_inv_diag->cwiseProduct(r);

    RefinementRecord rec;
    rec.refinement = refinement;
    rec.residual_norm = r.norm();
    if (opts.reference) {
      const Eigen::VectorXd e = out.x - *opts.reference;
      rec.error_norm = e.norm();
      rec.error_inf = e.lpNorm<Eigen::Infinity>();
      rec.relative_error = ref_norm > 0.0 ? e.norm() / ref_norm : e.norm();
    }
    rec.analog_matvecs = inner.matvecs() - analog_start;
    rec.high_precision_matvecs = hp.count;
    out.trace.records.push_back(rec);
    out.trace.refinements_used = refinement;

    if (rec.residual_norm < opts.tol) {
      out.trace.converged = true;
      break;
    }
    if (refinement > 0) {
      growth_streak = rec.residual_norm > prev_norm ? growth_streak + 1 : 0;
      if (growth_streak >= opts.divergence_window) {
        out.trace.diverged = true;
        break;
      }
    }
    prev_norm = rec.residual_norm;
    if (refinement >= opts.max_refinements) break;

    out.x += inner.solve(r);
    if (!out.x.allFinite())
      throw DivergenceError("iterative_refine: non-finite solution after refinement " + std::to_string(refinement + 1),
                            refinement + 1);
  }
  return out;
}

bool is_symmetric(const Eigen::MatrixXd& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = a.cwiseAbs().maxCoeff();
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

}  // namespace mpim
