#include "mpim/krylov.hpp"

#include <cmath>
#include <string>

#include "mpim/errors.hpp"

namespace mpim {

CgResult cg_inner(LinearOperator& op, const Eigen::VectorXd& r, int m) {
  if (m < 1) throw DomainError("cg_inner: m must be >= 1");
  if (r.size() != op.size()) throw DomainError("cg_inner: residual length does not match operator");

  op.begin_inner_solve();
  CgResult out;
  out.z = Eigen::VectorXd::Zero(r.size());
  Eigen::VectorXd rho = r;
  Eigen::VectorXd v = r;
  double rho_sq = rho.squaredNorm();
  for (int k = 0; k < m; ++k) {
    if (rho_sq == 0.0) break;
    const Eigen::VectorXd w = op.apply(v);
    const double wv = w.dot(v);
    if (wv == 0.0 || !std::isfinite(wv))
      throw BreakdownError("cg_inner: <w, v> = " + std::to_string(wv) + " at iteration " + std::to_string(k + 1),
                           k + 1);
    const double alpha = rho_sq / wv;
    out.z += alpha * v;
    rho -= alpha * w;
    const double rho_sq_next = rho.squaredNorm();
    const double beta = rho_sq_next / rho_sq;
    v = rho + beta * v;
    rho_sq = rho_sq_next;
    out.iterations = k + 1;
  }
  out.recurrence_residual = std::sqrt(rho_sq);
  return out;
}

Eigen::VectorXd hessenberg_least_squares(const Eigen::MatrixXd& h, double beta) {
  const Eigen::Index k = h.cols();
  if (h.rows() != k + 1) throw DomainError("hessenberg_least_squares: H must be (k+1) x k");
  Eigen::MatrixXd r = h;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k + 1);
  g[0] = beta;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double a = r(j, j);
    const double b = r(j + 1, j);
    const double rad = std::hypot(a, b);
    if (rad == 0.0) continue;
    const double c = a / rad;
    const double s = b / rad;
    for (Eigen::Index col = j; col < k; ++col) {
      const double x = r(j, col);
      const double y = r(j + 1, col);
      r(j, col) = c * x + s * y;
      r(j + 1, col) = -s * x + c * y;
    }
    const double gx = g[j];
    g[j] = c * gx;
    g[j + 1] = -s * gx;
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    double acc = g[i];
    for (Eigen::Index j = i + 1; j < k; ++j) acc -= r(i, j) * y[j];
    if (r(i, i) == 0.0) throw BreakdownError("hessenberg_least_squares: singular triangular factor",
                                             static_cast<int>(i + 1));
    y[i] = acc / r(i, i);
  }
  return y;
}

GmresResult gmres_inner(LinearOperator& op, const Eigen::VectorXd& r, int m, bool add_identity) {
  if (m < 1) throw DomainError("gmres_inner: m must be >= 1");
  if (r.size() != op.size()) throw DomainError("gmres_inner: residual length does not match operator");
  const double beta = r.norm();
  if (beta == 0.0) throw DomainError("gmres_inner: zero residual");

  // Relative threshold below which h(k+1,k) counts as an exact zero.
  constexpr double kBreakdownTol = 1e-12;

  op.begin_inner_solve();
  const Eigen::Index n = r.size();
  GmresResult out;
  out.beta = beta;
  Eigen::MatrixXd basis(n, m + 1);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  basis.col(0) = r / beta;

  int k_used = m;
  for (int k = 0; k < m; ++k) {
    Eigen::VectorXd w = op.apply(basis.col(k));
    if (add_identity) w += basis.col(k);
    const double w_norm = w.norm();
    for (int l = 0; l <= k; ++l) {
      h(l, k) = w.dot(basis.col(l));
      w -= h(l, k) * basis.col(l);
    }
    h(k + 1, k) = w.norm();
    if (!std::isfinite(h(k + 1, k))) throw BreakdownError("gmres_inner: non-finite Arnoldi vector", k + 1);
    if (h(k + 1, k) <= kBreakdownTol * w_norm) {
      h(k + 1, k) = 0.0;
      k_used = k + 1;
      out.happy_breakdown = true;
      break;
    }
    basis.col(k + 1) = w / h(k + 1, k);
  }

  out.iterations = k_used;
  out.hessenberg = h.topLeftCorner(k_used + 1, k_used);
  out.basis = basis.leftCols(out.happy_breakdown ? k_used : k_used + 1);
  out.y = hessenberg_least_squares(out.hessenberg, beta);
  out.z = basis.leftCols(k_used) * out.y;
  return out;
}

}  // namespace mpim
