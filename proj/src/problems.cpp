#include "mpim/problems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "mpim/crossbar.hpp"
#include "mpim/errors.hpp"
#include "mpim/rng.hpp"

namespace mpim {

Eigen::MatrixXd model_covariance(Eigen::Index n) {
  if (n < 1) throw DomainError("model_covariance: N must be >= 1");
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      a(i, j) = i == j ? 1.0 + std::sqrt(static_cast<double>(i + 1)) : 1.0 / static_cast<double>(std::abs(i - j));
  return a;
}

Eigen::VectorXd generate_rhs(Eigen::Index n, std::uint64_t seed) {
  if (n < 0) throw DomainError("generate_rhs: negative length");
  const std::uint64_t key = rng::split(seed, "rhs");
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) b[i] = rng::uniform(key, static_cast<std::uint64_t>(i));
  return b;
}

ExpressionMatrix ExpressionMatrix::cohort(const std::string& label) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t s = 0; s < cohorts.size(); ++s)
    if (cohorts[s] == label) rows.push_back(static_cast<Eigen::Index>(s));
  ExpressionMatrix out;
  out.gene_ids = gene_ids;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), genes());
  for (std::size_t r = 0; r < rows.size(); ++r) out.values.row(static_cast<Eigen::Index>(r)) = values.row(rows[r]);
  out.cohorts.assign(rows.size(), label);
  return out;
}

ExpressionMatrix ExpressionMatrix::subsample(Eigen::Index n, std::uint64_t seed) const {
  if (n < 0 || n > samples()) throw DomainError("subsample: requested size outside [0, samples]");
  // Partial Fisher-Yates over sample indices, then restore original order.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(samples()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  rng::Stream stream(rng::split(seed, "subsample"));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(i + static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(samples() - i))));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(n));
  std::sort(idx.begin(), idx.end());

  ExpressionMatrix out;
  out.gene_ids = gene_ids;
  out.values.resize(n, genes());
  for (Eigen::Index r = 0; r < n; ++r) {
    out.values.row(r) = values.row(idx[static_cast<std::size_t>(r)]);
    if (!cohorts.empty()) out.cohorts.push_back(cohorts[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])]);
  }
  return out;
}

Eigen::MatrixXd sample_covariance(const ExpressionMatrix& x) {
  const Eigen::Index n = x.samples();
  if (n < 2) throw DomainError("sample_covariance: at least two samples are required");
  const Eigen::RowVectorXd mean = x.values.colwise().mean();
  const Eigen::MatrixXd centered = x.values.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(n - 1);
}

ExpressionMatrix sample_gaussian_cohort(const Eigen::MatrixXd& precision, Eigen::Index samples, std::uint64_t seed,
                                        const std::string& cohort_label) {
  const Eigen::Index g = precision.rows();
  if (precision.cols() != g) throw DomainError("sample_gaussian_cohort: precision must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw DomainError("sample_gaussian_cohort: precision is not SPD");
  // precision = L L^T  =>  x = L^{-T} z has covariance precision^{-1}.
  rng::Stream stream(rng::split(seed, "cohort"));
  Eigen::MatrixXd z(g, samples);
  for (Eigen::Index s = 0; s < samples; ++s)
    for (Eigen::Index i = 0; i < g; ++i) z(i, s) = stream.normal();
  const Eigen::MatrixXd x = llt.matrixU().solve(z);

  ExpressionMatrix out;
  out.values = x.transpose();
  for (Eigen::Index i = 0; i < g; ++i) out.gene_ids.push_back("G" + std::to_string(i + 1));
  if (!cohort_label.empty()) out.cohorts.assign(static_cast<std::size_t>(samples), cohort_label);
  return out;
}

Eigen::MatrixXd make_sparse_precision(Eigen::Index genes, std::uint64_t seed) {
  if (genes < 2) throw DomainError("make_sparse_precision: need at least two genes");
  rng::Stream stream(rng::split(seed, "precision"));
  auto sign = [&] { return stream.uniform() < 0.5 ? -1.0 : 1.0; };
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(genes, genes);
  for (Eigen::Index i = 0; i + 1 < genes; ++i) p(i, i + 1) = p(i + 1, i) = 0.4 * sign();
  for (Eigen::Index e = 0; e < genes / 4; ++e) {
    const auto i = static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(genes)));
    const auto j = static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(genes)));
    if (std::abs(i - j) < 2) continue;
    p(i, j) = p(j, i) = 0.3 * sign();
  }
  const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p, Eigen::EigenvaluesOnly).eigenvalues()[0];
  if (lambda_min < 0.2) p.diagonal().array() += 0.2 - lambda_min;
  return p;
}

InverseCovarianceResult solve_inverse_columns(const Eigen::MatrixXd& a, const InverseCovarianceOptions& opts) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DomainError("inverse_covariance: matrix must be square and non-empty");
  const Eigen::Index n = a.rows();
  const PreconditionSplit split = precondition_split(a);

  std::optional<CrossbarEncoding> enc;
  std::unique_ptr<LinearOperator> op;
  if (opts.exact_matvec) {
    op = std::make_unique<DenseOperator>(split.offdiag);
  } else {
    // A diagonal matrix has nothing off the diagonal to encode; the digital
    // identity is then the exact operator.
    if (split.offdiag.cwiseAbs().maxCoeff() == 0.0) {
      op = std::make_unique<DenseOperator>(split.offdiag);
    } else {
      enc.emplace(encode_matrix(split.offdiag, opts.k_per_element, std::nullopt, opts.model));
      op = std::make_unique<CrossbarOperator>(*enc, opts.calibrate);
    }
  }
  GmresInnerSolver inner(*op, opts.m, /*add_identity=*/true);

  std::optional<Eigen::MatrixXd> exact;
  if (opts.track_error) exact = a.partialPivLu().inverse();

  InverseCovarianceResult out;
  out.sigma.resize(n, n);
  out.device_count = enc ? enc->device_count() : 0;
  for (Eigen::Index col = 0; col < n; ++col) {
    LinearProblem prob{a, Eigen::VectorXd::Unit(n, col), split.m_inv_diag};
    RefineOptions ro;
    ro.tol = opts.tol;
    ro.max_refinements = opts.max_refinements;
    if (exact) ro.reference = exact->col(col);
    SolveResult res = iterative_refine(prob, inner, ro);
    out.sigma.col(col) = res.x;
    if (!res.trace.converged) out.failed_columns.push_back(static_cast<int>(col));
    out.traces.push_back(std::move(res.trace));
  }
  return out;
}

Eigen::MatrixXd inverse_covariance(const Eigen::MatrixXd& a, const InverseCovarianceOptions& opts) {
  InverseCovarianceResult res = solve_inverse_columns(a, opts);
  if (!res.failed_columns.empty()) {
    std::string msg = "inverse_covariance: column solve(s) did not converge:";
    for (int c : res.failed_columns) msg += " " + std::to_string(c);
    throw ConvergenceError(msg);
  }
  return res.sigma;
}

}  // namespace mpim
