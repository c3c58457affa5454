#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mpim/crossbar.hpp"
#include "mpim/errors.hpp"
#include "mpim/operators.hpp"
#include "mpim/problems.hpp"
#include "mpim/refinement.hpp"
#include "mpim/rng.hpp"

using namespace mpim;

namespace {

Eigen::MatrixXd random_matrix(int n, std::uint64_t seed) {
  rng::Stream s(seed);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = s.normal();
  return a + n * Eigen::MatrixXd::Identity(n, n);
}

// Returns scale * A^{-1} r; scale != 1 models a biased inner solver.
class ScaledExactSolver final : public InnerSolver {
public:
  ScaledExactSolver(const Eigen::MatrixXd& a, double scale) : lu_(a), scale_(scale) {}
  Eigen::VectorXd solve(const Eigen::VectorXd& r) override {
    ++calls_;
    return scale_ * lu_.solve(r);
  }
  std::size_t matvecs() const override { return 3 * calls_; }
  std::string name() const override { return "scaled"; }

private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  double scale_;
  std::size_t calls_ = 0;
};

class NanSolver final : public InnerSolver {
public:
  Eigen::VectorXd solve(const Eigen::VectorXd& r) override {
    return Eigen::VectorXd::Constant(r.size(), std::numeric_limits<double>::quiet_NaN());
  }
  std::size_t matvecs() const override { return 0; }
  std::string name() const override { return "nan"; }
};

SolveResult noisy_cg_solve(int n, std::uint64_t seed, const NoiseModel& base, double tol) {
  const Eigen::MatrixXd a = model_covariance(n);
  NoiseModel m = base;
  m.seed = seed;
  LinearProblem p{a, generate_rhs(n, seed), std::nullopt};
  CrossbarEncoding enc = encode_matrix(a, 4, std::nullopt, m);
  CrossbarOperator op(enc);
  CgInnerSolver inner(op, 5);
  RefineOptions o;
  o.tol = tol;
  o.reference = a.llt().solve(p.b);
  return iterative_refine(p, inner, o);
}

}  // namespace

TEST_CASE("residual") {
  const Eigen::MatrixXd a = random_matrix(5, 1);
  rng::Stream s(2);
  Eigen::VectorXd b(5), x(5);
  for (int i = 0; i < 5; ++i) {
    b[i] = s.normal();
    x[i] = s.normal();
  }
  LinearProblem p{a, b, std::nullopt};
  MatvecCounter c;
  CHECK(residual(p, Eigen::VectorXd::Zero(5), &c) == b);
  CHECK(c.count == 1);

  // Re-evaluation in extended precision.
  const Eigen::VectorXd r = residual(p, x, &c);
  for (int i = 0; i < 5; ++i) {
    long double acc = b[i];
    for (int j = 0; j < 5; ++j) acc -= static_cast<long double>(a(i, j)) * x[j];
    CHECK(r[i] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-13));
  }
  CHECK(c.count == 2);

  const Eigen::VectorXd xs = a.partialPivLu().solve(b);
  const double bound = 5 * std::numeric_limits<double>::epsilon() * a.norm() * xs.norm();
  CHECK(residual(p, xs).norm() <= bound);
  CHECK_THROWS_AS(residual(p, Eigen::VectorXd::Zero(4)), DomainError);
}

TEST_CASE("precondition_split") {
  Eigen::Matrix2d a;
  a << 2, 1, 1, 4;
  const PreconditionSplit s = precondition_split(a);
  Eigen::Matrix2d expect;
  expect << 0, 0.5, 0.25, 0;
  CHECK(s.offdiag == expect);
  CHECK(s.m_inv_diag == Eigen::Vector2d(0.5, 0.25));

  const PreconditionSplit d = precondition_split(Eigen::Vector3d(2, 3, 4).asDiagonal().toDenseMatrix());
  CHECK(d.offdiag.isZero(0.0));

  // Unit diagonal restored by the identity add.
  const Eigen::MatrixXd b = random_matrix(6, 3);
  const PreconditionSplit sb = precondition_split(b);
  const Eigen::MatrixXd op = sb.offdiag + Eigen::MatrixXd::Identity(6, 6);
  for (int i = 0; i < 6; ++i) CHECK(op(i, i) == 1.0);
  CHECK((op - sb.m_inv_diag.asDiagonal() * b).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::Matrix2d z;
  z << 0, 1, 1, 1;
  CHECK_THROWS_AS(precondition_split(z), DomainError);
}

TEST_CASE("exact inner solver converges in one refinement") {
  const Eigen::MatrixXd a = random_matrix(20, 4);
  LinearProblem p{a, Eigen::VectorXd::Ones(20), std::nullopt};
  ExactInnerSolver inner(a);
  RefineOptions o;
  o.tol = 1e-10;
  const SolveResult r = iterative_refine(p, inner, o);
  CHECK(r.trace.converged);
  CHECK(r.trace.refinements_used == 1);
  CHECK(r.trace.high_precision_matvecs() == 2);
  REQUIRE(r.trace.records.size() == 2);
  CHECK(r.trace.records[0].residual_norm == doctest::Approx(std::sqrt(20.0)));
}

TEST_CASE("matvec accounting") {
  const Eigen::MatrixXd a = random_matrix(10, 5);
  LinearProblem p{a, Eigen::VectorXd::Ones(10), std::nullopt};
  ScaledExactSolver inner(a, 0.5);  // halves the error each refinement
  RefineOptions o;
  o.tol = 1e-6;
  const SolveResult r = iterative_refine(p, inner, o);
  CHECK(r.trace.converged);
  for (std::size_t i = 0; i < r.trace.records.size(); ++i) {
    CHECK(r.trace.records[i].refinement == static_cast<int>(i));
    CHECK(r.trace.records[i].high_precision_matvecs == i + 1);
    CHECK(r.trace.records[i].analog_matvecs == 3 * i);
    if (i > 0) CHECK(r.trace.records[i].residual_norm < r.trace.records[i - 1].residual_norm);
  }
  CHECK(r.trace.high_precision_matvecs() == static_cast<std::size_t>(r.trace.refinements_used) + 1);
  CHECK(r.trace.final_residual() < 1e-6);
}

TEST_CASE("refinement budget and divergence") {
  const Eigen::MatrixXd a = random_matrix(10, 6);
  LinearProblem p{a, Eigen::VectorXd::Ones(10), std::nullopt};

  ScaledExactSolver slow(a, 0.1);
  RefineOptions o;
  o.tol = 1e-12;
  o.max_refinements = 5;
  const SolveResult budget = iterative_refine(p, slow, o);
  CHECK_FALSE(budget.trace.converged);
  CHECK_FALSE(budget.trace.diverged);
  CHECK(budget.trace.refinements_used == 5);

  ScaledExactSolver overshoot(a, 3.0);  // error multiplied by -2 each step
  o.max_refinements = 200;
  const SolveResult div = iterative_refine(p, overshoot, o);
  CHECK(div.trace.diverged);
  CHECK_FALSE(div.trace.converged);
  CHECK(div.trace.refinements_used == 10);

  NanSolver nan;
  try {
    iterative_refine(p, nan, o);
    FAIL("expected divergence error");
  } catch (const DivergenceError& e) {
    CHECK(e.refinement() == 1);
  }

  o.tol = 0.0;
  CHECK_THROWS_AS(iterative_refine(p, slow, o), DomainError);
  o.tol = 1e-5;
  o.max_refinements = 0;
  CHECK_THROWS_AS(iterative_refine(p, slow, o), DomainError);
}

TEST_CASE("error tracking against a reference") {
  const Eigen::MatrixXd a = random_matrix(8, 7);
  LinearProblem p{a, Eigen::VectorXd::Ones(8), std::nullopt};
  const Eigen::VectorXd xr = a.partialPivLu().solve(p.b);
  ScaledExactSolver inner(a, 0.5);
  RefineOptions o;
  o.tol = 1e-8;
  o.reference = xr;
  const SolveResult r = iterative_refine(p, inner, o);
  const RefinementRecord& first = r.trace.records.front();
  CHECK(*first.error_norm == doctest::Approx(xr.norm()));
  CHECK(*first.relative_error == doctest::Approx(1.0));
  CHECK(*first.error_inf == doctest::Approx(xr.lpNorm<Eigen::Infinity>()));
  CHECK(*r.trace.records[1].relative_error == doctest::Approx(0.5));
}

TEST_CASE("preconditioned GMRES refinement with exact matvec") {
  const Eigen::MatrixXd a = random_matrix(30, 8);
  const PreconditionSplit s = precondition_split(a);
  LinearProblem p{a, Eigen::VectorXd::Ones(30), s.m_inv_diag};
  DenseOperator op(s.offdiag);
  GmresInnerSolver inner(op, 5, true);
  RefineOptions o;
  o.tol = 1e-12;
  o.reference = a.partialPivLu().solve(p.b);
  const SolveResult r = iterative_refine(p, inner, o);
  CHECK(r.trace.converged);
  CHECK(*r.trace.records.back().error_norm < 1e-10);
  CHECK(r.trace.analog_matvecs() == 5 * static_cast<std::size_t>(r.trace.refinements_used));
}

TEST_CASE("noisy crossbar refinement converges on the model matrices") {
  for (int n : {100, 500}) {
    const SolveResult r = noisy_cg_solve(n, 11, NoiseModel{}, 1e-5);
    CHECK(r.trace.converged);
    CHECK(r.trace.final_residual() < 1e-5);
    CHECK(r.trace.analog_matvecs() == 5 * static_cast<std::size_t>(r.trace.refinements_used));
    // Residual falls over the run, refinement-to-refinement noise aside.
    CHECK(r.trace.records.back().residual_norm < 1e-5 * r.trace.records.front().residual_norm);
  }
}

TEST_CASE("final accuracy does not depend on the analog noise level") {
  // Welch two-sample t-test on log10 final error, 20 seeds per arm.
  auto sample = [](const NoiseModel& m) {
    std::vector<double> out;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
      out.push_back(std::log10(*noisy_cg_solve(100, seed, m, 1e-10).trace.records.back().error_norm));
    return out;
  };
  auto stats = [](const std::vector<double>& x) {
    double mu = 0, v = 0;
    for (double e : x) mu += e;
    mu /= x.size();
    for (double e : x) v += (e - mu) * (e - mu);
    return std::pair{mu, v / (x.size() - 1)};
  };
  const auto [m1, v1] = stats(sample(NoiseModel{}));
  const auto [m2, v2] = stats(sample(NoiseModel::low_noise()));
  const double t = (m1 - m2) / std::sqrt(v1 / 20 + v2 / 20);
  // Two-sided 1% critical value for ~35 degrees of freedom.
  CHECK(std::abs(t) < 2.72);
}

TEST_CASE("symmetry detection") {
  CHECK(is_symmetric(model_covariance(30)));
  CHECK_FALSE(is_symmetric(random_matrix(5, 9)));
  CHECK_FALSE(is_symmetric(Eigen::MatrixXd::Ones(2, 3)));
}
