#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "mpim/crossbar.hpp"

namespace mpim {

/// Square linear map used by the inner Krylov solvers. Counts its applications.
class LinearOperator {
public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index size() const = 0;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) {
    ++applications_;
    return do_apply(v);
  }

  /// Called once at the start of every inner solve.
  virtual void begin_inner_solve() {}

  std::size_t applications() const noexcept { return applications_; }

protected:
  virtual Eigen::VectorXd do_apply(const Eigen::VectorXd& v) = 0;

private:
  std::size_t applications_ = 0;
};

/// Exact double-precision product with a dense matrix.
class DenseOperator final : public LinearOperator {
public:
  explicit DenseOperator(Eigen::MatrixXd a) : a_(std::move(a)) {}
  Eigen::Index size() const override { return a_.rows(); }
  const Eigen::MatrixXd& matrix() const noexcept { return a_; }

protected:
  Eigen::VectorXd do_apply(const Eigen::VectorXd& v) override { return a_ * v; }

private:
  Eigen::MatrixXd a_;
};

/// Matvecs routed through a crossbar encoding. Each application advances the
/// simulation clock by `tick`; each inner solve starts with a drift
/// calibration unless calibration is disabled.
class CrossbarOperator final : public LinearOperator {
public:
  CrossbarOperator(CrossbarEncoding& enc, bool calibrate = true, double tick = 1.0)
      : enc_(enc), calibrate_(calibrate), tick_(tick), t_now_(enc.first_use_time()) {}

  Eigen::Index size() const override { return static_cast<Eigen::Index>(enc_.rows()); }

  void begin_inner_solve() override {
    if (calibrate_) calibrate_drift(enc_, t_now_);
  }

  double time() const noexcept { return t_now_; }
  void set_time(double t) noexcept { t_now_ = t; }
  std::size_t analog_ops() const noexcept { return analog_ops_; }
  const CrossbarEncoding& encoding() const noexcept { return enc_; }

protected:
  Eigen::VectorXd do_apply(const Eigen::VectorXd& v) override {
    MatvecResult r = analog_matvec(enc_, v, t_now_);
    t_now_ += tick_;
    analog_ops_ += r.analog_ops;
    return std::move(r.w);
  }

private:
  CrossbarEncoding& enc_;
  bool calibrate_;
  double tick_;
  double t_now_;
  std::size_t analog_ops_ = 0;
};

}  // namespace mpim
