#include "mpim/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mpim/errors.hpp"
#include "mpim/rng.hpp"

namespace mpim {
namespace {

bool in_band(std::size_t i, std::size_t j, std::optional<int> band) {
  if (!band) return true;
  const std::size_t d = i > j ? i - j : j - i;
  return d <= static_cast<std::size_t>(*band);
}

// Floyd's algorithm: s distinct indices from [0, n), returned sorted.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t s, rng::Stream& stream) {
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(s * 2);
  std::vector<std::size_t> out;
  out.reserve(s);
  for (std::size_t j = n - s; j < n; ++j) {
    const std::size_t t = stream.below(j + 1);
    const std::size_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double drift_log_ratio_at(const CrossbarEncoding& enc, double t_now) {
  const double elapsed = t_now - enc.t_encoded();
  const double t0 = enc.model().drift_t0;
  return elapsed > t0 ? std::log(elapsed / t0) : 0.0;
}

}  // namespace

CrossbarEncoding::CrossbarEncoding(CrossbarEncoding&& o) noexcept { *this = std::move(o); }

CrossbarEncoding& CrossbarEncoding::operator=(CrossbarEncoding&& o) noexcept {
  rows_ = o.rows_;
  cols_ = o.cols_;
  k_ = o.k_;
  band_ = o.band_;
  scale_a_ = o.scale_a_;
  alpha_ = o.alpha_;
  t_encoded_ = o.t_encoded_;
  model_ = std::move(o.model_);
  row_ptr_ = std::move(o.row_ptr_);
  col_index_ = std::move(o.col_index_);
  sign_ = std::move(o.sign_);
  value_ = std::move(o.value_);
  devices_ = std::move(o.devices_);
  unconverged_ = o.unconverged_;
  calib_subset_ = std::move(o.calib_subset_);
  calib_reference_ = o.calib_reference_;
  calib_factor_.store(o.calib_factor_.load());
  read_counter_.store(o.read_counter_.load());
  return *this;
}

std::size_t count_devices(const Eigen::MatrixXd& a, int k_per_element, std::optional<int> band_halfwidth) {
  if (k_per_element < 1) throw DomainError("count_devices: K must be >= 1");
  if (band_halfwidth && *band_halfwidth < 0) throw DomainError("count_devices: band halfwidth must be >= 0");
  std::size_t nnz = 0;
  const auto n_rows = static_cast<std::size_t>(a.rows());
  const auto n_cols = static_cast<std::size_t>(a.cols());
  for (std::size_t j = 0; j < n_cols; ++j)
    for (std::size_t i = 0; i < n_rows; ++i)
      if (a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0 && in_band(i, j, band_halfwidth))
        ++nnz;
  return nnz * static_cast<std::size_t>(k_per_element);
}

CrossbarEncoding encode_matrix(const Eigen::MatrixXd& a, const EncodeOptions& opts, const NoiseModel& model) {
  model.validate();
  if (a.rows() != a.cols()) throw DomainError("encode_matrix: matrix must be square");
  if (opts.k_per_element < 1) throw DomainError("encode_matrix: K must be >= 1");
  if (opts.band_halfwidth && *opts.band_halfwidth < 0)
    throw DomainError("encode_matrix: band halfwidth must be >= 0");

  CrossbarEncoding enc;
  enc.rows_ = static_cast<std::size_t>(a.rows());
  enc.cols_ = static_cast<std::size_t>(a.cols());
  enc.k_ = opts.k_per_element;
  enc.band_ = opts.band_halfwidth;
  enc.t_encoded_ = opts.t_encoded;
  enc.model_ = model;

  double max_abs = 0.0;
  enc.row_ptr_.assign(enc.rows_ + 1, 0);
  for (std::size_t i = 0; i < enc.rows_; ++i) {
    const std::size_t lo = enc.band_ ? (i > static_cast<std::size_t>(*enc.band_) ? i - *enc.band_ : 0) : 0;
    const std::size_t hi = enc.band_ ? std::min(enc.cols_, i + *enc.band_ + 1) : enc.cols_;
    for (std::size_t j = lo; j < hi; ++j) {
      const double x = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (x == 0.0) continue;
      enc.col_index_.push_back(static_cast<std::uint32_t>(j));
      enc.sign_.push_back(x > 0.0 ? 1 : -1);
      enc.value_.push_back(std::abs(x));
      max_abs = std::max(max_abs, std::abs(x));
    }
    enc.row_ptr_[i + 1] = enc.col_index_.size();
  }
  if (!(max_abs > 0.0)) throw ScalingError("encode_matrix: encoded region of the matrix is all zero");
  enc.scale_a_ = model.g_max / max_abs;

  const double f_ref = model.iv(model.v_read_ref);
  enc.alpha_ = model.quantize(model.g_max * f_ref) / (model.g_max * f_ref);

  const std::uint64_t device_key = rng::split(model.seed, "device");
  const std::size_t k = static_cast<std::size_t>(enc.k_);
  enc.devices_.resize(enc.nnz() * k);
  for (std::size_t e = 0; e < enc.nnz(); ++e) {
    const double target = std::min(enc.value_[e] * enc.scale_a_, model.g_max);
    for (std::size_t d = 0; d < k; ++d) {
      const std::size_t idx = e * k + d;
      const ProgramResult pr = program_and_verify(target, model, rng::combine(device_key, idx), enc.t_encoded_);
      enc.devices_[idx] = pr.state;
      if (!pr.converged) ++enc.unconverged_;
    }
  }

  const std::size_t s = std::min(opts.calib_subset_max, enc.devices_.size());
  if (s > 0) {
    rng::Stream stream(rng::split(model.seed, "calib-subset"));
    enc.calib_subset_ = sample_without_replacement(enc.devices_.size(), s, stream);
    // Reference sum at first use, when no drift has accumulated yet.
    const std::uint64_t nonce = enc.next_read_nonce();
    double sum = 0.0;
    for (std::size_t idx : enc.calib_subset_)
      sum += read_current_unchecked(enc.devices_[idx], f_ref, 0.0, model, nonce) / f_ref;
    enc.calib_reference_ = sum;
  }
  return enc;
}

Eigen::MatrixXd CrossbarEncoding::encoded_matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e)
      m(static_cast<Eigen::Index>(i), col_index_[e]) = sign_[e] * value_[e];
  return m;
}

nlohmann::json CrossbarEncoding::metadata() const {
  nlohmann::json j;
  j["rows"] = rows_;
  j["cols"] = cols_;
  j["k_per_element"] = k_;
  j["band_halfwidth"] = band_ ? nlohmann::json(*band_) : nlohmann::json(nullptr);
  j["scale_a_uS_per_unit"] = scale_a_;
  j["alpha"] = alpha_;
  j["nnz"] = nnz();
  j["device_count"] = device_count();
  j["unconverged_devices"] = unconverged_;
  j["calib_subset_size"] = calib_subset_.size();
  j["calib_reference_sum_uS"] = calib_reference_;
  j["calibration_factor"] = calibration_factor();
  j["t_encoded"] = t_encoded_;
  j["seed"] = model_.seed;
  j["noise_model"] = model_;
  return j;
}

MatvecResult analog_matvec(const CrossbarEncoding& enc, std::span<const double> v, double t_now) {
  if (v.size() != enc.cols_)
    throw DomainError("analog_matvec: vector length " + std::to_string(v.size()) + " != " +
                      std::to_string(enc.cols_));
  MatvecResult out;
  out.w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(enc.rows_));
  out.calib_factor_applied = enc.calibration_factor();

  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, std::abs(x));
  if (vmax == 0.0) return out;
  const double scale_v = kReadVoltageMax / vmax;

  const NoiseModel& model = enc.model_;
  const std::size_t k = static_cast<std::size_t>(enc.k_);
  // Per column: f(V_read) for the device reads, and the digital factor that
  // turns the K-summed current back into a signed matrix-unit product.
  std::vector<double> f_read(enc.cols_), col_factor(enc.cols_);
  for (std::size_t j = 0; j < enc.cols_; ++j) {
    const double target = std::abs(v[j]) * scale_v;
    if (target == 0.0) continue;
    const double vr = read_voltage_for(target);
    f_read[j] = model.iv(vr);
    col_factor[j] = std::copysign(target, v[j]) /
                    (enc.alpha_ * f_read[j] * static_cast<double>(k) * enc.scale_a_ * scale_v);
  }

  const double log_ratio = drift_log_ratio_at(enc, t_now);
  const std::uint64_t nonce = enc.next_read_nonce();
  std::size_t ops = 0;
  for (std::size_t i = 0; i < enc.rows_; ++i) {
    double acc = 0.0;
    for (std::size_t e = enc.row_ptr_[i]; e < enc.row_ptr_[i + 1]; ++e) {
      const std::uint32_t j = enc.col_index_[e];
      if (col_factor[j] == 0.0) continue;
      double current = 0.0;
      for (std::size_t d = 0; d < k; ++d)
        current += read_current_unchecked(enc.devices_[e * k + d], f_read[j], log_ratio, model, nonce);
      acc += enc.sign_[e] * current * col_factor[j];
      ++ops;
    }
    out.w[static_cast<Eigen::Index>(i)] = acc * out.calib_factor_applied;
  }
  out.analog_ops = ops;
  return out;
}

double measure_drift_factor(const CrossbarEncoding& enc, double t_now) {
  if (enc.calib_subset().empty()) throw CalibrationError("calibrate_drift: empty calibration subset");
  const NoiseModel& model = enc.model();
  const double f_ref = model.iv(model.v_read_ref);
  const double log_ratio = drift_log_ratio_at(enc, t_now);
  const std::uint64_t nonce = enc.next_read_nonce();
  double sum = 0.0;
  for (std::size_t idx : enc.calib_subset())
    sum += read_current_unchecked(enc.devices()[idx], f_ref, log_ratio, model, nonce) / f_ref;
  if (!(sum > 0.0)) throw CalibrationError("calibrate_drift: summed conductance is not positive");
  return enc.calib_reference_sum() / sum;
}

double calibrate_drift(CrossbarEncoding& enc, double t_now) {
  const double f = measure_drift_factor(enc, t_now);
  enc.set_calibration_factor(f);
  return f;
}

double scalar_multiply(double beta, double gamma, int k, const NoiseModel& model, std::uint64_t rng_stream) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("scalar_multiply: beta outside [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("scalar_multiply: gamma outside [0, 1]");
  if (k < 1) throw DomainError("scalar_multiply: K must be >= 1");

  const double target_v = gamma * kReadVoltageMax;
  if (target_v == 0.0) return 0.0;
  const double vr = read_voltage_for(target_v);
  const double f_v = model.iv(vr);
  const double f_ref = model.iv(model.v_read_ref);
  const double alpha = model.quantize(model.g_max * f_ref) / (model.g_max * f_ref);

  double current = 0.0;
  for (int d = 0; d < k; ++d) {
    const std::uint64_t stream = rng::combine(rng_stream, static_cast<std::uint64_t>(d));
    const ProgramResult pr = program_and_verify(beta * model.g_max, model, stream);
    // Read right at the first-use time: no drift.
    current += read_current_unchecked(pr.state, f_v, 0.0, model, 0);
  }
  const double g_hat = current / (k * alpha * f_v);
  return (g_hat / model.g_max) * (target_v / kReadVoltageMax);
}

}  // namespace mpim
