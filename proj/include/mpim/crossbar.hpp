#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "mpim/noise_model.hpp"
#include "mpim/pcm_device.hpp"

namespace mpim {

/// Largest device subset read for drift calibration.
inline constexpr std::size_t kDefaultCalibSubset = 10000;

struct EncodeOptions {
  int k_per_element = 1;
  std::optional<int> band_halfwidth;
  std::size_t calib_subset_max = kDefaultCalibSubset;
  double t_encoded = 0.0;
};

/// Number of devices an encoding would use: K * nnz of the encoded region.
std::size_t count_devices(const Eigen::MatrixXd& a, int k_per_element,
                          std::optional<int> band_halfwidth);

/// A square matrix mapped onto K-averaged PCM device groups. Magnitudes live
/// in device conductances, signs are kept digitally. Element storage is
/// row-major CSR; the K devices of an element are contiguous.
class CrossbarEncoding {
public:
  CrossbarEncoding(const CrossbarEncoding&) = delete;
  CrossbarEncoding& operator=(const CrossbarEncoding&) = delete;
  CrossbarEncoding(CrossbarEncoding&& other) noexcept;
  CrossbarEncoding& operator=(CrossbarEncoding&& other) noexcept;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  int k_per_element() const noexcept { return k_; }
  std::optional<int> band_halfwidth() const noexcept { return band_; }
  /// uS per matrix unit.
  double scale_a() const noexcept { return scale_a_; }
  /// Pseudo-Ohm's-law gain, fixed by a noise-free read of (g_max, v_read_ref).
  double alpha() const noexcept { return alpha_; }
  std::size_t nnz() const noexcept { return col_index_.size(); }
  std::size_t device_count() const noexcept { return devices_.size(); }
  std::size_t unconverged_devices() const noexcept { return unconverged_; }
  double t_encoded() const noexcept { return t_encoded_; }
  /// First instant at which the array is used, t_encoded + drift_t0.
  double first_use_time() const noexcept { return t_encoded_ + model_.drift_t0; }
  const NoiseModel& model() const noexcept { return model_; }

  std::span<const DeviceState> devices() const noexcept { return devices_; }
  std::span<const std::size_t> calib_subset() const noexcept { return calib_subset_; }
  double calib_reference_sum() const noexcept { return calib_reference_; }

  /// Exact matrix the array represents (zero outside the band).
  Eigen::MatrixXd encoded_matrix() const;

  double calibration_factor() const noexcept { return calib_factor_.load(std::memory_order_acquire); }
  void set_calibration_factor(double f) noexcept { calib_factor_.store(f, std::memory_order_release); }

  /// Unique nonce for one array-wide read operation.
  std::uint64_t next_read_nonce() const noexcept {
    return read_counter_.fetch_add(1, std::memory_order_relaxed);
  }

  nlohmann::json metadata() const;

private:
  CrossbarEncoding() = default;
  friend CrossbarEncoding encode_matrix(const Eigen::MatrixXd&, const EncodeOptions&, const NoiseModel&);
  friend struct MatvecResult analog_matvec(const CrossbarEncoding&, std::span<const double>, double);

  std::size_t rows_ = 0, cols_ = 0;
  int k_ = 1;
  std::optional<int> band_;
  double scale_a_ = 0.0;
  double alpha_ = 1.0;
  double t_encoded_ = 0.0;
  NoiseModel model_;

  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_index_;
  std::vector<std::int8_t> sign_;
  std::vector<double> value_;  // exact encoded |A_ij|, for audit only
  std::vector<DeviceState> devices_;
  std::size_t unconverged_ = 0;

  std::vector<std::size_t> calib_subset_;
  double calib_reference_ = 0.0;
  std::atomic<double> calib_factor_{1.0};
  mutable std::atomic<std::uint64_t> read_counter_{0};
};

/// Program A onto the array. scale_a = g_max / max|A_ij| over the encoded
/// region. Throws ScalingError when that region is all zero.
CrossbarEncoding encode_matrix(const Eigen::MatrixXd& a, const EncodeOptions& opts,
                               const NoiseModel& model);

inline CrossbarEncoding encode_matrix(const Eigen::MatrixXd& a, int k_per_element,
                                      std::optional<int> band_halfwidth, const NoiseModel& model) {
  EncodeOptions opts;
  opts.k_per_element = k_per_element;
  opts.band_halfwidth = band_halfwidth;
  return encode_matrix(a, opts, model);
}

struct MatvecResult {
  Eigen::VectorXd w;
  std::size_t analog_ops = 0;
  double calib_factor_applied = 1.0;
};

/// w ~= A~ v. Element products are read in analog, averaged over K devices,
/// mapped back digitally with their signs and summed in double precision.
MatvecResult analog_matvec(const CrossbarEncoding& enc, std::span<const double> v, double t_now);

inline MatvecResult analog_matvec(const CrossbarEncoding& enc, const Eigen::VectorXd& v, double t_now) {
  return analog_matvec(enc, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), t_now);
}

/// Summed-conductance ratio reference / current over the calibration subset,
/// read at v_read_ref (with read noise). Does not modify the encoding.
double measure_drift_factor(const CrossbarEncoding& enc, double t_now);

/// Measure the drift factor and store it for subsequent matvecs.
double calibrate_drift(CrossbarEncoding& enc, double t_now);

/// Program K fresh devices to beta * g_max, read them at the voltage mapped
/// from gamma, and invert the mapping to estimate beta * gamma.
double scalar_multiply(double beta, double gamma, int k, const NoiseModel& model,
                       std::uint64_t rng_stream);

/// Read voltage used for a target voltage: targets below the window are read
/// at its lower edge and rescaled digitally.
constexpr double read_voltage_for(double target_v) noexcept {
  return target_v < kReadVoltageMin ? kReadVoltageMin : target_v;
}

}  // namespace mpim
