#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mpim {

/// Upper end of the programmable conductance range, in microsiemens.
inline constexpr double kDefaultGMax = 50.0;
/// Hardware read-voltage window, in volts.
inline constexpr double kReadVoltageMin = 0.1;
inline constexpr double kReadVoltageMax = 0.3;

/// Polynomial current/voltage characteristic f(V) = sum_k c_k V^k, k >= 1.
/// There is no constant term, so f(0) = 0 always holds.
class IvCurve {
public:
  IvCurve() : coeffs_{1.0} {}
  /// coeffs[0] multiplies V, coeffs[1] multiplies V^2, ...
  explicit IvCurve(std::vector<double> coeffs);

  static IvCurve linear() { return IvCurve({1.0}); }
  /// c = (1, 1.5, 2.5) rescaled so that f(0.2) = 0.2.
  static IvCurve default_cubic();

  double operator()(double v) const noexcept;
  double derivative(double v) const noexcept;
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }

  /// f(0) = 0 and f' > 0 on [0, 0.3].
  bool strictly_increasing_on_read_range() const;

private:
  std::vector<double> coeffs_;
};

/// Stochastic and nonideal behaviour of the simulated PCM array. Every random
/// draw is derived from `seed`.
struct NoiseModel {
  double g_max = kDefaultGMax;          // uS
  double sigma_prog = 0.3;              // uS, additive error per programming pulse
  double sigma_read_rel = 0.02;         // relative std of one read
  double drift_nu_mean = 0.05;
  double drift_nu_std = 0.01;
  double drift_t0 = 25.0;               // s after programming where G = G_programmed
  IvCurve iv = IvCurve::default_cubic();
  std::optional<int> adc_bits;          // none = ideal current sensing
  double v_read_ref = 0.2;              // V, conductance is I/V at this voltage
  double program_margin = 1.74;         // uS, program-and-verify acceptance band
  int program_max_iters = 20;
  std::uint64_t seed = 0;

  /// Noise, drift and quantization all disabled, linear f.
  static NoiseModel noiseless();
  /// Defaults with every noise standard deviation divided by ten.
  static NoiseModel low_noise();

  NoiseModel without_drift() const {
    NoiseModel m = *this;
    m.drift_nu_mean = 0.0;
    m.drift_nu_std = 0.0;
    return m;
  }

  /// Throws DomainError when a parameter is out of range.
  void validate() const;

  /// Largest current the ADC can represent, g_max * f(0.3).
  double adc_full_scale() const noexcept;
  /// Uniform quantization of a current onto the ADC grid; identity when no ADC.
  double quantize(double current) const noexcept;
};

void to_json(nlohmann::json& j, const NoiseModel& m);
void from_json(const nlohmann::json& j, NoiseModel& m);

}  // namespace mpim
