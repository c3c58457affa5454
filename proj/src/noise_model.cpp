#include "mpim/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "mpim/errors.hpp"

namespace mpim {

IvCurve::IvCurve(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw DomainError("IvCurve: at least one coefficient required");
}

IvCurve IvCurve::default_cubic() {
  std::vector<double> c{1.0, 1.5, 2.5};
  const double raw = IvCurve(c)(0.2);
  for (double& x : c) x *= 0.2 / raw;
  return IvCurve(std::move(c));
}

double IvCurve::operator()(double v) const noexcept {
  // Horner on c1 + c2 v + ..., then one more factor of v.
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * v + *it;
  return acc * v;
}

double IvCurve::derivative(double v) const noexcept {
  double acc = 0.0;
  for (std::size_t k = coeffs_.size(); k-- > 0;) acc = acc * v + static_cast<double>(k + 1) * coeffs_[k];
  return acc;
}

bool IvCurve::strictly_increasing_on_read_range() const {
  constexpr int kSamples = 3001;
  for (int i = 0; i < kSamples; ++i) {
    const double v = kReadVoltageMax * i / (kSamples - 1);
    if (!(derivative(v) > 0.0)) return false;
  }
  return true;
}

NoiseModel NoiseModel::noiseless() {
  NoiseModel m;
  m.sigma_prog = 0.0;
  m.sigma_read_rel = 0.0;
  m.drift_nu_mean = 0.0;
  m.drift_nu_std = 0.0;
  m.iv = IvCurve::linear();
  m.adc_bits.reset();
  return m;
}

NoiseModel NoiseModel::low_noise() {
  NoiseModel m;
  m.sigma_prog /= 10.0;
  m.sigma_read_rel /= 10.0;
  m.drift_nu_std /= 10.0;
  return m;
}

void NoiseModel::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("NoiseModel: " + msg); };
  if (!(g_max > 0.0)) fail("g_max must be positive");
  if (sigma_prog < 0.0 || sigma_read_rel < 0.0 || drift_nu_std < 0.0)
    fail("standard deviations must be >= 0");
  if (drift_nu_mean < 0.0) fail("drift_nu_mean must be >= 0");
  if (!(drift_t0 > 0.0)) fail("drift_t0 must be positive");
  if (adc_bits && (*adc_bits < 1 || *adc_bits > 16)) fail("adc_bits must be in 1..16");
  if (v_read_ref < kReadVoltageMin || v_read_ref > kReadVoltageMax)
    fail("v_read_ref must lie in the read window [0.1, 0.3] V");
  if (!(program_margin > 0.0)) fail("program_margin must be positive");
  if (program_max_iters < 1) fail("program_max_iters must be >= 1");
  if (!iv.strictly_increasing_on_read_range()) fail("f(V) must be strictly increasing on [0, 0.3] V");
}

double NoiseModel::adc_full_scale() const noexcept { return g_max * iv(kReadVoltageMax); }

double NoiseModel::quantize(double current) const noexcept {
  if (!adc_bits) return current;
  const double full = adc_full_scale();
  const double levels = static_cast<double>((1u << *adc_bits) - 1u);
  const double lsb = full / levels;
  return std::clamp(std::round(current / lsb), 0.0, levels) * lsb;
}

void to_json(nlohmann::json& j, const NoiseModel& m) {
  j = nlohmann::json{{"g_max", m.g_max},
                     {"sigma_prog", m.sigma_prog},
                     {"sigma_read_rel", m.sigma_read_rel},
                     {"drift_nu_mean", m.drift_nu_mean},
                     {"drift_nu_std", m.drift_nu_std},
                     {"drift_t0", m.drift_t0},
                     {"iv_coeffs", m.iv.coeffs()},
                     {"adc_bits", m.adc_bits ? nlohmann::json(*m.adc_bits) : nlohmann::json(nullptr)},
                     {"v_read_ref", m.v_read_ref},
                     {"program_margin", m.program_margin},
                     {"program_max_iters", m.program_max_iters},
                     {"seed", m.seed}};
}

void from_json(const nlohmann::json& j, NoiseModel& m) {
  // Missing keys keep their defaults, so partial blocks are allowed.
  auto get = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) it->get_to(field);
  };
  get("g_max", m.g_max);
  get("sigma_prog", m.sigma_prog);
  get("sigma_read_rel", m.sigma_read_rel);
  get("drift_nu_mean", m.drift_nu_mean);
  get("drift_nu_std", m.drift_nu_std);
  get("drift_t0", m.drift_t0);
  get("v_read_ref", m.v_read_ref);
  get("program_margin", m.program_margin);
  get("program_max_iters", m.program_max_iters);
  get("seed", m.seed);
  if (auto it = j.find("iv_coeffs"); it != j.end()) m.iv = IvCurve(it->get<std::vector<double>>());
  if (auto it = j.find("adc_bits"); it != j.end()) {
    if (it->is_null())
      m.adc_bits.reset();
    else
      m.adc_bits = it->get<int>();
  }
}

}  // namespace mpim
