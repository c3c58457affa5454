#include "mpim/pcm_device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpim/errors.hpp"
#include "mpim/rng.hpp"

namespace mpim {
namespace {

constexpr std::uint64_t kProgramTag = rng::tag_hash("program");
constexpr std::uint64_t kVerifyTag = rng::tag_hash("verify");
constexpr std::uint64_t kDriftTag = rng::tag_hash("drift-nu");

double drift_log_ratio(double elapsed, double t0) noexcept {
  return elapsed > t0 ? std::log(elapsed / t0) : 0.0;
}

}  // namespace

ProgramResult program_and_verify(double target_g, double margin, int max_iters,
                                 const NoiseModel& model, std::uint64_t rng_stream,
                                 double t_program) {
  if (!(target_g >= 0.0 && target_g <= model.g_max))
    throw DomainError("program_and_verify: target " + std::to_string(target_g) +
                      " uS outside [0, g_max]");
  if (!(margin > 0.0)) throw DomainError("program_and_verify: margin must be positive");
  if (max_iters < 1) throw DomainError("program_and_verify: max_iters must be >= 1");

  ProgramResult result;
  result.state.t_program = t_program;
  result.state.rng_stream = rng_stream;
  const double nu = model.drift_nu_mean +
                    model.drift_nu_std * rng::normal(rng::combine(rng_stream, kDriftTag), 0);
  result.state.drift_nu = std::max(0.0, nu);

  if (target_g == 0.0) {
    result.converged = true;
    return result;
  }

  const std::uint64_t pulse_key = rng::combine(rng_stream, kProgramTag);
  const std::uint64_t verify_key = rng::combine(rng_stream, kVerifyTag);
  const double f_ref = model.iv(model.v_read_ref);

  double best_error = std::numeric_limits<double>::infinity();
  DeviceState candidate = result.state;
  for (int it = 0; it < max_iters; ++it) {
    candidate.g_programmed = std::clamp(
        target_g + model.sigma_prog * rng::normal(pulse_key, static_cast<std::uint64_t>(it)),
        0.0, model.g_max);
    // Verify happens right after the pulse, before any drift.
    const double g_read =
        read_current_unchecked(candidate, f_ref, 0.0, model,
                               rng::combine(verify_key, static_cast<std::uint64_t>(it))) /
        f_ref;
    const double err = std::abs(g_read - target_g);
    result.iterations = it + 1;
    if (err < best_error) {
      best_error = err;
      result.state = candidate;
      result.verify_read = g_read;
    }
    if (err <= margin) {
      result.state = candidate;
      result.verify_read = g_read;
      result.converged = true;
      return result;
    }
  }
  return result;
}

ProgramResult program_and_verify(double target_g, const NoiseModel& model, std::uint64_t rng_stream,
                                 double t_program) {
  return program_and_verify(target_g, model.program_margin, model.program_max_iters, model,
                            rng_stream, t_program);
}

double apply_drift(double g0, double t, double t0, double nu) {
  if (!(t0 > 0.0)) throw DomainError("apply_drift: t0 must be positive");
  if (t < t0) throw DomainError("apply_drift: t must be >= t0");
  if (nu < 0.0) throw DomainError("apply_drift: nu must be >= 0");
  if (nu == 0.0 || t == t0) return g0;
  return g0 * std::pow(t / t0, -nu);
}

double effective_conductance(const DeviceState& dev, double t_now, const NoiseModel& model) noexcept {
  const double lr = drift_log_ratio(t_now - dev.t_program, model.drift_t0);
  if (lr == 0.0 || dev.drift_nu == 0.0) return dev.g_programmed;
  return dev.g_programmed * std::exp(-dev.drift_nu * lr);
}

double read_current(const DeviceState& dev, double v, double t_now, const NoiseModel& model,
                    std::uint64_t read_nonce) {
  if (!(v >= 0.0 && v <= kReadVoltageMax))
    throw DomainError("read_current: voltage " + std::to_string(v) + " V outside [0, 0.3]");
  if (t_now < dev.t_program) throw DomainError("read_current: t_now precedes programming");
  return read_current_unchecked(dev, model.iv(v),
                                drift_log_ratio(t_now - dev.t_program, model.drift_t0), model,
                                read_nonce);
}

double read_current_unchecked(const DeviceState& dev, double f_v, double drift_log_ratio,
                              const NoiseModel& model, std::uint64_t read_nonce) noexcept {
  if (dev.g_programmed == 0.0) return 0.0;
  double g = dev.g_programmed;
  if (drift_log_ratio != 0.0 && dev.drift_nu != 0.0) g *= std::exp(-dev.drift_nu * drift_log_ratio);
  double current = g * f_v;
  if (model.sigma_read_rel != 0.0)
    current *= 1.0 + model.sigma_read_rel * rng::normal(dev.rng_stream, read_nonce);
  return model.quantize(std::max(current, 0.0));
}

}  // namespace mpim
