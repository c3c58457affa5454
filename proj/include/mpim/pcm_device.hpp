#pragma once

#include <cstdint>

#include "mpim/noise_model.hpp"

namespace mpim {

/// One simulated phase-change memory cell. Immutable once programmed; reads
/// are pure functions of (state, time, read nonce).
struct DeviceState {
  double g_programmed = 0.0;  // uS, conductance at t_program + drift_t0
  double t_program = 0.0;     // s
  double drift_nu = 0.0;
  std::uint64_t rng_stream = 0;

  friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

struct ProgramResult {
  DeviceState state;
  bool converged = false;
  int iterations = 0;        // programming pulses applied
  double verify_read = 0.0;  // last accepted verify read, uS
};

/// Iterative program-and-verify. Each pulse moves the cell to the target with
/// an additive N(0, sigma_prog) error (clamped to [0, g_max]); the following
/// verify read at v_read_ref accepts the state once it lies within `margin`.
/// A zero target needs no pulse. When `max_iters` pulses do not converge the
/// state with the smallest verify error is returned with converged = false.
ProgramResult program_and_verify(double target_g, double margin, int max_iters,
                                 const NoiseModel& model, std::uint64_t rng_stream,
                                 double t_program = 0.0);

/// Overload using the margin and iteration budget stored in the model.
ProgramResult program_and_verify(double target_g, const NoiseModel& model,
                                 std::uint64_t rng_stream, double t_program = 0.0);

/// Power-law drift g0 * (t / t0)^(-nu).
double apply_drift(double g0, double t, double t0, double nu);

/// Conductance at t_now; no drift before drift_t0 has elapsed.
double effective_conductance(const DeviceState& dev, double t_now, const NoiseModel& model) noexcept;

/// Read current in uA at voltage v: G_eff(t) * f(v) * (1 + eps_read), quantized
/// by the ADC when one is configured. `read_nonce` selects the noise sample;
/// equal (state, v, t, nonce) give bit-identical results.
double read_current(const DeviceState& dev, double v, double t_now, const NoiseModel& model,
                    std::uint64_t read_nonce);

/// Same as read_current without domain checks; for the crossbar inner loop.
/// `drift_log_ratio` is log((t_now - t_program) / drift_t0), clamped at 0.
double read_current_unchecked(const DeviceState& dev, double f_v, double drift_log_ratio,
                              const NoiseModel& model, std::uint64_t read_nonce) noexcept;

}  // namespace mpim
