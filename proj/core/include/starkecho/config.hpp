#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "starkecho/fit.hpp"

namespace starkecho {

/// Flat dotted-key run configuration. Fields hold the raw user-unit values
/// (ordinary MHz, kHz Stark coefficients, us times); the builder methods
/// convert to the internal angular units exactly once. Unknown keys are
/// rejected at parse time; every default lives here and in the README table,
/// nowhere else.
struct RunConfig {
  CVec3 dipole_d = CVec3::UnitX();
  CVec3 dipole_m = CVec3::Zero();
  double dipole_n = 1.0;

  Vec3 light_khat = Vec3::UnitZ();
  CVec3 light_epsilon = CVec3::UnitX();
  double light_e0_mhz = 1.0;  // Rabi frequency in MHz for a unit moment
  double light_omega0_mhz = 0.0;

  double t_pi2_us = 0.25;
  double t_pi_us = 0.5;
  double tau_us = 10.0;

  double stark_shift_khz = 50.0;  // kHz/(V/cm)
  double stark_voltage_v = 10.0;
  double stark_plate_cm = 1.0;
  double stark_t_on_us = 0.1;
  double stark_window_start_us = 0.0;
  double stark_guard_us = 1.5;

  std::string ensemble_shape = "flat";
  double ensemble_width_mhz = 80.0;
  double ensemble_span_mhz = 80.0;
  int ensemble_count = 2000;

  double t1_us = inf;
  double t2_us = inf;

  std::optional<CVec3> detection_e1;  // empty: drive polarization
  std::optional<CVec3> detection_e2;  // empty: conj(khat x e1)

  std::string scan_axis = "on_time";
  int scan_samples = 121;
  double scan_min = 0.1;
  std::optional<double> scan_max;  // empty: tau - guard, or the voltage
  std::string scan_observable = "peak";

  int window_points = 501;
  double window_half_width_us = 0.0;  // 0: automatic

  int threads = 1;
  std::uint64_t seed = 12345;

  std::string fit_decay = "auto";
  std::string fit_channel = "parallel";
  int fit_max_iterations = 200;
  double fit_f_threshold = 8.0;

  DipoleSet dipoles() const;
  LightField light() const;
  EchoSequence sequence() const;
  StarkConfig stark_config() const;
  StarkPulse stark_pulse() const;
  EnsembleSpec ensemble() const;
  Relaxation relaxation() const;
  DetectionBasis detection() const;
  ObservationWindow window() const;
  ScanSettings scan_settings() const;
  FitOptions fit_options() const;
  TraceChannel fit_trace_channel() const;

  /// Builds every view once, surfacing any inconsistency as ValidationError.
  void validate() const;
};

/// `key = value` lines, # comments, blank lines. Unknown or duplicate keys
/// are errors. Complex numbers are written (re,im); vectors are three
/// whitespace-separated entries; inf is accepted for relaxation times.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical serialization (fixed key order, full precision) and its FNV-1a
/// hash, recorded in outputs so results can be traced to their inputs.
/// run.threads is excluded: it schedules work but never changes a number.
std::string canonical_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

}  // namespace starkecho
