#pragma once

#include <string>
#include <vector>

#include "starkecho/echo.hpp"

namespace starkecho {

enum class ScanAxis { on_time, voltage };
enum class EchoScalar { peak, area };
enum class TraceChannel { parallel, perp, total };

/// Plate-capacitor Stark drive. shift_coeff is the linear Stark coefficient
/// in kHz per (V/cm); the applied shift is shift_coeff * voltage / plate_cm.
struct StarkConfig {
  double shift_coeff = 50.0;  // kHz/(V/cm)
  double voltage = 10.0;      // V
  double plate_cm = 1.0;      // cm

  double applied_shift_mhz() const {
    return 1e-3 * shift_coeff * voltage / plate_cm;
  }
  double applied_shift() const {  // rad/us
    return mhz_to_rad_us(applied_shift_mhz());
  }
  void validate() const;
};

/// Echo scalar versus Stark on-time (x in us) or voltage (x in V).
struct ModulationTrace {
  ScanAxis axis = ScanAxis::on_time;
  std::vector<double> x;
  std::vector<double> I_parallel, I_perp, I_total;
  StarkConfig meta;
  double fixed_t_on = 0.0;  // voltage axis: the constant window length, us
  EchoScalar observable = EchoScalar::peak;

  const std::vector<double>& channel(TraceChannel c) const;
};

struct ScanSettings {
  ScanAxis axis = ScanAxis::on_time;
  int samples = 121;
  double x_min = 0.1;
  double x_max = 0.0;  // <= x_min: automatic (tau - guard, or the voltage)
  EchoScalar observable = EchoScalar::peak;
  int threads = 1;
};

/// Sweep the Stark window length (or plate voltage) and record the echo
/// scalar per detection channel. On the voltage axis the window length is
/// taken from stark_window.t_on; its shift field is recomputed per sample.
ModulationTrace scan(const EchoSequence& seq, const StarkConfig& cfg,
                     const StarkPulse& stark_window, const EnsembleSpec& ens,
                     const DipoleSet& dip, const LightField& light,
                     const DetectionBasis& basis, const Relaxation& relax,
                     const ObservationWindow& window,
                     const ScanSettings& settings);

/// Extrema-based summary of a modulation trace. frequency counts intensity
/// oscillations per x unit (MHz on an on-time axis); phase is relative to a
/// zero-phase cos^2; decay is the Gaussian envelope constant (x^2 units), inf
/// when the maxima do not decay. Throws ShortTraceError / NotModulatedError.
struct ModulationMetrics {
  double frequency = 0.0;
  double visibility = 0.0;
  double phase = 0.0;
  double decay = inf;
};

ModulationMetrics modulation_metrics(const ModulationTrace& trace,
                                     TraceChannel channel = TraceChannel::parallel);

/// Decomposition of the branch-resolved Stark coefficients measured on the
/// two Zeeman transitions: upper = delta_o + delta_g, lower = delta_o -
/// delta_g, with delta_g signed. Exact in both directions.
struct ZeemanBranchShifts {
  double lower = 0.0;
  double upper = 0.0;
  double delta_o = 0.0;
  double delta_g = 0.0;

  static ZeemanBranchShifts from_branches(double lower, double upper);
  static ZeemanBranchShifts from_components(double delta_o, double delta_g);
};

inline ZeemanBranchShifts zeeman_branch_shifts(double lower, double upper) {
  return ZeemanBranchShifts::from_branches(lower, upper);
}

/// Quadratic field dependence delta_g = kappa * B^2 per field value.
/// kappa in kHz/T^2/(V/cm), B in tesla.
std::vector<double> gshift_vs_field(double kappa,
                                    const std::vector<double>& b_values);

}  // namespace starkecho
