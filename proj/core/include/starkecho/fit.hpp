#pragma once

#include <optional>

#include "starkecho/scan.hpp"

namespace starkecho {

/// Parameters of the modulation model
///   I(t) = A [cos^2(2pi * 1e-3 * delta_s * (V/d) * t + phi)
///             + (1 - W)/(2W)] * exp(-t^2 / C)
/// with delta_s in kHz/(V/cm), V in volts, d in cm, t in us. W is the
/// visibility on (0, 1]; C = inf disables the envelope. On a voltage-axis
/// trace V is the running variable and t is fixed.
struct FitModelParams {
  double A = 1.0;
  double delta_s = 10.0;
  double phi = 0.0;
  double W = 1.0;
  double C = inf;

  void validate() const;
};

double model_eval(const FitModelParams& p, double t_on_us, double voltage,
                  double plate_cm);

namespace detail {
// d(model)/d(A, delta_s, phi, W, C) at one point; finite-difference checked
Eigen::Matrix<double, 5, 1> model_grad(const FitModelParams& p, double t_on_us,
                                       double voltage, double plate_cm);
}  // namespace detail

enum class DecayMode { automatic, on, off };

struct FitOptions {
  DecayMode decay = DecayMode::automatic;
  int max_iterations = 200;
  double f_threshold = 8.0;  // required F-ratio to accept the freed envelope
  // convergence when every Jacobian column is this close to orthogonal to
  // the residual (scale-free, as in MINPACK lmdif); a cosine of 1e-6 caps
  // the attainable relative SSR improvement at 1e-12
  double gtol = 1e-6;
  // convergence when an accepted step improves SSR by less than this
  // relative amount; catches near-exact fits whose residual is rounding
  // noise with no meaningful gradient direction left
  double ftol = 1e-12;
};

/// Least-squares result. Uncertainties are 1-sigma from the unit-weight
/// covariance scaled by SSR/(N - k); sigma reuses the parameter struct to
/// hold per-parameter values.
struct FitResult {
  FitModelParams params;
  FitModelParams sigma;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> ssr_history;  // accepted steps, strictly decreasing
};

/// Damped least squares on one trace channel. A is fitted through a log, W
/// through a logistic onto (0, 1], C through a log with inf meaning "no
/// envelope". In automatic decay mode the envelope-free fit runs first and C
/// is freed only when it improves the residual by the configured F-ratio.
/// Throws NotModulatedError on a constant trace; a fit that exhausts
/// max_iterations comes back with converged = false.
FitResult fit_trace(const ModulationTrace& trace,
                    TraceChannel channel = TraceChannel::parallel,
                    std::optional<FitModelParams> init = std::nullopt,
                    const FitOptions& options = {});

/// Seed parameters from extrema spacing and envelope, no FFT involved.
/// Throws like modulation_metrics when the trace cannot seed a fit.
FitModelParams initial_guess(const ModulationTrace& trace,
                             TraceChannel channel = TraceChannel::parallel);

}  // namespace starkecho
