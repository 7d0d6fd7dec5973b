#pragma once

#include <utility>
#include <vector>

#include "starkecho/dynamics.hpp"
#include "starkecho/moments.hpp"

namespace starkecho {

/// Two-pulse echo sequence. tau is start-of-pulse to start-of-pulse and the
/// echo forms near t = 2*tau measured from the start of the first pulse.
/// t_pi = 0 drops the rephasing pulse entirely (no echo forms; useful as a
/// control). The drive amplitude and polarization are shared by both pulses.
struct EchoSequence {
  double t_pi2 = 0.25;
  double t_pi = 0.5;
  double tau = 10.0;
  double pulse_amplitude = two_pi;
  CVec3 pulse_polarization = CVec3::UnitX();

  void validate() const;
};

/// Electric field window inside the first free interval. shift (rad/us) is
/// the precession offset one sub-site acquires while the field is on; the
/// inversion partner gets -shift. window_start is measured from the end of
/// the first optical pulse. guard keeps the window clear of the rephasing
/// pulse: t_on may not exceed tau - guard.
struct StarkPulse {
  double t_on = 0.0;
  double shift = 0.0;
  double window_start = 0.0;
  double guard = 1.5;

  void validate(const EchoSequence& seq) const;
};

enum class ProfileShape { flat, gaussian };

/// Inhomogeneous detuning distribution, angular units (rad/us). width is the
/// full width: a hard cutoff for flat, FWHM for gaussian. count detunings
/// are sampled evenly over span, endpoints included.
struct EnsembleSpec {
  ProfileShape shape = ProfileShape::flat;
  double width = mhz_to_rad_us(80.0);
  double span = mhz_to_rad_us(80.0);
  int count = 2000;

  void validate() const;
};

struct Ensemble {
  std::vector<double> detuning;
  std::vector<double> weight;  // normalized to sum 1
};

Ensemble build_ensemble(const EnsembleSpec& spec);

struct Relaxation {
  double T1 = inf;
  double T2 = inf;
};

/// Orthonormal polarization analyzer pair, both transverse to khat.
struct DetectionBasis {
  CVec3 e1 = CVec3::UnitX();
  CVec3 e2 = CVec3::UnitY();

  /// e1 = drive polarization, e2 = conj(khat x e1), normalized.
  static DetectionBasis standard(const LightField& light);
  void validate(const Vec3& khat) const;
};

/// Observation grid around the echo. half_width = 0 picks one automatically:
/// wide enough for the 1/width echo feature plus the pulse-length timing
/// offset of the rephasing point.
struct ObservationWindow {
  double half_width = 0.0;
  int points = 501;
};

struct EchoObservables {
  std::vector<double> t_grid;
  std::vector<CVec3> P;  // complex envelope of the ensemble polarization
  std::vector<double> I_parallel, I_perp, I_total;

  struct Channel {
    double peak_intensity = 0.0;
    double integrated_area = 0.0;
    double peak_time = 0.0;
  };
  Channel parallel, perp, total;
};

/// I_k(t) = |P(t) . conj(e_k)|^2 for the two analyzer channels.
std::pair<std::vector<double>, std::vector<double>> polarized_intensities(
    const std::vector<CVec3>& P, const DetectionBasis& basis);

/// Propagate both sub-sites over the ensemble through pi/2 - (Stark window) -
/// pi and accumulate the polarization envelope on a grid around 2*tau.
/// Detunings are reduced in fixed ascending order regardless of threads, so
/// results are bit-reproducible for any thread count.
EchoObservables simulate_echo(const EchoSequence& seq, const StarkPulse& stark,
                              const EnsembleSpec& ens, const DipoleSet& dip,
                              const LightField& light,
                              const DetectionBasis& basis,
                              const Relaxation& relax = {},
                              const ObservationWindow& window = {},
                              int threads = 1);

}  // namespace starkecho
