#pragma once

#include <functional>
#include <limits>

#include "starkecho/errors.hpp"
#include "starkecho/vec.hpp"

namespace starkecho {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Rotating-frame density matrix of one two-level ion, basis a = ground,
/// b = excited. rho_ab is <a|rho|b>; rho_ba is its conjugate and not stored.
struct TwoLevelState {
  double rho_aa = 1.0;
  double rho_bb = 0.0;
  cplx rho_ab = 0.0;

  static TwoLevelState ground() { return {}; }
  double trace() const { return rho_aa + rho_bb; }

  Eigen::Vector4d to_vec() const {
    return {rho_aa, rho_bb, rho_ab.real(), rho_ab.imag()};
  }
  static TwoLevelState from_vec(const Eigen::Vector4d& v) {
    return {v(0), v(1), cplx(v(2), v(3))};
  }
};

/// Square pulse in the rotating frame. chi is the complex Rabi frequency
/// (rad/us), detuning the ion offset from the drive (rad/us), duration in us.
/// Pulses are treated as unitary; relaxation acts only between them.
struct PulseParams {
  cplx chi = 0.0;
  double detuning = 0.0;
  double duration = 0.0;

  void validate() const;
};

/// Field-free interval. The coherence precesses at detuning + stark and
/// decays with T2; populations relax toward the ground state with T1.
/// stark is signed per sub-site by the caller.
struct FreeParams {
  double detuning = 0.0;
  double stark = 0.0;
  double duration = 0.0;
  double T1 = inf;
  double T2 = inf;

  void validate() const;
};

/// Affine map on (rho_aa, rho_bb, Re rho_ab, Im rho_ab). Pulse maps are
/// linear (b = 0); free evolution with finite T1 is affine, the offset
/// feeding population back to the ground state. Sequences compose by the
/// matrix product, lhs * rhs meaning "rhs first".
struct StateMap {
  Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
  Eigen::Vector4d b = Eigen::Vector4d::Zero();

  TwoLevelState apply(const TwoLevelState& s) const {
    return TwoLevelState::from_vec(A * s.to_vec() + b);
  }
  friend StateMap operator*(const StateMap& lhs, const StateMap& rhs) {
    return {lhs.A * rhs.A, lhs.A * rhs.b + lhs.b};
  }
};

/// Exact unitary propagator for a square pulse, generalized Rabi rotation
/// at sqrt(|chi|^2 + detuning^2).
StateMap pulse_propagator(const PulseParams& p);

/// Analytic free-evolution propagator.
StateMap free_propagator(const FreeParams& p);

/// Fixed-step RK4 integration of the rotating-frame master equations with
/// time-dependent chi(t) and stark(t). Test oracle: shares no code with the
/// analytic propagators. Integrates over [t0, t1] twice, with `steps` and
/// 2*steps, and throws ConvergenceError if the halved step changes any
/// component by more than conv_tol.
TwoLevelState reference_evolve(const TwoLevelState& initial,
                               const std::function<cplx(double)>& chi,
                               double detuning,
                               const std::function<double(double)>& stark,
                               double T1, double T2, double t0, double t1,
                               int steps, double conv_tol = 1e-8);

}  // namespace starkecho
