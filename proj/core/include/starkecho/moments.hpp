#pragma once

#include "starkecho/errors.hpp"
#include "starkecho/vec.hpp"

namespace starkecho {

/// Inversion-partner sub-site label. The electric transition dipole is odd
/// under the local inversion while the magnetic one is even, so the two
/// sub-sites couple to light through different combined moments.
enum class SubSite : int { plus = +1, minus = -1 };

inline double parity(SubSite s) { return s == SubSite::plus ? +1.0 : -1.0; }

/// Electric and magnetic transition dipoles of one ion class, in common
/// Rabi-per-field units. The refractive-index-over-c factor that puts the
/// magnetic moment on the same footing as the electric one is folded into m
/// at construction; n is carried for bookkeeping.
struct DipoleSet {
  CVec3 d = CVec3::UnitX();
  CVec3 m = CVec3::Zero();
  double n = 1.0;

  void validate() const;
};

/// Plane-wave drive field. epsilon is the (possibly complex) unit
/// polarization, khat the real unit propagation direction, e0 the amplitude
/// in rad/us per unit moment. omega0 is the optical carrier, bookkeeping
/// only: all dynamics run in the rotating frame.
struct LightField {
  CVec3 epsilon = CVec3::UnitX();
  Vec3 khat = Vec3::UnitZ();
  double e0 = two_pi;
  double omega0 = 0.0;

  void validate() const;
};

/// Combined transition moment seen by light along khat:
///   mu = parity * d + m x khat
/// The magnetic term is even under inversion, so it is shared by both
/// sub-sites while the electric term flips sign.
CVec3 total_moment(const DipoleSet& dip, const Vec3& khat, SubSite site);

/// Complex Rabi frequency chi = e0 * (mu . epsilon), bilinear in mu and
/// epsilon (no conjugation). A global sign on chi is gauge; observables
/// depend on mutual phases between sub-sites only.
cplx rabi_frequency(const CVec3& mu, const CVec3& epsilon, double e0);

}  // namespace starkecho
