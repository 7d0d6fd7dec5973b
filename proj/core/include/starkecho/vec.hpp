#pragma once

#include <Eigen/Dense>
#include <complex>
#include <numbers>

namespace starkecho {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Internal frequencies are angular, rad/us. The user-facing boundary speaks
// ordinary MHz (and kHz for Stark coefficients); these are the only two
// conversion points.
inline constexpr double mhz_to_rad_us(double f_mhz) { return two_pi * f_mhz; }
inline constexpr double rad_us_to_mhz(double w) { return w / two_pi; }

// Bilinear complex dot, no conjugation. Drive couplings use this; detection
// projections use the Hermitian product (Eigen's .dot).
inline cplx dot_bilinear(const CVec3& a, const CVec3& b) {
  return a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

inline bool is_unit(const Vec3& v, double tol = 1e-12) {
  return std::abs(v.norm() - 1.0) <= tol;
}

inline bool is_unit(const CVec3& v, double tol = 1e-12) {
  return std::abs(v.norm() - 1.0) <= tol;
}

}  // namespace starkecho
