#include "starkecho/dynamics.hpp"

#include <cmath>

namespace starkecho {

void PulseParams::validate() const {
  if (!(duration >= 0.0))
    throw ValidationError("PulseParams: duration must be non-negative");
  if (!std::isfinite(chi.real()) || !std::isfinite(chi.imag()) ||
      !std::isfinite(detuning))
    throw ValidationError("PulseParams: chi and detuning must be finite");
}

void FreeParams::validate() const {
  if (!(duration >= 0.0))
    throw ValidationError("FreeParams: duration must be non-negative");
  if (!(T1 > 0.0) || !(T2 > 0.0))
    throw ValidationError("FreeParams: T1 and T2 must be positive");
  if (std::isfinite(T1) && std::isfinite(T2) && T2 > 2.0 * T1)
    throw ValidationError("FreeParams: T2 must not exceed 2*T1");
}

namespace {

double sinc(double z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

// column k of the 4x4 map is U E_k U^dag expressed in components, where E_k
// runs over the Hermitian component basis of (rho_aa, rho_bb, Re, Im)
Eigen::Matrix4d unitary_to_map(const Eigen::Matrix2cd& U) {
  static const cplx i(0.0, 1.0);
  Eigen::Matrix2cd basis[4];
  basis[0] << 1, 0, 0, 0;
  basis[1] << 0, 0, 0, 1;
  basis[2] << 0, 1, 1, 0;
  basis[3] << 0, i, -i, 0;
  Eigen::Matrix4d A;
  for (int k = 0; k < 4; ++k) {
    Eigen::Matrix2cd R = U * basis[k] * U.adjoint();
    A.col(k) << R(0, 0).real(), R(1, 1).real(), R(0, 1).real(), R(0, 1).imag();
  }
  return A;
}

}  // namespace

StateMap pulse_propagator(const PulseParams& p) {
  p.validate();
  static const cplx i(0.0, 1.0);
  // H/hbar = [[-D/2, chi*/2], [chi/2, D/2]], rotation about
  // n = (Re chi, Im chi, -D) by wg*t with wg = |n|
  const double wg = std::sqrt(std::norm(p.chi) + p.detuning * p.detuning);
  const double half = 0.5 * p.duration;
  const double c = std::cos(wg * half);
  const double s_over_wg = half * sinc(wg * half);

  Eigen::Matrix2cd U;
  U(0, 0) = c + i * p.detuning * s_over_wg;
  U(0, 1) = -i * std::conj(p.chi) * s_over_wg;
  U(1, 0) = -i * p.chi * s_over_wg;
  U(1, 1) = c - i * p.detuning * s_over_wg;

  return {unitary_to_map(U), Eigen::Vector4d::Zero()};
}

StateMap free_propagator(const FreeParams& p) {
  p.validate();
  const double g1 = std::exp(-p.duration / p.T1);
  const double g2 = std::exp(-p.duration / p.T2);
  const double th = (p.detuning + p.stark) * p.duration;
  const double cs = std::cos(th), sn = std::sin(th);

  StateMap m;
  m.A.setZero();
  m.A(0, 0) = g1;
  m.A(1, 1) = g1;
  m.A(2, 2) = g2 * cs;
  m.A(2, 3) = -g2 * sn;
  m.A(3, 2) = g2 * sn;
  m.A(3, 3) = g2 * cs;
  m.b(0) = 1.0 - g1;
  return m;
}

namespace {

Eigen::Vector4d master_rhs(const Eigen::Vector4d& y, const cplx& chi,
                           double w, double r1, double r2) {
  const cplx ab(y(2), y(3));
  const cplx dab = cplx(0.0, -0.5) * (y(1) - y(0)) * std::conj(chi) +
                   cplx(0.0, w) * ab - r2 * ab;
  const double pump = std::imag(chi * ab);
  const double daa = -pump + r1 * (1.0 - y(0));
  const double dbb = pump - r1 * y(1);
  return {daa, dbb, dab.real(), dab.imag()};
}

Eigen::Vector4d rk4_run(const Eigen::Vector4d& y0,
                        const std::function<cplx(double)>& chi,
                        double detuning,
                        const std::function<double(double)>& stark,
                        double r1, double r2, double t0, double t1, int n) {
  const double h = (t1 - t0) / n;
  Eigen::Vector4d y = y0;
  for (int k = 0; k < n; ++k) {
    const double t = t0 + k * h;
    const cplx xa = chi(t), xm = chi(t + 0.5 * h), xb = chi(t + h);
    const double wa = detuning + stark(t);
    const double wm = detuning + stark(t + 0.5 * h);
    const double wb = detuning + stark(t + h);
    const Eigen::Vector4d k1 = master_rhs(y, xa, wa, r1, r2);
    const Eigen::Vector4d k2 = master_rhs(y + 0.5 * h * k1, xm, wm, r1, r2);
    const Eigen::Vector4d k3 = master_rhs(y + 0.5 * h * k2, xm, wm, r1, r2);
    const Eigen::Vector4d k4 = master_rhs(y + h * k3, xb, wb, r1, r2);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

}  // namespace

TwoLevelState reference_evolve(const TwoLevelState& initial,
                               const std::function<cplx(double)>& chi,
                               double detuning,
                               const std::function<double(double)>& stark,
                               double T1, double T2, double t0, double t1,
                               int steps, double conv_tol) {
  if (steps < 1) throw ValidationError("reference_evolve: steps must be >= 1");
  if (!(t1 >= t0))
    throw ValidationError("reference_evolve: t1 must be >= t0");
  const double r1 = std::isfinite(T1) ? 1.0 / T1 : 0.0;
  const double r2 = std::isfinite(T2) ? 1.0 / T2 : 0.0;
  const Eigen::Vector4d y0 = initial.to_vec();
  const Eigen::Vector4d coarse =
      rk4_run(y0, chi, detuning, stark, r1, r2, t0, t1, steps);
  const Eigen::Vector4d fine =
      rk4_run(y0, chi, detuning, stark, r1, r2, t0, t1, 2 * steps);
  if ((coarse - fine).cwiseAbs().maxCoeff() > conv_tol)
    throw ConvergenceError(
        "reference_evolve: step halving changed the result beyond tolerance");
  return TwoLevelState::from_vec(fine);
}

}  // namespace starkecho
