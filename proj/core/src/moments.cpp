#include "starkecho/moments.hpp"

namespace starkecho {

void DipoleSet::validate() const {
  if (d.norm() == 0.0 && m.norm() == 0.0)
    throw ValidationError("DipoleSet: at least one of d, m must be nonzero");
  if (!(n > 0.0))
    throw ValidationError("DipoleSet: refractive index must be positive");
}

void LightField::validate() const {
  if (!is_unit(khat))
    throw ValidationError("LightField: khat must be a unit vector");
  if (!is_unit(epsilon))
    throw ValidationError("LightField: epsilon must be a unit vector");
  if (std::abs(dot_bilinear(epsilon, khat.cast<cplx>())) > 1e-10)
    throw ValidationError("LightField: epsilon must be transverse to khat");
  if (!(e0 >= 0.0))
    throw ValidationError("LightField: e0 must be non-negative");
}

CVec3 total_moment(const DipoleSet& dip, const Vec3& khat, SubSite site) {
  dip.validate();
  if (!is_unit(khat))
    throw ValidationError("total_moment: khat must be a unit vector");
  // plain bilinear cross product; Eigen's cross() would conjugate complex
  // operands, which has no place in a phasor identity
  const CVec3& m = dip.m;
  const CVec3 m_cross_k(m(1) * khat(2) - m(2) * khat(1),
                        m(2) * khat(0) - m(0) * khat(2),
                        m(0) * khat(1) - m(1) * khat(0));
  return parity(site) * dip.d + m_cross_k;
}

cplx rabi_frequency(const CVec3& mu, const CVec3& epsilon, double e0) {
  return e0 * dot_bilinear(mu, epsilon);
}

}  // namespace starkecho
