#include "starkecho/echo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace starkecho {

void EchoSequence::validate() const {
  if (!(t_pi2 > 0.0))
    throw ValidationError("EchoSequence: t_pi2 must be positive");
  if (!(t_pi >= 0.0))
    throw ValidationError("EchoSequence: t_pi must be non-negative");
  if (!(tau > t_pi2 + t_pi))
    throw ValidationError("EchoSequence: tau must exceed the pulse durations");
  if (!(pulse_amplitude > 0.0))
    throw ValidationError("EchoSequence: pulse_amplitude must be positive");
  if (!is_unit(pulse_polarization))
    throw ValidationError("EchoSequence: pulse_polarization must be unit");
}

void StarkPulse::validate(const EchoSequence& seq) const {
  if (!(t_on >= 0.0))
    throw ValidationError("StarkPulse: t_on must be non-negative");
  if (!(window_start >= 0.0))
    throw ValidationError("StarkPulse: window_start must be non-negative");
  if (!(guard >= 0.0))
    throw ValidationError("StarkPulse: guard must be non-negative");
  if (t_on > seq.tau - guard)
    throw ValidationError("StarkPulse: t_on exceeds tau - guard");
  if (window_start + t_on > seq.tau - seq.t_pi2)
    throw ValidationError(
        "StarkPulse: window does not fit the first free interval");
  if (!std::isfinite(shift))
    throw ValidationError("StarkPulse: shift must be finite");
}

void EnsembleSpec::validate() const {
  if (count < 1) throw ValidationError("EnsembleSpec: count must be >= 1");
  if (!(width > 0.0)) throw ValidationError("EnsembleSpec: width must be positive");
  if (!(span > 0.0)) throw ValidationError("EnsembleSpec: span must be positive");
  if (shape == ProfileShape::flat && span < width)
    throw ValidationError("EnsembleSpec: span must cover the flat width");
}

Ensemble build_ensemble(const EnsembleSpec& spec) {
  spec.validate();
  Ensemble e;
  e.detuning.resize(spec.count);
  e.weight.resize(spec.count);
  if (spec.count == 1) {
    e.detuning[0] = 0.0;
    e.weight[0] = 1.0;
    return e;
  }
  const double half = 0.5 * spec.span;
  double total = 0.0;
  for (int j = 0; j < spec.count; ++j) {
    const double x = -half + spec.span * j / (spec.count - 1);
    e.detuning[j] = x;
    double w;
    if (spec.shape == ProfileShape::flat) {
      w = std::abs(x) <= 0.5 * spec.width * (1.0 + 1e-12) ? 1.0 : 0.0;
    } else {
      const double r = x / spec.width;
      w = std::exp(-4.0 * std::numbers::ln2 * r * r);
    }
    e.weight[j] = w;
    total += w;
  }
  for (double& w : e.weight) w /= total;
  return e;
}

DetectionBasis DetectionBasis::standard(const LightField& light) {
  DetectionBasis b;
  b.e1 = light.epsilon;
  // conj(khat x e1), bilinear cross spelled out (Eigen's conjugates)
  const Vec3& k = light.khat;
  const CVec3& e = light.epsilon;
  const CVec3 c = CVec3(k(1) * e(2) - k(2) * e(1),
                        k(2) * e(0) - k(0) * e(2),
                        k(0) * e(1) - k(1) * e(0))
                      .conjugate();
  b.e2 = c / c.norm();
  return b;
}

void DetectionBasis::validate(const Vec3& khat) const {
  if (!is_unit(e1, 1e-10) || !is_unit(e2, 1e-10))
    throw ValidationError("DetectionBasis: channels must be unit vectors");
  if (std::abs(e1.dot(e2)) > 1e-10)
    throw ValidationError("DetectionBasis: channels must be orthogonal");
  const CVec3 k = khat.cast<cplx>();
  if (std::abs(dot_bilinear(e1, k)) > 1e-10 ||
      std::abs(dot_bilinear(e2, k)) > 1e-10)
    throw ValidationError("DetectionBasis: channels must be transverse");
}

std::pair<std::vector<double>, std::vector<double>> polarized_intensities(
    const std::vector<CVec3>& P, const DetectionBasis& basis) {
  std::vector<double> i1(P.size()), i2(P.size());
  for (size_t k = 0; k < P.size(); ++k) {
    i1[k] = std::norm(basis.e1.dot(P[k]));
    i2[k] = std::norm(basis.e2.dot(P[k]));
  }
  return {std::move(i1), std::move(i2)};
}

namespace {

constexpr int kChunk = 256;  // fixed, so reductions do not depend on threads

struct SiteDrive {
  CVec3 mu;
  cplx chi;
  double sign;
};

EchoObservables::Channel summarize(const std::vector<double>& t,
                                   const std::vector<double>& I) {
  EchoObservables::Channel c;
  size_t best = 0;
  for (size_t k = 1; k < I.size(); ++k)
    if (I[k] > I[best]) best = k;
  c.peak_intensity = I[best];
  c.peak_time = t[best];
  for (size_t k = 1; k < I.size(); ++k)
    c.integrated_area += 0.5 * (I[k] + I[k - 1]) * (t[k] - t[k - 1]);
  return c;
}

}  // namespace

EchoObservables simulate_echo(const EchoSequence& seq, const StarkPulse& stark,
                              const EnsembleSpec& ens, const DipoleSet& dip,
                              const LightField& light,
                              const DetectionBasis& basis,
                              const Relaxation& relax,
                              const ObservationWindow& window, int threads) {
  seq.validate();
  stark.validate(seq);
  light.validate();
  basis.validate(light.khat);
  if (!(relax.T1 > 0.0) || !(relax.T2 > 0.0))
    throw ValidationError("Relaxation: T1 and T2 must be positive");
  if (window.points < 2)
    throw ValidationError("ObservationWindow: points must be >= 2");

  auto make_site = [&](SubSite s) {
    const CVec3 mu = total_moment(dip, light.khat, s);
    return SiteDrive{
        mu, rabi_frequency(mu, seq.pulse_polarization, seq.pulse_amplitude),
        parity(s)};
  };
  const SiteDrive sites[2] = {make_site(SubSite::plus),
                              make_site(SubSite::minus)};

  const Ensemble ensemble = build_ensemble(ens);

  double hw = window.half_width;
  if (hw <= 0.0) {
    hw = 5.0 / rad_us_to_mhz(ens.width) + 0.5 * (seq.t_pi + seq.t_pi2);
    hw = std::min(hw, 0.45 * seq.tau);
  }
  // square pulses delay the rephasing point by roughly t_pi - t_pi2
  const double center = 2.0 * seq.tau + (seq.t_pi - seq.t_pi2);
  const double t_free = seq.tau + seq.t_pi;  // end of the rephasing pulse
  if (center - hw <= t_free)
    throw ValidationError(
        "simulate_echo: observation window overlaps the rephasing pulse; "
        "increase tau or narrow the window");

  EchoObservables out;
  const int npts = window.points;
  out.t_grid.resize(npts);
  for (int k = 0; k < npts; ++k)
    out.t_grid[k] = center - hw + 2.0 * hw * k / (npts - 1);
  const double dt_grid = out.t_grid[1] - out.t_grid[0];

  const double free1 = seq.tau - seq.t_pi2;
  const double d_before = stark.window_start;
  const double d_on = stark.t_on;
  const double d_after = free1 - d_before - d_on;
  const double r2 = std::isfinite(relax.T2) ? 1.0 / relax.T2 : 0.0;

  const int n = ens.count;
  const int nchunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<CVec3>> partial(
      nchunks, std::vector<CVec3>(npts, CVec3::Zero()));

  auto run_chunk = [&](int ci) {
    const int j0 = ci * kChunk;
    const int j1 = std::min(n, j0 + kChunk);
    std::vector<CVec3>& acc = partial[ci];
    for (int j = j0; j < j1; ++j) {
      const double det = ensemble.detuning[j];
      const double w = ensemble.weight[j];
      if (w == 0.0) continue;
      for (const SiteDrive& site : sites) {
        TwoLevelState st = TwoLevelState::ground();
        st = pulse_propagator({site.chi, det, seq.t_pi2}).apply(st);
        st = free_propagator(
                 {det, 0.0, d_before, relax.T1, relax.T2}).apply(st);
        st = free_propagator({det, site.sign * stark.shift, d_on, relax.T1,
                              relax.T2}).apply(st);
        st = free_propagator(
                 {det, 0.0, d_after, relax.T1, relax.T2}).apply(st);
        if (seq.t_pi > 0.0)
          st = pulse_propagator({site.chi, det, seq.t_pi}).apply(st);

        // only the coherence radiates; roll it along the uniform grid
        const double lead = out.t_grid[0] - t_free;
        cplx ab = st.rho_ab *
                  std::exp(cplx(-r2 * lead, det * lead));
        const cplx step = std::exp(cplx(-r2 * dt_grid, det * dt_grid));
        const cplx amp = 0.5 * w;
        for (int k = 0; k < npts; ++k) {
          acc[k] += (amp * ab) * site.mu;
          ab *= step;
        }
      }
    }
  };

  int nt = threads;
  if (nt <= 0) {
    nt = static_cast<int>(std::thread::hardware_concurrency());
    if (nt < 1) nt = 1;
  }
  nt = std::min(nt, nchunks);
  if (nt <= 1) {
    for (int ci = 0; ci < nchunks; ++ci) run_chunk(ci);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int i = 0; i < nt; ++i)
      pool.emplace_back([&] {
        for (int ci = next.fetch_add(1); ci < nchunks;
             ci = next.fetch_add(1))
          run_chunk(ci);
      });
    for (std::thread& t : pool) t.join();
  }

  out.P.assign(npts, CVec3::Zero());
  for (int ci = 0; ci < nchunks; ++ci)
    for (int k = 0; k < npts; ++k) out.P[k] += partial[ci][k];

  auto [i1, i2] = polarized_intensities(out.P, basis);
  out.I_parallel = std::move(i1);
  out.I_perp = std::move(i2);
  out.I_total.resize(npts);
  for (int k = 0; k < npts; ++k)
    out.I_total[k] = out.I_parallel[k] + out.I_perp[k];

  out.parallel = summarize(out.t_grid, out.I_parallel);
  out.perp = summarize(out.t_grid, out.I_perp);
  out.total = summarize(out.t_grid, out.I_total);
  return out;
}

}  // namespace starkecho
