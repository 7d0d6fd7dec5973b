#include "starkecho/scan.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "extrema.hpp"

namespace starkecho {

void StarkConfig::validate() const {
  if (!std::isfinite(shift_coeff))
    throw ValidationError("StarkConfig: shift_coeff must be finite");
  if (!(plate_cm > 0.0))
    throw ValidationError("StarkConfig: plate_cm must be positive");
  if (!(voltage >= 0.0))
    throw ValidationError("StarkConfig: voltage must be non-negative");
}

const std::vector<double>& ModulationTrace::channel(TraceChannel c) const {
  switch (c) {
    case TraceChannel::parallel: return I_parallel;
    case TraceChannel::perp: return I_perp;
    default: return I_total;
  }
}

ModulationTrace scan(const EchoSequence& seq, const StarkConfig& cfg,
                     const StarkPulse& stark_window, const EnsembleSpec& ens,
                     const DipoleSet& dip, const LightField& light,
                     const DetectionBasis& basis, const Relaxation& relax,
                     const ObservationWindow& window,
                     const ScanSettings& settings) {
  cfg.validate();
  seq.validate();
  if (settings.samples < 2)
    throw ValidationError("scan: samples must be >= 2");

  double x0 = settings.x_min;
  double x1 = settings.x_max;
  if (x1 <= x0) {
    x1 = settings.axis == ScanAxis::on_time
             ? seq.tau - stark_window.guard
             : cfg.voltage;
  }
  if (!(x1 > x0)) throw ValidationError("scan: empty x range");

  ModulationTrace trace;
  trace.axis = settings.axis;
  trace.meta = cfg;
  trace.observable = settings.observable;
  trace.fixed_t_on =
      settings.axis == ScanAxis::voltage ? stark_window.t_on : 0.0;
  const int ns = settings.samples;
  trace.x.resize(ns);
  trace.I_parallel.resize(ns);
  trace.I_perp.resize(ns);
  trace.I_total.resize(ns);
  for (int i = 0; i < ns; ++i)
    trace.x[i] = x0 + (x1 - x0) * i / (ns - 1);

  auto run_sample = [&](int i) {
    StarkPulse p = stark_window;
    if (settings.axis == ScanAxis::on_time) {
      p.t_on = trace.x[i];
      p.shift = cfg.applied_shift();
    } else {
      p.shift = mhz_to_rad_us(1e-3 * cfg.shift_coeff * trace.x[i] /
                              cfg.plate_cm);
    }
    const EchoObservables obs =
        simulate_echo(seq, p, ens, dip, light, basis, relax, window, 1);
    const bool peak = settings.observable == EchoScalar::peak;
    trace.I_parallel[i] =
        peak ? obs.parallel.peak_intensity : obs.parallel.integrated_area;
    trace.I_perp[i] = peak ? obs.perp.peak_intensity : obs.perp.integrated_area;
    trace.I_total[i] =
        peak ? obs.total.peak_intensity : obs.total.integrated_area;
  };

  int nt = settings.threads;
  if (nt <= 0) {
    nt = static_cast<int>(std::thread::hardware_concurrency());
    if (nt < 1) nt = 1;
  }
  nt = std::min(nt, ns);
  if (nt <= 1) {
    for (int i = 0; i < ns; ++i) run_sample(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < ns; i = next.fetch_add(1))
          run_sample(i);
      });
    for (std::thread& t : pool) t.join();
  }
  return trace;
}

ModulationMetrics modulation_metrics(const ModulationTrace& trace,
                                     TraceChannel channel) {
  const std::vector<double>& y = trace.channel(channel);
  if (trace.x.size() != y.size())
    throw ValidationError("modulation_metrics: channel data missing");
  if (trace.x.size() < 8)
    throw ShortTraceError("modulation_metrics: need at least 8 samples");

  double ymax = y[0], ymin = y[0];
  for (double v : y) {
    ymax = std::max(ymax, v);
    ymin = std::min(ymin, v);
  }
  if (ymax - ymin <= 1e-12 * std::max(std::abs(ymax), 1e-300))
    throw NotModulatedError("modulation_metrics: trace is constant");

  const auto ex = detail::find_extrema(trace.x, y);
  const double period = detail::period_from_extrema(ex);
  const double span = trace.x.back() - trace.x.front();
  if (span < 1.5 * period)
    throw ShortTraceError(
        "modulation_metrics: trace spans fewer than 1.5 modulation periods");

  ModulationMetrics m;
  m.frequency = 1.0 / period;

  double max_sum = 0.0, min_sum = 0.0;
  int max_cnt = 0, min_cnt = 0;
  for (const auto& e : ex) {
    if (e.is_max) {
      max_sum += e.value;
      ++max_cnt;
    } else {
      min_sum += e.value;
      ++min_cnt;
    }
  }
  if (max_cnt == 0 || min_cnt == 0)
    throw NotModulatedError("modulation_metrics: one-sided extrema only");
  const double hi = max_sum / max_cnt;
  const double lo = std::max(min_sum / min_cnt, 0.0);
  m.visibility = (hi - lo) / (hi + lo);

  // phase of the cos^2 argument, from the maximum nearest x = 0
  const detail::Extremum* first_max = nullptr;
  for (const auto& e : ex)
    if (e.is_max && (!first_max || std::abs(e.x) < std::abs(first_max->x)))
      first_max = &e;
  m.phase = detail::wrap_half_pi(-std::numbers::pi * m.frequency * first_max->x);

  // envelope from the decay of successive maxima
  std::vector<double> xs, ls;
  for (const auto& e : ex)
    if (e.is_max && e.value > 0.0) {
      xs.push_back(e.x * e.x);
      ls.push_back(std::log(e.value));
    }
  if (xs.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ls[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ls[i];
    }
    const double nn = static_cast<double>(xs.size());
    const double denom = nn * sxx - sx * sx;
    if (denom > 0.0) {
      const double slope = (nn * sxy - sx * sy) / denom;
      // only a drop that is visible against extremum-refinement jitter
      // counts as an envelope
      const double range = *std::max_element(xs.begin(), xs.end()) -
                           *std::min_element(xs.begin(), xs.end());
      if (slope * range < std::log(0.98)) m.decay = -1.0 / slope;
    }
  }
  return m;
}

ZeemanBranchShifts ZeemanBranchShifts::from_branches(double lower,
                                                     double upper) {
  ZeemanBranchShifts z;
  z.lower = lower;
  z.upper = upper;
  z.delta_o = 0.5 * (lower + upper);
  z.delta_g = 0.5 * (upper - lower);
  return z;
}

ZeemanBranchShifts ZeemanBranchShifts::from_components(double delta_o,
                                                       double delta_g) {
  ZeemanBranchShifts z;
  z.delta_o = delta_o;
  z.delta_g = delta_g;
  z.lower = delta_o - delta_g;
  z.upper = delta_o + delta_g;
  return z;
}

std::vector<double> gshift_vs_field(double kappa,
                                    const std::vector<double>& b_values) {
  std::vector<double> out(b_values.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = kappa * b_values[i] * b_values[i];
  return out;
}

}  // namespace starkecho
