#include "starkecho/fit.hpp"

#include <algorithm>
#include <cmath>

#include "extrema.hpp"

namespace starkecho {

void FitModelParams::validate() const {
  if (!(A > 0.0)) throw ValidationError("FitModelParams: A must be positive");
  if (!(W > 0.0) || W > 1.0)
    throw ValidationError("FitModelParams: W must lie in (0, 1]");
  if (!(C > 0.0)) throw ValidationError("FitModelParams: C must be positive");
  if (!std::isfinite(delta_s) || !std::isfinite(phi))
    throw ValidationError("FitModelParams: delta_s and phi must be finite");
}

double model_eval(const FitModelParams& p, double t_on_us, double voltage,
                  double plate_cm) {
  p.validate();
  if (!(plate_cm > 0.0))
    throw ValidationError("model_eval: plate_cm must be positive");
  const double theta =
      two_pi * 1e-3 * p.delta_s * (voltage / plate_cm) * t_on_us + p.phi;
  const double cs = std::cos(theta);
  const double offset = (1.0 - p.W) / (2.0 * p.W);
  const double env =
      std::isfinite(p.C) ? std::exp(-t_on_us * t_on_us / p.C) : 1.0;
  return p.A * (cs * cs + offset) * env;
}

namespace detail {

Eigen::Matrix<double, 5, 1> model_grad(const FitModelParams& p, double t_on_us,
                                       double voltage, double plate_cm) {
  const double kappa = two_pi * 1e-3 * (voltage / plate_cm) * t_on_us;
  const double theta = kappa * p.delta_s + p.phi;
  const double cs = std::cos(theta);
  const double s2 = std::sin(2.0 * theta);
  const double offset = (1.0 - p.W) / (2.0 * p.W);
  const double env =
      std::isfinite(p.C) ? std::exp(-t_on_us * t_on_us / p.C) : 1.0;
  const double body = cs * cs + offset;

  Eigen::Matrix<double, 5, 1> g;
  g(0) = body * env;
  g(1) = -p.A * s2 * kappa * env;
  g(2) = -p.A * s2 * env;
  g(3) = -p.A * env / (2.0 * p.W * p.W);
  g(4) = std::isfinite(p.C)
             ? p.A * body * env * t_on_us * t_on_us / (p.C * p.C)
             : 0.0;
  return g;
}

}  // namespace detail

namespace {

struct AxisView {
  std::vector<double> t;  // on-time per point, us
  std::vector<double> v;  // voltage per point
  double plate_cm;
};

AxisView axis_view(const ModulationTrace& trace) {
  AxisView av;
  av.plate_cm = trace.meta.plate_cm;
  const size_t n = trace.x.size();
  av.t.resize(n);
  av.v.resize(n);
  for (size_t i = 0; i < n; ++i) {
    if (trace.axis == ScanAxis::on_time) {
      av.t[i] = trace.x[i];
      av.v[i] = trace.meta.voltage;
    } else {
      av.t[i] = trace.fixed_t_on;
      av.v[i] = trace.x[i];
    }
  }
  return av;
}

// theta = G * delta_s * x + phi along the scan axis
double theta_gain(const ModulationTrace& trace) {
  if (trace.axis == ScanAxis::on_time)
    return two_pi * 1e-3 * trace.meta.voltage / trace.meta.plate_cm;
  return two_pi * 1e-3 * trace.fixed_t_on / trace.meta.plate_cm;
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

struct Internal {
  Eigen::VectorXd q;  // lnA, delta_s, phi, u [, lnC]
  bool with_decay;

  FitModelParams natural() const {
    // exp and the logistic saturate at 0.0 in double precision long before
    // q leaves the search range; clamp so a wild trial step stays inside
    // the model domain and gets rejected on SSR instead of throwing
    FitModelParams p;
    p.A = std::max(std::exp(q(0)), 1e-300);
    p.delta_s = q(1);
    p.phi = q(2);
    p.W = std::max(logistic(q(3)), 1e-300);
    p.C = with_decay ? std::max(std::exp(q(4)), 1e-300) : inf;
    return p;
  }
};

Internal internalize(const FitModelParams& p, bool with_decay,
                     double x_span) {
  Internal in;
  in.with_decay = with_decay;
  in.q.resize(with_decay ? 5 : 4);
  in.q(0) = std::log(std::max(p.A, 1e-300));
  in.q(1) = p.delta_s;
  in.q(2) = p.phi;
  const double w = std::clamp(p.W, 1e-9, 1.0 - 1e-9);
  in.q(3) = std::log(w / (1.0 - w));
  if (with_decay)
    in.q(4) = std::isfinite(p.C) ? std::log(p.C) : std::log(x_span * x_span);
  return in;
}

struct Problem {
  const std::vector<double>* y;
  AxisView av;

  double ssr(const Internal& in) const {
    const FitModelParams p = in.natural();
    double s = 0.0;
    for (size_t i = 0; i < y->size(); ++i) {
      const double r =
          model_eval(p, av.t[i], av.v[i], av.plate_cm) - (*y)[i];
      s += r * r;
    }
    return s;
  }

  void jacobian(const Internal& in, Eigen::MatrixXd& J,
                Eigen::VectorXd& r) const {
    const FitModelParams p = in.natural();
    const size_t n = y->size();
    const int k = static_cast<int>(in.q.size());
    J.resize(n, k);
    r.resize(n);
    for (size_t i = 0; i < n; ++i) {
      r(i) = model_eval(p, av.t[i], av.v[i], av.plate_cm) - (*y)[i];
      const auto g = detail::model_grad(p, av.t[i], av.v[i], av.plate_cm);
      J(i, 0) = g(0) * p.A;                       // d/d lnA
      J(i, 1) = g(1);                             // d/d delta_s
      J(i, 2) = g(2);                             // d/d phi
      J(i, 3) = g(3) * p.W * (1.0 - p.W);         // d/d u
      if (k == 5) J(i, 4) = g(4) * p.C;           // d/d lnC
    }
  }
};

struct LmOutcome {
  Internal in;
  double ssr = 0.0;
  double gnorm = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;
};

// largest cosine between the residual and any Jacobian column; zero at a
// least-squares stationary point regardless of data or parameter scale.
// A column whose norm has collapsed relative to the others is a parameter
// the model no longer responds to (the logit column dies as W saturates at
// 1); its direction carries no usable descent information, so it must not
// block convergence.
double gradient_cosine(const Eigen::MatrixXd& J, const Eigen::VectorXd& r,
                       const Eigen::VectorXd& g) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  double cmax = 0.0;
  for (Eigen::Index j = 0; j < J.cols(); ++j)
    cmax = std::max(cmax, J.col(j).norm());
  if (cmax == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < J.cols(); ++j) {
    const double cn = J.col(j).norm();
    if (cn > 1e-8 * cmax) worst = std::max(worst, std::abs(g(j)) / (cn * rn));
  }
  return worst;
}

// SSR at the numeric floor of the data: residuals at the relative rounding
// scale of the largest sample. Below this the residual direction is noise
// and the gradient cosine is meaningless, so reaching it counts as success.
double ssr_floor(const std::vector<double>& y) {
  double y2 = 0.0;
  for (double v : y) y2 = std::max(y2, v * v);
  return static_cast<double>(y.size()) * y2 * 1e-24;
}

LmOutcome run_lm(const Problem& prob, Internal in, const FitOptions& opt) {
  LmOutcome out;
  double ssr = prob.ssr(in);
  out.history.push_back(ssr);
  const double floor = ssr_floor(*prob.y);
  double lambda = 1e-3;
  Eigen::MatrixXd J;
  Eigen::VectorXd r;

  int iter = 0;
  for (; iter < opt.max_iterations; ++iter) {
    if (ssr <= floor) {
      out.converged = true;
      break;
    }
    prob.jacobian(in, J, r);
    const Eigen::VectorXd g = J.transpose() * r;
    out.gnorm = gradient_cosine(J, r, g);
    if (out.gnorm <= opt.gtol) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd H = J.transpose() * J;
    Eigen::VectorXd diag = H.diagonal().cwiseMax(1e-12);

    bool stepped = false;
    while (lambda < 1e15) {
      Eigen::MatrixXd Hd = H;
      Hd.diagonal() += lambda * diag;
      const Eigen::VectorXd dq = Hd.ldlt().solve(-g);
      Internal trial = in;
      trial.q += dq;
      if (!trial.q.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      const double trial_ssr = prob.ssr(trial);
      if (std::isfinite(trial_ssr) && trial_ssr < ssr) {
        in = trial;
        out.converged = ssr - trial_ssr <= opt.ftol * ssr;
        ssr = trial_ssr;
        out.history.push_back(ssr);
        lambda = std::max(lambda * 0.3, 1e-14);
        stepped = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped) break;  // damping exhausted; gradient check decides below
    if (out.converged) break;
  }
  if (!out.converged) {
    prob.jacobian(in, J, r);
    out.gnorm = gradient_cosine(J, r, J.transpose() * r);
    out.converged = out.gnorm <= opt.gtol || ssr <= floor;
  }
  out.in = in;
  out.ssr = ssr;
  out.iterations = iter;
  return out;
}

// The logistic reaches W = 1 only asymptotically, so a trace modulating at
// exactly full contrast sends the fit on an endless crawl up the boundary
// (the step size decays with the dying W column). Restart once from the
// saturated point, where the W column is exactly zero and the remaining
// parameters can converge, and keep the restart only when it fits at least
// as well; interior-contrast data never takes it.
LmOutcome run_lm_bounded(const Problem& prob, Internal in,
                         const FitOptions& opt) {
  LmOutcome out = run_lm(prob, in, opt);
  if (!out.converged && out.in.natural().W > 1.0 - 1e-8) {
    Internal pinned = out.in;
    pinned.q(3) = 60.0;  // logistic(60) rounds to exactly 1 in double
    LmOutcome retry = run_lm(prob, pinned, opt);
    if (retry.ssr <= out.ssr) {
      retry.iterations += out.iterations;
      return retry;
    }
  }
  return out;
}

FitResult finalize(const Problem& prob, const LmOutcome& lm) {
  FitResult res;
  res.params = lm.in.natural();
  res.residual_norm = std::sqrt(lm.ssr);
  res.converged = lm.converged;
  res.iterations = lm.iterations;
  res.ssr_history = lm.history;

  // canonical sign and phase branch
  if (res.params.delta_s < 0.0) {
    res.params.delta_s = -res.params.delta_s;
    res.params.phi = -res.params.phi;
  }
  res.params.phi = detail::wrap_half_pi(res.params.phi);

  Eigen::MatrixXd J;
  Eigen::VectorXd r;
  prob.jacobian(lm.in, J, r);
  const int k = static_cast<int>(lm.in.q.size());
  const int n = static_cast<int>(r.size());
  res.sigma.A = res.sigma.delta_s = res.sigma.phi = res.sigma.W = 0.0;
  res.sigma.C = 0.0;
  if (n > k) {
    const double s2 = lm.ssr / (n - k);
    Eigen::MatrixXd H = J.transpose() * J;
    H.diagonal() += Eigen::VectorXd::Constant(k, 1e-300);
    const Eigen::MatrixXd cov =
        H.ldlt().solve(Eigen::MatrixXd::Identity(k, k)) * s2;
    auto sig = [&](int i) {
      return cov(i, i) > 0.0 ? std::sqrt(cov(i, i)) : 0.0;
    };
    const FitModelParams& p = res.params;
    res.sigma.A = p.A * sig(0);
    res.sigma.delta_s = sig(1);
    res.sigma.phi = sig(2);
    res.sigma.W = p.W * (1.0 - p.W) * sig(3);
    if (k == 5) res.sigma.C = p.C * sig(4);
  }
  return res;
}

}  // namespace

FitModelParams initial_guess(const ModulationTrace& trace,
                             TraceChannel channel) {
  const std::vector<double>& y = trace.channel(channel);
  if (trace.x.size() != y.size())
    throw ValidationError("initial_guess: channel data missing");
  if (trace.x.size() < 8)
    throw ShortTraceError("initial_guess: need at least 8 samples");

  double ymax = y[0], ymin = y[0];
  for (double v : y) {
    ymax = std::max(ymax, v);
    ymin = std::min(ymin, v);
  }
  if (ymax - ymin <= 1e-12 * std::max(std::abs(ymax), 1e-300))
    throw NotModulatedError("initial_guess: trace is constant");

  const auto ex = detail::find_extrema(trace.x, y);
  const double period = detail::period_from_extrema(ex);
  const double gain = theta_gain(trace);
  if (!(gain > 0.0))
    throw ValidationError("initial_guess: trace meta has no drive scale");

  FitModelParams p;
  p.delta_s = std::numbers::pi / (period * gain);

  const detail::Extremum* near_max = nullptr;
  const detail::Extremum* near_min = nullptr;
  for (const auto& e : ex) {
    if (e.is_max && (!near_max || std::abs(e.x) < std::abs(near_max->x)))
      near_max = &e;
    if (!e.is_max && (!near_min || std::abs(e.x) < std::abs(near_min->x)))
      near_min = &e;
  }
  if (!near_max || !near_min)
    throw NotModulatedError("initial_guess: one-sided extrema only");

  p.phi = detail::wrap_half_pi(-gain * p.delta_s * near_max->x);
  const double hi = near_max->value;
  const double lo = std::max(near_min->value, 0.0);
  p.A = hi - lo;
  if (!(p.A > 0.0))
    throw NotModulatedError("initial_guess: no modulation amplitude");
  p.W = std::clamp((hi - lo) / (hi + lo), 1e-3, 1.0);

  std::vector<double> xs, ls;
  for (const auto& e : ex)
    if (e.is_max && e.value > 0.0) {
      xs.push_back(e.x * e.x);
      ls.push_back(std::log(e.value));
    }
  p.C = inf;
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
      if (slope < -1e-12) p.C = -1.0 / slope;
    }
  }
  return p;
}

FitResult fit_trace(const ModulationTrace& trace, TraceChannel channel,
                    std::optional<FitModelParams> init,
                    const FitOptions& options) {
  const std::vector<double>& y = trace.channel(channel);
  if (trace.x.size() != y.size())
    throw ValidationError("fit_trace: channel data missing");
  if (trace.x.size() < 8)
    throw ShortTraceError("fit_trace: need at least 8 samples");
  trace.meta.validate();

  double ymax = y[0], ymin = y[0];
  for (double v : y) {
    ymax = std::max(ymax, v);
    ymin = std::min(ymin, v);
  }
  if (ymax - ymin <= 1e-12 * std::max(std::abs(ymax), 1e-300))
    throw NotModulatedError("fit_trace: trace is constant");

  const FitModelParams seed = init ? *init : initial_guess(trace, channel);
  seed.validate();

  const double gain = theta_gain(trace);
  if (!(gain > 0.0))
    throw ValidationError("fit_trace: trace meta has no drive scale");
  const double span = trace.x.back() - trace.x.front();
  const double period_est = std::numbers::pi / (gain * std::abs(seed.delta_s));
  if (span < 1.5 * period_est)
    throw ShortTraceError(
        "fit_trace: trace spans fewer than 1.5 modulation periods");

  Problem prob{&y, axis_view(trace)};

  // the envelope runs along on-time only; a voltage scan cannot resolve it
  DecayMode mode = options.decay;
  if (trace.axis == ScanAxis::voltage) mode = DecayMode::off;

  const LmOutcome base = run_lm_bounded(
      prob, internalize(seed, mode == DecayMode::on, span), options);
  if (mode != DecayMode::automatic) return finalize(prob, base);

  const int n = static_cast<int>(y.size());
  const double floor = n * std::pow(1e-12 * std::max(ymax, 1e-300), 2);
  if (base.ssr <= floor || n <= 5) return finalize(prob, base);

  FitModelParams seeded = base.in.natural();
  seeded.C = std::isfinite(seed.C) ? seed.C : span * span;
  const LmOutcome freed =
      run_lm_bounded(prob, internalize(seeded, true, span), options);
  const double fratio =
      (base.ssr - freed.ssr) / std::max(freed.ssr / (n - 5), 1e-300);
  if (freed.ssr < base.ssr && fratio > options.f_threshold)
    return finalize(prob, freed);
  return finalize(prob, base);
}

}  // namespace starkecho
