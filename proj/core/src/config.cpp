#include "starkecho/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace starkecho {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& tok, const std::string& key) {
  const std::string t = trim(tok);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0')
    throw ValidationError("config: bad number for " + key + ": '" + t + "'");
  return v;
}

int parse_int(const std::string& tok, const std::string& key) {
  const double v = parse_double(tok, key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ValidationError("config: " + key + " must be an integer");
  return i;
}

cplx parse_cplx(const std::string& tok, const std::string& key) {
  const std::string t = trim(tok);
  if (!t.empty() && t.front() == '(') {
    if (t.back() != ')')
      throw ValidationError("config: unbalanced complex for " + key);
    const std::string body = t.substr(1, t.size() - 2);
    const auto comma = body.find(',');
    if (comma == std::string::npos)
      throw ValidationError("config: complex for " + key +
                            " must be (re,im)");
    return {parse_double(body.substr(0, comma), key),
            parse_double(body.substr(comma + 1), key)};
  }
  return {parse_double(t, key), 0.0};
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

CVec3 parse_cvec3(const std::string& val, const std::string& key) {
  const auto toks = split_ws(val);
  if (toks.size() != 3)
    throw ValidationError("config: " + key + " needs three entries");
  return {parse_cplx(toks[0], key), parse_cplx(toks[1], key),
          parse_cplx(toks[2], key)};
}

Vec3 parse_vec3(const std::string& val, const std::string& key) {
  const auto toks = split_ws(val);
  if (toks.size() != 3)
    throw ValidationError("config: " + key + " needs three entries");
  return {parse_double(toks[0], key), parse_double(toks[1], key),
          parse_double(toks[2], key)};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt17(const cplx& v) {
  return "(" + fmt17(v.real()) + "," + fmt17(v.imag()) + ")";
}

std::string fmt17(const CVec3& v) {
  return fmt17(v(0)) + " " + fmt17(v(1)) + " " + fmt17(v(2));
}

std::string fmt17(const Vec3& v) {
  return fmt17(v(0)) + " " + fmt17(v(1)) + " " + fmt17(v(2));
}

}  // namespace

DipoleSet RunConfig::dipoles() const {
  DipoleSet d{dipole_d, dipole_m, dipole_n};
  d.validate();
  return d;
}

LightField RunConfig::light() const {
  LightField f{light_epsilon, light_khat, mhz_to_rad_us(light_e0_mhz),
               mhz_to_rad_us(light_omega0_mhz)};
  f.validate();
  return f;
}

EchoSequence RunConfig::sequence() const {
  EchoSequence s{t_pi2_us, t_pi_us, tau_us, mhz_to_rad_us(light_e0_mhz),
                 light_epsilon};
  s.validate();
  return s;
}

StarkConfig RunConfig::stark_config() const {
  StarkConfig c{stark_shift_khz, stark_voltage_v, stark_plate_cm};
  c.validate();
  return c;
}

StarkPulse RunConfig::stark_pulse() const {
  StarkPulse p{stark_t_on_us, stark_config().applied_shift(),
               stark_window_start_us, stark_guard_us};
  p.validate(sequence());
  return p;
}

EnsembleSpec RunConfig::ensemble() const {
  EnsembleSpec e;
  if (ensemble_shape == "flat")
    e.shape = ProfileShape::flat;
  else if (ensemble_shape == "gaussian")
    e.shape = ProfileShape::gaussian;
  else
    throw ValidationError("config: ensemble.shape must be flat or gaussian");
  e.width = mhz_to_rad_us(ensemble_width_mhz);
  e.span = mhz_to_rad_us(ensemble_span_mhz);
  e.count = ensemble_count;
  e.validate();
  return e;
}

Relaxation RunConfig::relaxation() const {
  if (!(t1_us > 0.0) || !(t2_us > 0.0))
    throw ValidationError("config: relax times must be positive");
  return {t1_us, t2_us};
}

DetectionBasis RunConfig::detection() const {
  DetectionBasis b = DetectionBasis::standard(light());
  if (detection_e1) b.e1 = *detection_e1;
  if (detection_e2) b.e2 = *detection_e2;
  b.validate(light_khat);
  return b;
}

ObservationWindow RunConfig::window() const {
  if (window_points < 2)
    throw ValidationError("config: sim.window_points must be >= 2");
  return {window_half_width_us, window_points};
}

ScanSettings RunConfig::scan_settings() const {
  ScanSettings s;
  if (scan_axis == "on_time")
    s.axis = ScanAxis::on_time;
  else if (scan_axis == "voltage")
    s.axis = ScanAxis::voltage;
  else
    throw ValidationError("config: scan.axis must be on_time or voltage");
  s.samples = scan_samples;
  s.x_min = scan_min;
  s.x_max = scan_max.value_or(0.0);
  if (scan_observable == "peak")
    s.observable = EchoScalar::peak;
  else if (scan_observable == "area")
    s.observable = EchoScalar::area;
  else
    throw ValidationError("config: scan.observable must be peak or area");
  s.threads = threads;
  return s;
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  if (fit_decay == "auto")
    o.decay = DecayMode::automatic;
  else if (fit_decay == "on")
    o.decay = DecayMode::on;
  else if (fit_decay == "off")
    o.decay = DecayMode::off;
  else
    throw ValidationError("config: fit.decay must be auto, on or off");
  o.max_iterations = fit_max_iterations;
  o.f_threshold = fit_f_threshold;
  return o;
}

TraceChannel RunConfig::fit_trace_channel() const {
  if (fit_channel == "parallel") return TraceChannel::parallel;
  if (fit_channel == "perp") return TraceChannel::perp;
  if (fit_channel == "total") return TraceChannel::total;
  throw ValidationError("config: fit.channel must be parallel, perp or total");
}

void RunConfig::validate() const {
  dipoles();
  light();
  sequence();
  stark_pulse();
  ensemble();
  relaxation();
  detection();
  window();
  scan_settings();
  fit_options();
  fit_trace_channel();
  if (threads < 0) throw ValidationError("config: run.threads must be >= 0");
}

namespace {

using Setter = std::function<void(RunConfig&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = {
      {"dipole.d", [](RunConfig& c, const std::string& v,
                      const std::string& k) { c.dipole_d = parse_cvec3(v, k); }},
      {"dipole.m", [](RunConfig& c, const std::string& v,
                      const std::string& k) { c.dipole_m = parse_cvec3(v, k); }},
      {"dipole.n", [](RunConfig& c, const std::string& v,
                      const std::string& k) { c.dipole_n = parse_double(v, k); }},
      {"light.khat",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.light_khat = parse_vec3(v, k);
       }},
      {"light.epsilon",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.light_epsilon = parse_cvec3(v, k);
       }},
      {"light.e0_mhz",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.light_e0_mhz = parse_double(v, k);
       }},
      {"light.omega0_mhz",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.light_omega0_mhz = parse_double(v, k);
       }},
      {"sequence.t_pi2_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.t_pi2_us = parse_double(v, k);
       }},
      {"sequence.t_pi_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.t_pi_us = parse_double(v, k);
       }},
      {"sequence.tau_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.tau_us = parse_double(v, k);
       }},
      {"stark.shift_khz_per_v_cm",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.stark_shift_khz = parse_double(v, k);
       }},
      {"stark.voltage_v",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.stark_voltage_v = parse_double(v, k);
       }},
      {"stark.plate_cm",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.stark_plate_cm = parse_double(v, k);
       }},
      {"stark.t_on_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.stark_t_on_us = parse_double(v, k);
       }},
      {"stark.window_start_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.stark_window_start_us = parse_double(v, k);
       }},
      {"stark.guard_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.stark_guard_us = parse_double(v, k);
       }},
      {"ensemble.shape",
       [](RunConfig& c, const std::string& v, const std::string&) {
         c.ensemble_shape = trim(v);
       }},
      {"ensemble.width_mhz",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.ensemble_width_mhz = parse_double(v, k);
       }},
      {"ensemble.span_mhz",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.ensemble_span_mhz = parse_double(v, k);
       }},
      {"ensemble.count",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.ensemble_count = parse_int(v, k);
       }},
      {"relax.t1_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.t1_us = parse_double(v, k);
       }},
      {"relax.t2_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.t2_us = parse_double(v, k);
       }},
      {"detection.e1",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         if (trim(v) == "auto")
           c.detection_e1.reset();
         else
           c.detection_e1 = parse_cvec3(v, k);
       }},
      {"detection.e2",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         if (trim(v) == "auto")
           c.detection_e2.reset();
         else
           c.detection_e2 = parse_cvec3(v, k);
       }},
      {"scan.axis",
       [](RunConfig& c, const std::string& v, const std::string&) {
         c.scan_axis = trim(v);
       }},
      {"scan.samples",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.scan_samples = parse_int(v, k);
       }},
      {"scan.min",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.scan_min = parse_double(v, k);
       }},
      {"scan.max",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         if (trim(v) == "auto")
           c.scan_max.reset();
         else
           c.scan_max = parse_double(v, k);
       }},
      {"scan.observable",
       [](RunConfig& c, const std::string& v, const std::string&) {
         c.scan_observable = trim(v);
       }},
      {"sim.window_points",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.window_points = parse_int(v, k);
       }},
      {"sim.window_half_width_us",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.window_half_width_us = parse_double(v, k);
       }},
      {"run.threads",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.threads = parse_int(v, k);
       }},
      {"run.seed",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         const double d = parse_double(v, k);
         if (d < 0 || d != std::floor(d))
           throw ValidationError("config: run.seed must be a non-negative "
                                 "integer");
         c.seed = static_cast<std::uint64_t>(d);
       }},
      {"fit.decay",
       [](RunConfig& c, const std::string& v, const std::string&) {
         c.fit_decay = trim(v);
       }},
      {"fit.channel",
       [](RunConfig& c, const std::string& v, const std::string&) {
         c.fit_channel = trim(v);
       }},
      {"fit.max_iterations",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.fit_max_iterations = parse_int(v, k);
       }},
      {"fit.f_threshold",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.fit_f_threshold = parse_double(v, k);
       }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::istringstream iss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(iss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = key_table().find(key);
    if (it == key_table().end())
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": unknown key '" + key + "'");
    if (seen[key]++)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": duplicate key '" + key + "'");
    it->second(cfg, val, key);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream o;
  o << "dipole.d = " << fmt17(c.dipole_d) << "\n";
  o << "dipole.m = " << fmt17(c.dipole_m) << "\n";
  o << "dipole.n = " << fmt17(c.dipole_n) << "\n";
  o << "light.khat = " << fmt17(c.light_khat) << "\n";
  o << "light.epsilon = " << fmt17(c.light_epsilon) << "\n";
  o << "light.e0_mhz = " << fmt17(c.light_e0_mhz) << "\n";
  o << "light.omega0_mhz = " << fmt17(c.light_omega0_mhz) << "\n";
  o << "sequence.t_pi2_us = " << fmt17(c.t_pi2_us) << "\n";
  o << "sequence.t_pi_us = " << fmt17(c.t_pi_us) << "\n";
  o << "sequence.tau_us = " << fmt17(c.tau_us) << "\n";
  o << "stark.shift_khz_per_v_cm = " << fmt17(c.stark_shift_khz) << "\n";
  o << "stark.voltage_v = " << fmt17(c.stark_voltage_v) << "\n";
  o << "stark.plate_cm = " << fmt17(c.stark_plate_cm) << "\n";
  o << "stark.t_on_us = " << fmt17(c.stark_t_on_us) << "\n";
  o << "stark.window_start_us = " << fmt17(c.stark_window_start_us) << "\n";
  o << "stark.guard_us = " << fmt17(c.stark_guard_us) << "\n";
  o << "ensemble.shape = " << c.ensemble_shape << "\n";
  o << "ensemble.width_mhz = " << fmt17(c.ensemble_width_mhz) << "\n";
  o << "ensemble.span_mhz = " << fmt17(c.ensemble_span_mhz) << "\n";
  o << "ensemble.count = " << c.ensemble_count << "\n";
  o << "relax.t1_us = " << fmt17(c.t1_us) << "\n";
  o << "relax.t2_us = " << fmt17(c.t2_us) << "\n";
  o << "detection.e1 = "
    << (c.detection_e1 ? fmt17(*c.detection_e1) : std::string("auto")) << "\n";
  o << "detection.e2 = "
    << (c.detection_e2 ? fmt17(*c.detection_e2) : std::string("auto")) << "\n";
  o << "scan.axis = " << c.scan_axis << "\n";
  o << "scan.samples = " << c.scan_samples << "\n";
  o << "scan.min = " << fmt17(c.scan_min) << "\n";
  o << "scan.max = "
    << (c.scan_max ? fmt17(*c.scan_max) : std::string("auto")) << "\n";
  o << "scan.observable = " << c.scan_observable << "\n";
  o << "sim.window_points = " << c.window_points << "\n";
  o << "sim.window_half_width_us = " << fmt17(c.window_half_width_us) << "\n";
  // run.threads is deliberately absent: results are thread-count invariant
  o << "run.seed = " << c.seed << "\n";
  o << "fit.decay = " << c.fit_decay << "\n";
  o << "fit.channel = " << c.fit_channel << "\n";
  o << "fit.max_iterations = " << c.fit_max_iterations << "\n";
  o << "fit.f_threshold = " << fmt17(c.fit_f_threshold) << "\n";
  return o.str();
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = canonical_config(cfg);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : text) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace starkecho
