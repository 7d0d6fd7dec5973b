#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "starkecho/config.hpp"
#include "starkecho/fit.hpp"
#include "starkecho/trace_io.hpp"

using namespace starkecho;

namespace {

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const ShortTraceError*>(&e)) return "short_trace";
  if (dynamic_cast<const NotModulatedError*>(&e)) return "not_modulated";
  if (dynamic_cast<const TraceError*>(&e)) return "trace";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  return "internal";
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + out_path);
  f << text;
  if (!f) throw IoError("write failed: " + out_path);
}

RunConfig load_or_default(const std::string& config_path) {
  if (config_path.empty()) return RunConfig{};
  return load_config(config_path);
}

TraceChannel channel_from(const std::string& name) {
  if (name == "parallel") return TraceChannel::parallel;
  if (name == "perp") return TraceChannel::perp;
  if (name == "total") return TraceChannel::total;
  throw ValidationError("channel must be parallel, perp or total");
}

struct CommonOpts {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_sim_overrides) {
  cmd->add_option("--config", o.config, "configuration file");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
  if (with_sim_overrides) {
    cmd->add_option("--seed", o.seed, "override run.seed");
    cmd->add_option("--threads", o.threads, "override run.threads");
  }
}

RunConfig configure(const CommonOpts& o) {
  RunConfig cfg = load_or_default(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

int run_simulate(const CommonOpts& o) {
  const RunConfig cfg = configure(o);
  const EchoObservables obs = simulate_echo(
      cfg.sequence(), cfg.stark_pulse(), cfg.ensemble(), cfg.dipoles(),
      cfg.light(), cfg.detection(), cfg.relaxation(), cfg.window(),
      cfg.threads);
  emit(o.out, echo_to_csv(obs));
  return 0;
}

struct ScanOpts {
  CommonOpts common;
  std::optional<std::string> axis;
  std::optional<int> samples;
};

int run_scan(const ScanOpts& o) {
  RunConfig cfg = configure(o.common);
  if (o.axis) cfg.scan_axis = *o.axis;
  if (o.samples) cfg.scan_samples = *o.samples;
  cfg.validate();
  const ModulationTrace trace = scan(
      cfg.sequence(), cfg.stark_config(), cfg.stark_pulse(), cfg.ensemble(),
      cfg.dipoles(), cfg.light(), cfg.detection(), cfg.relaxation(),
      cfg.window(), cfg.scan_settings());
  emit(o.common.out, trace_to_csv(trace, config_hash(cfg)));
  return 0;
}

struct FitOpts {
  CommonOpts common;
  std::string in;
  std::optional<std::string> channel;
  std::optional<std::string> decay;
  std::string direction;
  std::string branch;
};

int run_fit(const FitOpts& o) {
  RunConfig cfg = load_or_default(o.common.config);
  if (o.channel) cfg.fit_channel = *o.channel;
  if (o.decay) cfg.fit_decay = *o.decay;

  const ModulationTrace trace = read_trace_csv(o.in);
  const TraceChannel channel = channel_from(cfg.fit_channel);
  const FitResult res =
      fit_trace(trace, channel, std::nullopt, cfg.fit_options());

  Record rec;
  rec.emplace_back("fit.A", format_g9(res.params.A));
  rec.emplace_back("fit.delta_s", format_g9(res.params.delta_s));
  rec.emplace_back("fit.phi", format_g9(res.params.phi));
  rec.emplace_back("fit.W", format_g9(res.params.W));
  rec.emplace_back("fit.C", format_g9(res.params.C));
  rec.emplace_back("sigma.A", format_g9(res.sigma.A));
  rec.emplace_back("sigma.delta_s", format_g9(res.sigma.delta_s));
  rec.emplace_back("sigma.phi", format_g9(res.sigma.phi));
  rec.emplace_back("sigma.W", format_g9(res.sigma.W));
  rec.emplace_back("sigma.C", format_g9(res.sigma.C));
  rec.emplace_back("fit.converged", res.converged ? "true" : "false");
  rec.emplace_back("fit.iterations", std::to_string(res.iterations));
  rec.emplace_back("fit.residual_norm", format_g9(res.residual_norm));

  try {
    const ModulationMetrics m = modulation_metrics(trace, channel);
    rec.emplace_back("metrics.frequency", format_g9(m.frequency));
    rec.emplace_back("metrics.visibility", format_g9(m.visibility));
    rec.emplace_back("metrics.phase", format_g9(m.phase));
  } catch (const TraceError&) {
    // extrema summary is advisory; the fit already succeeded
  }

  rec.emplace_back("provenance.input", o.in);
  if (!o.common.config.empty())
    rec.emplace_back("provenance.config_hash", config_hash(cfg));
  if (!o.direction.empty()) rec.emplace_back("label.direction", o.direction);
  if (!o.branch.empty()) rec.emplace_back("label.branch", o.branch);

  emit(o.common.out, format_record(rec));
  return 0;
}

struct IngestOpts {
  CommonOpts common;
  std::string in;
  std::string axis = "on_time";
  ColumnMap cols;
  double voltage = 10.0;
  double plate_cm = 1.0;
  double shift_coeff = 50.0;
  double fixed_t_on = 0.0;
  bool to_field = false;
};

int run_ingest(const IngestOpts& o) {
  ExperimentTrace e = read_experiment_csv(o.in, o.cols);
  if (e.reordered)
    std::cerr << "note: input rows were reordered by " << o.cols.x << "\n";

  StarkConfig cfg;
  cfg.voltage = o.voltage;
  cfg.plate_cm = o.plate_cm;
  cfg.shift_coeff = o.shift_coeff;

  ScanAxis axis;
  if (o.axis == "on_time") {
    axis = ScanAxis::on_time;
  } else if (o.axis == "voltage") {
    axis = ScanAxis::voltage;
  } else {
    throw ValidationError("axis must be on_time or voltage");
  }

  if (o.to_field) {
    if (axis != ScanAxis::voltage)
      throw ValidationError("--to-field applies to the voltage axis");
    for (double& v : e.x) v /= cfg.plate_cm;
    cfg.plate_cm = 1.0;  // x is now a field in V/cm
  }

  // the standard layout always carries all three channels; absent ones are
  // stored as zeros and reject fitting with a typed error downstream
  const std::size_t n = e.x.size();
  if (e.I_parallel.empty()) e.I_parallel.assign(n, 0.0);
  if (e.I_perp.empty()) e.I_perp.assign(n, 0.0);
  if (e.I_total.empty()) e.I_total.assign(n, 0.0);

  const ModulationTrace trace = to_trace(e, axis, cfg, o.fixed_t_on);
  emit(o.common.out, trace_to_csv(trace));
  return 0;
}

struct TableOpts {
  std::string out;
  std::vector<std::string> records;
};

int run_table(const TableOpts& o) {
  struct Row {
    std::string direction, branch;
    double delta_s = 0.0, sigma = 0.0;
  };
  std::vector<Row> rows;
  for (const std::string& path : o.records) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    const auto rec = parse_record(buf.str());
    Row r;
    const auto dir = rec.find("label.direction");
    const auto br = rec.find("label.branch");
    const auto ds = rec.find("fit.delta_s");
    const auto sg = rec.find("sigma.delta_s");
    if (ds == rec.end())
      throw IoError("record has no fit.delta_s: " + path);
    r.direction = dir == rec.end() ? "-" : dir->second;
    r.branch = br == rec.end() ? "-" : br->second;
    r.delta_s = std::strtod(ds->second.c_str(), nullptr);
    r.sigma = sg == rec.end() ? 0.0 : std::strtod(sg->second.c_str(), nullptr);
    rows.push_back(r);
  }

  std::ostringstream t;
  t << "direction  branch  delta_s_khz_per_v_cm  sigma\n";
  for (const Row& r : rows)
    t << r.direction << "  " << r.branch << "  " << format_g9(r.delta_s)
      << "  " << format_g9(r.sigma) << "\n";

  // pair up branches per direction and split them
  std::map<std::string, std::map<std::string, double>> by_dir;
  for (const Row& r : rows) by_dir[r.direction][r.branch] = r.delta_s;
  for (const auto& [dir, branches] : by_dir) {
    const auto lo = branches.find("lower");
    const auto hi = branches.find("upper");
    if (lo == branches.end() || hi == branches.end()) continue;
    const ZeemanBranchShifts z =
        ZeemanBranchShifts::from_branches(lo->second, hi->second);
    t << dir << ": delta_o = " << format_g9(z.delta_o)
      << "  delta_g = " << format_g9(z.delta_g) << "\n";
  }
  emit(o.out, t.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stark-modulated photon echo simulation and analysis"};
  app.require_subcommand(1);

  CommonOpts sim_opts;
  CLI::App* sim = app.add_subcommand(
      "simulate", "time-resolved echo around the rephasing point");
  add_common(sim, sim_opts, true);

  ScanOpts scan_opts;
  CLI::App* scn = app.add_subcommand(
      "scan", "echo intensity versus stark window length or voltage");
  add_common(scn, scan_opts.common, true);
  scn->add_option("--axis", scan_opts.axis, "on_time or voltage")
      ->check(CLI::IsMember({"on_time", "voltage"}));
  scn->add_option("--samples", scan_opts.samples, "scan points");

  FitOpts fit_opts;
  CLI::App* fit = app.add_subcommand(
      "fit", "least-squares modulation model on a trace csv");
  add_common(fit, fit_opts.common, false);
  fit->add_option("--in", fit_opts.in, "trace csv")->required();
  fit->add_option("--channel", fit_opts.channel, "parallel, perp or total")
      ->check(CLI::IsMember({"parallel", "perp", "total"}));
  fit->add_option("--fit-decay", fit_opts.decay, "auto, on or off")
      ->check(CLI::IsMember({"auto", "on", "off"}));
  fit->add_option("--direction", fit_opts.direction,
                  "site direction label for the record");
  fit->add_option("--branch", fit_opts.branch,
                  "zeeman branch label (lower/upper)");

  IngestOpts ing_opts;
  CLI::App* ing = app.add_subcommand(
      "ingest", "normalize a foreign csv into the trace layout");
  ing->add_option("--in", ing_opts.in, "source csv")->required();
  ing->add_option("--out", ing_opts.common.out, "output file");
  ing->add_option("--axis", ing_opts.axis, "on_time or voltage")
      ->check(CLI::IsMember({"on_time", "voltage"}));
  ing->add_option("--x-col", ing_opts.cols.x, "x column name");
  ing->add_option("--ipar-col", ing_opts.cols.parallel,
                  "parallel channel column");
  ing->add_option("--iperp-col", ing_opts.cols.perp,
                  "perpendicular channel column");
  ing->add_option("--itotal-col", ing_opts.cols.total, "total channel column");
  ing->add_option("--voltage", ing_opts.voltage, "plate voltage, V");
  ing->add_option("--plate-cm", ing_opts.plate_cm, "plate separation, cm");
  ing->add_option("--shift-coeff", ing_opts.shift_coeff,
                  "stark coefficient, kHz/(V/cm)");
  ing->add_option("--fixed-ton", ing_opts.fixed_t_on,
                  "window length for voltage-axis data, us");
  ing->add_flag("--to-field", ing_opts.to_field,
                "rescale a voltage axis to field (V/cm)");

  TableOpts tab_opts;
  CLI::App* tab = app.add_subcommand(
      "table", "collect fit records into a branch table");
  tab->add_option("--out", tab_opts.out, "output file");
  tab->add_option("records", tab_opts.records, "fit record files")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) return run_simulate(sim_opts);
    if (scn->parsed()) return run_scan(scan_opts);
    if (fit->parsed()) return run_fit(fit_opts);
    if (ing->parsed()) return run_ingest(ing_opts);
    if (tab->parsed()) return run_table(tab_opts);
  } catch (const std::exception& e) {
    std::cerr << "error.type = " << error_kind(e) << "\n"
              << "error.message = " << e.what() << "\n";
    return 1;
  }
  return 0;
}
