#include "starkecho/trace_io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

namespace starkecho {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream iss(line);
  while (std::getline(iss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double to_double(const std::string& tok, int lineno) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw IoError("csv line " + std::to_string(lineno) + ": bad number '" +
                  tok + "'");
  return v;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* axis_name(ScanAxis a) {
  return a == ScanAxis::on_time ? "on_time" : "voltage";
}

const char* observable_name(EchoScalar s) {
  return s == EchoScalar::peak ? "peak" : "area";
}

}  // namespace

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string trace_to_csv(const ModulationTrace& trace,
                         const std::string& config_hash) {
  const std::size_t n = trace.x.size();
  if (trace.I_parallel.size() != n || trace.I_perp.size() != n ||
      trace.I_total.size() != n)
    throw ValidationError("trace channels disagree in length");
  std::ostringstream o;
  o << "# axis = " << axis_name(trace.axis) << "\n";
  o << "# observable = " << observable_name(trace.observable) << "\n";
  o << "# voltage_v = " << format_g9(trace.meta.voltage) << "\n";
  o << "# plate_cm = " << format_g9(trace.meta.plate_cm) << "\n";
  o << "# shift_coeff_khz_per_v_cm = " << format_g9(trace.meta.shift_coeff)
    << "\n";
  o << "# fixed_t_on_us = " << format_g9(trace.fixed_t_on) << "\n";
  if (!config_hash.empty()) o << "# config_hash = " << config_hash << "\n";
  o << "x,I_parallel,I_perp,I_total\n";
  for (std::size_t i = 0; i < n; ++i)
    o << format_g9(trace.x[i]) << ',' << format_g9(trace.I_parallel[i]) << ','
      << format_g9(trace.I_perp[i]) << ',' << format_g9(trace.I_total[i])
      << "\n";
  return o.str();
}

void write_trace_csv(const std::string& path, const ModulationTrace& trace,
                     const std::string& config_hash) {
  write_file(path, trace_to_csv(trace, config_hash));
}

ModulationTrace parse_trace_csv(const std::string& text) {
  ModulationTrace t;
  std::istringstream iss(text);
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(iss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1));
      const std::string val = trim(line.substr(eq + 1));
      if (key == "axis") {
        if (val == "on_time")
          t.axis = ScanAxis::on_time;
        else if (val == "voltage")
          t.axis = ScanAxis::voltage;
        else
          throw IoError("trace csv: unknown axis '" + val + "'");
      } else if (key == "observable") {
        if (val == "peak")
          t.observable = EchoScalar::peak;
        else if (val == "area")
          t.observable = EchoScalar::area;
        else
          throw IoError("trace csv: unknown observable '" + val + "'");
      } else if (key == "voltage_v") {
        t.meta.voltage = to_double(val, lineno);
      } else if (key == "plate_cm") {
        t.meta.plate_cm = to_double(val, lineno);
      } else if (key == "shift_coeff_khz_per_v_cm") {
        t.meta.shift_coeff = to_double(val, lineno);
      } else if (key == "fixed_t_on_us") {
        t.fixed_t_on = to_double(val, lineno);
      }
      // other comment keys (config_hash, annotations) pass through silently
      continue;
    }
    if (!header_seen) {
      if (split_csv(line) !=
          std::vector<std::string>{"x", "I_parallel", "I_perp", "I_total"})
        throw IoError("trace csv: expected header x,I_parallel,I_perp,"
                      "I_total");
      header_seen = true;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != 4)
      throw IoError("csv line " + std::to_string(lineno) +
                    ": expected 4 columns");
    t.x.push_back(to_double(cells[0], lineno));
    t.I_parallel.push_back(to_double(cells[1], lineno));
    t.I_perp.push_back(to_double(cells[2], lineno));
    t.I_total.push_back(to_double(cells[3], lineno));
  }
  if (!header_seen) throw IoError("trace csv: missing header");
  return t;
}

ModulationTrace read_trace_csv(const std::string& path) {
  return parse_trace_csv(read_file(path));
}

std::string echo_to_csv(const EchoObservables& obs) {
  std::ostringstream o;
  o << "t_us,I_parallel,I_perp,I_total,re_Px,im_Px,re_Py,im_Py,re_Pz,im_Pz\n";
  for (std::size_t i = 0; i < obs.t_grid.size(); ++i) {
    o << format_g9(obs.t_grid[i]) << ',' << format_g9(obs.I_parallel[i])
      << ',' << format_g9(obs.I_perp[i]) << ',' << format_g9(obs.I_total[i]);
    for (int c = 0; c < 3; ++c)
      o << ',' << format_g9(obs.P[i](c).real()) << ','
        << format_g9(obs.P[i](c).imag());
    o << "\n";
  }
  return o.str();
}

void write_echo_csv(const std::string& path, const EchoObservables& obs) {
  write_file(path, echo_to_csv(obs));
}

ExperimentTrace parse_experiment_csv(const std::string& text,
                                     const ColumnMap& cols) {
  std::istringstream iss(text);
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  while (std::getline(iss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (header.empty()) {
      header = split_csv(line);
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw IoError("csv line " + std::to_string(lineno) + ": expected " +
                    std::to_string(header.size()) + " columns");
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = to_double(cells[c], lineno);
    rows.push_back(std::move(row));
  }
  if (header.empty()) throw IoError("csv: missing header row");

  const auto col_index = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end()
               ? -1
               : static_cast<int>(it - header.begin());
  };
  const int ix = col_index(cols.x);
  if (ix < 0) throw IoError("csv: missing column '" + cols.x + "'");
  const int ipar = col_index(cols.parallel);
  const int iperp = col_index(cols.perp);
  const int itot = col_index(cols.total);
  if (ipar < 0 && iperp < 0 && itot < 0)
    throw IoError("csv: no intensity column among '" + cols.parallel + "', '" +
                  cols.perp + "', '" + cols.total + "'");

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return rows[a][ix] < rows[b][ix];
                   });

  ExperimentTrace out;
  out.reordered = !std::is_sorted(order.begin(), order.end());
  out.x.reserve(rows.size());
  for (const std::size_t r : order) {
    out.x.push_back(rows[r][ix]);
    if (ipar >= 0) out.I_parallel.push_back(rows[r][ipar]);
    if (iperp >= 0) out.I_perp.push_back(rows[r][iperp]);
    if (itot >= 0) out.I_total.push_back(rows[r][itot]);
  }
  return out;
}

ExperimentTrace read_experiment_csv(const std::string& path,
                                    const ColumnMap& cols) {
  return parse_experiment_csv(read_file(path), cols);
}

ModulationTrace to_trace(const ExperimentTrace& exp, ScanAxis axis,
                         const StarkConfig& cfg, double fixed_t_on) {
  ModulationTrace t;
  t.axis = axis;
  t.x = exp.x;
  t.I_parallel = exp.I_parallel;
  t.I_perp = exp.I_perp;
  t.I_total = exp.I_total;
  t.meta = cfg;
  t.fixed_t_on = fixed_t_on;
  return t;
}

std::string format_record(const Record& rec) {
  std::ostringstream o;
  for (const auto& [key, value] : rec) o << key << " = " << value << "\n";
  return o.str();
}

void write_record(const std::string& path, const Record& rec) {
  write_file(path, format_record(rec));
}

std::map<std::string, std::string> parse_record(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream iss(text);
  std::string line;
  while (std::getline(iss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("record: expected key = value, got '" + line + "'");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace starkecho
