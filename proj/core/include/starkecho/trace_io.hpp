#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "starkecho/echo.hpp"
#include "starkecho/errors.hpp"
#include "starkecho/scan.hpp"

namespace starkecho {

// All numeric output uses "%.9g". Nine significant digits survive a
// text -> double -> text round trip unchanged, so emitting, ingesting and
// re-emitting a trace is byte-stable.
std::string format_g9(double v);

// Modulation-trace CSV: "# key = value" metadata comments, then the header
// "x,I_parallel,I_perp,I_total" and one row per sample.
std::string trace_to_csv(const ModulationTrace& trace,
                         const std::string& config_hash = "");
void write_trace_csv(const std::string& path, const ModulationTrace& trace,
                     const std::string& config_hash = "");
ModulationTrace parse_trace_csv(const std::string& text);
ModulationTrace read_trace_csv(const std::string& path);

// Time-resolved echo CSV: intensities plus the complex polarization
// components on the observation grid.
std::string echo_to_csv(const EchoObservables& obs);
void write_echo_csv(const std::string& path, const EchoObservables& obs);

// Column names used when ingesting a foreign CSV.
struct ColumnMap {
  std::string x = "x";
  std::string parallel = "I_parallel";
  std::string perp = "I_perp";
  std::string total = "I_total";
};

// Raw ingested data. Channels absent from the file stay empty; rows are
// sorted by x and `reordered` records whether sorting changed anything.
struct ExperimentTrace {
  std::vector<double> x;
  std::vector<double> I_parallel;
  std::vector<double> I_perp;
  std::vector<double> I_total;
  bool reordered = false;
};

ExperimentTrace parse_experiment_csv(const std::string& text,
                                     const ColumnMap& cols = {});
ExperimentTrace read_experiment_csv(const std::string& path,
                                    const ColumnMap& cols = {});

ModulationTrace to_trace(const ExperimentTrace& exp, ScanAxis axis,
                         const StarkConfig& cfg, double fixed_t_on = 0.0);

// Flat "key = value" result records.
using Record = std::vector<std::pair<std::string, std::string>>;

std::string format_record(const Record& rec);
void write_record(const std::string& path, const Record& rec);
std::map<std::string, std::string> parse_record(const std::string& text);

}  // namespace starkecho
