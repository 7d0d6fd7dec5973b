#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "starkecho/config.hpp"
#include "starkecho/trace_io.hpp"

using namespace starkecho;

namespace {

ModulationTrace sample_trace() {
  ModulationTrace t;
  t.axis = ScanAxis::on_time;
  t.observable = EchoScalar::peak;
  t.meta.voltage = 12.5;
  t.meta.plate_cm = 0.515;
  t.meta.shift_coeff = 15.35;
  t.x = {0.0, 0.1, 0.2, 0.3};
  t.I_parallel = {1.0, 1.0 / 3.0, 0.25, 1e-12};
  t.I_perp = {0.0, 0.01, 0.02, 0.03};
  t.I_total = {1.0, 0.343333333, 0.27, 0.03};
  return t;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

TEST_CASE("nine significant digits, no locale surprises") {
  CHECK(format_g9(0.1) == "0.1");
  CHECK(format_g9(1.0 / 3.0) == "0.333333333");
  CHECK(format_g9(1e-20) == "1e-20");
  CHECK(format_g9(-2.0) == "-2");
  CHECK(format_g9(1234567.0) == "1234567");
}

TEST_CASE("trace csv carries its metadata and survives a round trip") {
  const ModulationTrace t = sample_trace();
  const std::string csv = trace_to_csv(t, "deadbeefdeadbeef");
  CHECK(csv.find("# axis = on_time\n") != std::string::npos);
  CHECK(csv.find("# voltage_v = 12.5\n") != std::string::npos);
  CHECK(csv.find("# config_hash = deadbeefdeadbeef\n") != std::string::npos);
  CHECK(csv.find("x,I_parallel,I_perp,I_total\n") != std::string::npos);

  const ModulationTrace back = parse_trace_csv(csv);
  CHECK(back.axis == ScanAxis::on_time);
  CHECK(back.observable == EchoScalar::peak);
  CHECK(back.meta.voltage == 12.5);
  CHECK(back.meta.plate_cm == 0.515);
  CHECK(back.meta.shift_coeff == 15.35);
  REQUIRE(back.x.size() == 4);
  CHECK(back.I_perp[3] == 0.03);

  // emit -> ingest -> emit is a fixed point, byte for byte
  CHECK(trace_to_csv(back, "deadbeefdeadbeef") == csv);
}

TEST_CASE("trace csv rejects malformed input") {
  CHECK_THROWS_AS(parse_trace_csv("x,y\n1,2\n"), IoError);
  CHECK_THROWS_AS(parse_trace_csv("x,I_parallel,I_perp,I_total\n1,2,3\n"),
                  IoError);
  CHECK_THROWS_AS(
      parse_trace_csv("x,I_parallel,I_perp,I_total\n1,2,three,4\n"), IoError);
  CHECK_THROWS_AS(parse_trace_csv("# axis = sideways\n"), IoError);
  CHECK_THROWS_AS(parse_trace_csv(""), IoError);
}

TEST_CASE("trace csv files round trip on disk") {
  const auto path = temp_file("starkecho_trace_roundtrip.csv");
  const ModulationTrace t = sample_trace();
  write_trace_csv(path.string(), t);
  const ModulationTrace back = read_trace_csv(path.string());
  CHECK(trace_to_csv(back) == trace_to_csv(t));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_trace_csv(path.string()), IoError);
}

TEST_CASE("foreign csv ingestion maps columns and sorts by x") {
  const std::string csv =
      "# comment\n"
      "ton_us,junk,sig_par,sig_perp\n"
      "0.3,9,0.25,0.02\n"
      "0.1,9,0.75,0.01\n"
      "0.2,9,0.5,0.015\n";
  ColumnMap cols;
  cols.x = "ton_us";
  cols.parallel = "sig_par";
  cols.perp = "sig_perp";
  const ExperimentTrace e = parse_experiment_csv(csv, cols);
  CHECK(e.reordered);
  REQUIRE(e.x.size() == 3);
  CHECK(e.x[0] == 0.1);
  CHECK(e.x[2] == 0.3);
  CHECK(e.I_parallel[0] == 0.75);
  CHECK(e.I_perp[2] == 0.02);
  CHECK(e.I_total.empty());

  const ExperimentTrace sorted = parse_experiment_csv(
      "x,I_parallel,I_perp,I_total\n1,2,3,4\n2,3,4,5\n");
  CHECK_FALSE(sorted.reordered);
  CHECK(sorted.I_total[1] == 5.0);
}

TEST_CASE("ingestion failures are typed io errors") {
  CHECK_THROWS_AS(parse_experiment_csv("a,b\n1\n"), IoError);   // ragged
  CHECK_THROWS_AS(parse_experiment_csv("a,b\n1,2\n"), IoError); // no x column
  CHECK_THROWS_AS(parse_experiment_csv("x,b\n1,2\n"), IoError); // no signal
  CHECK_THROWS_AS(parse_experiment_csv(""), IoError);
}

TEST_CASE("ingested data becomes a fittable trace") {
  ExperimentTrace e;
  e.x = {0.0, 0.5, 1.0};
  e.I_parallel = {1.0, 0.4, 0.1};
  StarkConfig cfg;
  cfg.voltage = 8.0;
  const ModulationTrace t = to_trace(e, ScanAxis::on_time, cfg);
  CHECK(t.axis == ScanAxis::on_time);
  CHECK(t.meta.voltage == 8.0);
  CHECK(t.x == e.x);
  CHECK(t.I_parallel == e.I_parallel);
  CHECK(t.I_perp.empty());
}

TEST_CASE("result records are plain key-value text") {
  const Record rec = {{"fit.delta_s", "15.35"}, {"label.direction", "D1"}};
  const std::string text = format_record(rec);
  CHECK(text == "fit.delta_s = 15.35\nlabel.direction = D1\n");
  const auto map = parse_record("# header\nfit.delta_s = 15.35\n\n"
                                "label.direction = D1  # trailing\n");
  CHECK(map.at("fit.delta_s") == "15.35");
  CHECK(map.at("label.direction") == "D1");
  CHECK_THROWS_AS(parse_record("no equals sign here"), IoError);
}

TEST_CASE("echo csv has one row per grid point") {
  EchoObservables obs;
  obs.t_grid = {19.9, 20.0};
  obs.P = {CVec3(cplx(0.1, 0.2), 0.0, 0.0), CVec3(cplx(0.3, -0.4), 0.0, 0.0)};
  obs.I_parallel = {0.05, 0.25};
  obs.I_perp = {0.0, 0.0};
  obs.I_total = {0.05, 0.25};
  const std::string csv = echo_to_csv(obs);
  CHECK(csv.find("t_us,I_parallel,I_perp,I_total,re_Px,im_Px") == 0);
  CHECK(csv.find("\n19.9,0.05,0,0.05,0.1,0.2,0,0,0,0\n") != std::string::npos);
  CHECK(csv.find("\n20,0.25,0,0.25,0.3,-0.4,0,0,0,0\n") != std::string::npos);
}

TEST_CASE("default configuration is its own canonical round trip") {
  const RunConfig def;
  const std::string canon = canonical_config(def);
  const RunConfig back = parse_config(canon);
  CHECK(canonical_config(back) == canon);
  CHECK(config_hash(back) == config_hash(def));
  CHECK(config_hash(def).size() == 16);
}

TEST_CASE("config hash is fnv-1a of the canonical text") {
  const RunConfig def;
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_config(def))));
  CHECK(config_hash(def) == buf);

  RunConfig other;
  other.tau_us = 13.0;
  CHECK(config_hash(other) != config_hash(def));
}

TEST_CASE("config text accepts comments, complex entries and auto") {
  const RunConfig cfg = parse_config(
      "# full hybrid moment\n"
      "dipole.d = 1 0 0\n"
      "dipole.m = 0.25 (0.3,0.3) 0   # complex transverse part\n"
      "sequence.tau_us = 13\n"
      "relax.t2_us = inf\n"
      "scan.max = auto\n"
      "detection.e1 = auto\n"
      "ensemble.shape = gaussian\n");
  CHECK(cfg.dipole_m(0) == cplx(0.25, 0.0));
  CHECK(cfg.dipole_m(1) == cplx(0.3, 0.3));
  CHECK(cfg.tau_us == 13.0);
  CHECK(cfg.t2_us == inf);
  CHECK_FALSE(cfg.scan_max.has_value());
  CHECK_FALSE(cfg.detection_e1.has_value());
  CHECK(cfg.ensemble_shape == "gaussian");
}

TEST_CASE("config text rejects unknown keys, duplicates and bad physics") {
  CHECK_THROWS_AS(parse_config("no.such.key = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("sequence.tau_us = 10\nsequence.tau_us = 11\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config("sequence.tau_us = 0.1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("light.epsilon = 0 0 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("ensemble.shape = bogus\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("dipole.d = 1 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("sequence.tau_us = ten\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("just some words\n"), ValidationError);
}

TEST_CASE("config files load from disk") {
  const auto path = temp_file("starkecho_config_test.cfg");
  {
    std::ofstream out(path);
    out << "sequence.tau_us = 12.5\nrun.seed = 777\n";
  }
  const RunConfig cfg = load_config(path.string());
  CHECK(cfg.tau_us == 12.5);
  CHECK(cfg.seed == 777);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_config(path.string()), IoError);
}
