#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "schema_check.hpp"
#include "ulrates/dms.hpp"
#include "ulrates/dynamics.hpp"
#include "ulrates/potentials.hpp"
#include "ulrates/rates.hpp"
#include "ulrates/spectral.hpp"
#include "ulrates_cli/commands.hpp"
#include "ulrates_cli/io.hpp"

TEST_SUITE("cli") {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("ulrates_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

// Redirect an fd into a file for the duration; restores on stop()/dtor so
// the test harness output is never swallowed by accident.
struct Capture {
  int fd = -1, saved = -1;
  fs::path file;
  explicit Capture(int fd_in) : fd(fd_in) {
    static std::atomic<int> counter{0};
    file = fs::temp_directory_path() /
           ("ulrates_cap_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::fflush(fd == 1 ? stdout : stderr);
    saved = ::dup(fd);
    const int f = ::open(file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    ::dup2(f, fd);
    ::close(f);
  }
  std::string stop() {
    if (saved < 0) return "";
    std::fflush(fd == 1 ? stdout : stderr);
    ::dup2(saved, fd);
    ::close(saved);
    saved = -1;
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::error_code ec;
    fs::remove(file, ec);
    return ss.str();
  }
  ~Capture() { stop(); }
};

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run(const std::vector<std::string>& args) {
  Capture cap_out(1), cap_err(2);
  RunResult r;
  r.code = ulrates_cli::run_cli(args);
  r.err = cap_err.stop();
  r.out = cap_out.stop();
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) { return json::parse(read_file(p)); }

std::vector<std::string> dir_files(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

// Validate a value against one of the shipped schema files; empty result
// means conforming.
void check_schema(const std::string& schema_name, const json& value) {
  const json schema =
      load_json(fs::path(ULRATES_SCHEMA_DIR) / (schema_name + ".schema.json"));
  const auto errors = schema_check::validate(schema, value);
  for (const auto& e : errors) {
    INFO(schema_name << ": " << e);
    CHECK(false);
  }
  CHECK(errors.empty());
}

// Every run writes exactly one manifest; everything else in the directory
// must be reachable from it.
json manifest_of(const fs::path& dir) {
  std::optional<fs::path> found;
  for (const auto& name : dir_files(dir)) {
    if (name.rfind("manifest_", 0) == 0) {
      REQUIRE_FALSE(found.has_value());
      found = dir / name;
    }
  }
  REQUIRE(found.has_value());
  const json man = load_json(*found);
  check_schema("manifest", man);
  CHECK(found->filename().string() ==
        "manifest_" + man.at("run_id").get<std::string>() + ".json");
  std::vector<std::string> expected{found->filename().string()};
  for (const auto& a : man.at("artifacts"))
    expected.push_back(a.get<std::string>());
  std::sort(expected.begin(), expected.end());
  CHECK(dir_files(dir) == expected);
  return man;
}

double stdout_value(const std::string& out, const std::string& key) {
  const auto pos = out.find(key + " = ");
  REQUIRE(pos != std::string::npos);
  return std::stod(out.substr(pos + key.size() + 3));
}

struct EnvGuard {
  std::string name;
  std::optional<std::string> old;
  EnvGuard(const char* n, const std::string& v) : name(n) {
    if (const char* o = std::getenv(n)) old = o;
    ::setenv(n, v.c_str(), 1);
  }
  ~EnvGuard() {
    if (old)
      ::setenv(name.c_str(), old->c_str(), 1);
    else
      ::unsetenv(name.c_str());
  }
};

}  // namespace

TEST_CASE("rate writes a conforming result and manifest") {
  TempDir dir;
  const RunResult r = run({"rate", "--m", "1", "--gamma", "1", "--R", "0",
                           "--c0", "1", "--output-dir", dir.str()});
  REQUIRE(r.code == 0);
  CHECK(stdout_value(r.out, "lambda") == std::log1p(0.25));

  const json man = manifest_of(dir.path);
  CHECK(man.at("tool") == "ulrates");
  CHECK(man.at("command") == "rate");
  CHECK(man.at("config").at("m") == 1.0);
  CHECK(man.at("config").at("gamma") == 1.0);
  REQUIRE(man.at("artifacts").size() == 1);

  const json rate =
      load_json(dir.path / man.at("artifacts")[0].get<std::string>());
  check_schema("rate_result", rate);
  CHECK(rate.at("lambda").get<double>() == std::log1p(0.25));
  CHECK(rate.at("regime") == "convex");
  CHECK(rate.at("inputs").at("c0") == 1.0);
  CHECK(rate.at("has_universal_prefactor") == true);
}

TEST_CASE("identical configs yield byte-identical artifacts") {
  TempDir dir;
  const std::vector<std::string> args{"rate",       "--m",  "2", "--gamma",
                                      "0.5",        "--c0", "3", "--output-dir",
                                      dir.str()};
  REQUIRE(run(args).code == 0);
  std::vector<std::pair<std::string, std::string>> first;
  for (const auto& name : dir_files(dir.path))
    first.emplace_back(name, read_file(dir.path / name));
  REQUIRE(run(args).code == 0);
  std::vector<std::pair<std::string, std::string>> second;
  for (const auto& name : dir_files(dir.path))
    second.emplace_back(name, read_file(dir.path / name));
  CHECK(first == second);  // same run id, same bytes, no leftovers
}

TEST_CASE("config file fills defaults and flags override it") {
  TempDir dir;
  const fs::path cfg = dir.path / "rate.json";
  {
    std::ofstream out(cfg);
    out << R"({"m": 4.0, "gamma": 2.0, "c0": 2.0})";
  }
  TempDir outdir;
  const RunResult r = run({"rate", "--config", cfg.string(), "--gamma", "1",
                           "--output-dir", outdir.str()});
  REQUIRE(r.code == 0);

  ulrates::RateInputs in;
  in.m = 4.0;      // from the config file
  in.gamma = 1.0;  // flag wins over the file's 2.0
  in.R = 0.0;
  in.c0 = 2.0;
  CHECK(stdout_value(r.out, "lambda") == ulrates::main_rate(in).lambda);

  const json man = manifest_of(outdir.path);
  CHECK(man.at("config").at("m") == 4.0);
  CHECK(man.at("config").at("gamma") == 1.0);
  CHECK(man.at("config").at("c0") == 2.0);
}

TEST_CASE("unknown config keys are rejected, not ignored") {
  TempDir dir;
  const fs::path cfg = dir.path / "bad.json";
  {
    std::ofstream out(cfg);
    out << R"({"gamma": 1.0, "gama": 2.0})";
  }
  const RunResult r = run({"rate", "--config", cfg.string(), "--output-dir",
                           dir.str()});
  CHECK(r.code == 1);
  const json err = json::parse(r.err);
  CHECK(err.at("error").at("kind") == "invalid_parameter");
  CHECK(err.at("error").at("message") ==
        "unknown config key: \"gama\"");
  CHECK(dir_files(dir.path) == std::vector<std::string>{"bad.json"});
}

TEST_CASE("domain errors exit 1 and usage errors are structured") {
  TempDir dir;
  const RunResult bad_m = run({"rate", "--m", "-1", "--output-dir", dir.str()});
  CHECK(bad_m.code == 1);
  CHECK(json::parse(bad_m.err).at("error").at("kind") == "invalid_parameter");

  const RunResult unknown = run({"frobnicate"});
  CHECK(unknown.code != 0);
  CHECK(json::parse(unknown.err).at("error").at("kind") == "usage");

  const RunResult none = run({});
  CHECK(none.code != 0);
  CHECK(json::parse(none.err).at("error").at("kind") == "usage");
}

TEST_CASE("output directory falls back to the environment variable") {
  TempDir dir;
  EnvGuard env("ULRATES_OUTPUT_DIR", dir.str());
  const RunResult r = run({"rate", "--m", "1", "--gamma", "1"});
  REQUIRE(r.code == 0);
  const json man = manifest_of(dir.path);
  CHECK(man.at("command") == "rate");
}

TEST_CASE("format filter selects artifact kinds; the manifest always lands") {
  TempDir as_json;
  REQUIRE(run({"sweep-gamma", "--m", "1", "--num", "5", "--gamma-min", "0.5",
               "--gamma-max", "2", "--format", "json", "--output-dir",
               as_json.str()})
              .code == 0);
  const json man_j = manifest_of(as_json.path);
  REQUIRE(man_j.at("artifacts").size() == 1);
  CHECK(man_j.at("artifacts")[0].get<std::string>().find(".json") !=
        std::string::npos);

  TempDir as_csv;
  REQUIRE(run({"sweep-gamma", "--m", "1", "--num", "5", "--gamma-min", "0.5",
               "--gamma-max", "2", "--format", "csv", "--output-dir",
               as_csv.str()})
              .code == 0);
  const json man_c = manifest_of(as_csv.path);
  REQUIRE(man_c.at("artifacts").size() == 1);
  CHECK(man_c.at("artifacts")[0].get<std::string>().find(".csv") !=
        std::string::npos);

  const RunResult bad = run({"rate", "--format", "yaml"});
  CHECK(bad.code != 0);
  CHECK(json::parse(bad.err).at("error").at("kind") == "usage");
}

TEST_CASE("sweep-gamma reproduces the closed-form curve and maximizer") {
  TempDir dir;
  const RunResult r =
      run({"sweep-gamma", "--m", "1", "--gamma-min", "0.25", "--gamma-max",
           "4", "--num", "9", "--spacing", "log", "--output-dir", dir.str()});
  REQUIRE(r.code == 0);
  const json man = manifest_of(dir.path);

  std::string csv_name, json_name;
  for (const auto& a : man.at("artifacts")) {
    const std::string s = a.get<std::string>();
    (s.find(".csv") != std::string::npos ? csv_name : json_name) = s;
  }
  const ulrates_cli::ParsedCsv table =
      ulrates_cli::parse_csv(read_file(dir.path / csv_name));
  CHECK(table.header == std::vector<std::string>{"gamma", "lambda"});
  REQUIRE(table.rows.size() == 9);
  for (const auto& row : table.rows) {
    const double g = std::stod(row[0]);
    ulrates::RateInputs in;
    in.m = 1.0;
    in.gamma = g;
    CHECK(std::stod(row[1]) == ulrates::main_rate(in).lambda);
  }

  const json summary = load_json(dir.path / json_name);
  check_schema("sweep_summary", summary);
  CHECK(summary.at("argmax_gamma") == 1.0);  // grid midpoint = sqrt(m)
  CHECK(summary.at("gamma_star_closed_form") == 1.0);
  CHECK(summary.at("lambda_max").get<double>() == std::log1p(0.25));
}

TEST_CASE("spectrum at critical damping contains the documented row") {
  TempDir dir;
  const RunResult r = run({"spectrum", "--m", "1", "--gamma", "2", "--nmax",
                           "3", "--output-dir", dir.str()});
  REQUIRE(r.code == 0);
  CHECK(stdout_value(r.out, "gap") == 1.0);

  const json man = manifest_of(dir.path);
  std::string csv_name, json_name;
  for (const auto& a : man.at("artifacts")) {
    const std::string s = a.get<std::string>();
    (s.find(".csv") != std::string::npos ? csv_name : json_name) = s;
  }
  const ulrates_cli::ParsedCsv table =
      ulrates_cli::parse_csv(read_file(dir.path / csv_name));
  CHECK(table.header == std::vector<std::string>{"i", "j", "re", "im"});
  REQUIRE(table.rows.size() == 16);
  bool found = false;
  for (const auto& row : table.rows)
    if (row[0] == "0" && row[1] == "1")
      found = std::stod(row[2]) == 1.0 && std::stod(row[3]) == 0.0;
  CHECK(found);

  const json summary = load_json(dir.path / json_name);
  check_schema("spectrum_summary", summary);
  CHECK(summary.at("gap") == 1.0);
  CHECK(summary.at("truncation").is_null());
  CHECK(summary.at("n_eigenvalues") == 16);
}

TEST_CASE("galerkin emits the truncated spectrum with the exact reference") {
  TempDir dir;
  const RunResult r = run({"galerkin", "--m", "1", "--gamma", "1", "--N", "8",
                           "--output-dir", dir.str()});
  REQUIRE(r.code == 0);
  const json man = manifest_of(dir.path);
  std::string csv_name, json_name;
  for (const auto& a : man.at("artifacts")) {
    const std::string s = a.get<std::string>();
    (s.find(".csv") != std::string::npos ? csv_name : json_name) = s;
  }
  const json summary = load_json(dir.path / json_name);
  check_schema("spectrum_summary", summary);
  CHECK(summary.at("truncation") == 8);
  CHECK(summary.at("gap_exact") == 0.5);
  CHECK(std::abs(summary.at("gap").get<double>() - 0.5) <= 1e-8);

  const ulrates_cli::ParsedCsv table =
      ulrates_cli::parse_csv(read_file(dir.path / csv_name));
  CHECK(table.rows.size() == 81);  // (N+1)^2 labeled eigenvalues
}

TEST_CASE("dms optimizes by default and honors a fixed twist") {
  TempDir dir;
  const RunResult r = run({"dms", "--gamma", "1", "--m", "1", "--K", "0",
                           "--output-dir", dir.str()});
  REQUIRE(r.code == 0);
  const json man = manifest_of(dir.path);
  const json payload =
      load_json(dir.path / man.at("artifacts")[0].get<std::string>());
  check_schema("dms_result", payload);
  const ulrates::DmsOptimum opt =
      ulrates::dms_optimize(1.0, 1.0, ulrates::r_ham_bound(0.0));
  CHECK(payload.at("lambda_star").get<double>() == opt.lambda_star);
  CHECK(payload.at("epsilon_star").get<double>() == opt.epsilon_star);
  CHECK(payload.at("lambda_star").get<double>() > 0.0);
  CHECK(payload.at("at_boundary") == false);
  CHECK(payload.at("r_ham").get<double>() == std::sqrt(2.0));

  TempDir fixed;
  const RunResult rf = run({"dms", "--gamma", "1", "--m", "1", "--K", "0",
                            "--epsilon", "0.1", "--output-dir", fixed.str()});
  REQUIRE(rf.code == 0);
  const json man_f = manifest_of(fixed.path);
  const json fixed_payload =
      load_json(fixed.path / man_f.at("artifacts")[0].get<std::string>());
  check_schema("dms_result", fixed_payload);
  CHECK(fixed_payload.at("epsilon") == 0.1);
  CHECK(fixed_payload.at("lambda").get<double>() ==
        0.035778349626280903);
}

TEST_CASE("poincare defaults its window to the curvature scale") {
  TempDir dir;
  const RunResult r = run({"poincare", "--potential", "quadratic", "--m", "4",
                           "--n", "512", "--output-dir", dir.str()});
  REQUIRE(r.code == 0);
  const json man = manifest_of(dir.path);
  const json payload =
      load_json(dir.path / man.at("artifacts")[0].get<std::string>());
  check_schema("poincare_estimate", payload);
  CHECK(payload.at("grid").at("x_min") == -4.0);  // 8 / sqrt(m)
  CHECK(payload.at("grid").at("x_max") == 4.0);
  CHECK(payload.at("grid").at("n_points") == 512);
  CHECK(std::abs(payload.at("m_hat").get<double>() - 4.0) <= 4e-3);
  CHECK(payload.at("tolerance").get<double>() > 0.0);
  CHECK(stdout_value(r.out, "m_hat") ==
        payload.at("m_hat").get<double>());
}

TEST_CASE("simulate runs from a config and the worker flag is inert") {
  TempDir dir;
  const fs::path cfg = dir.path / "sim.json";
  {
    json c;
    c["potential"] = {{"kind", "quadratic"}, {"m", 1.0}, {"d", 1}};
    c["scheme"] = "euler_maruyama";
    c["dt"] = 0.01;
    c["t_final"] = 1.0;
    c["gamma"] = 3.0;
    c["n_traj"] = 200;
    c["seed"] = 7;
    c["init"] = {{"kind", "point_mass"}, {"mean", {1.0, 0.0}}};
    c["observables"] = {"x", "v2"};
    c["output_every"] = 10;
    c["workers"] = 2;
    c["fit"] = {{"mode", "tail_linear"},
                {"observable", "x"},
                {"t_start", 0.1},
                {"t_end", 1.0}};
    std::ofstream out(cfg);
    out << c.dump(2);
  }
  TempDir out1;
  const RunResult r = run({"simulate", "--config", cfg.string(),
                           "--output-dir", out1.str()});
  REQUIRE(r.code == 0);
  const json man = manifest_of(out1.path);
  CHECK_FALSE(man.at("config").contains("workers"));  // never hashed

  std::string csv_name, fit_name;
  for (const auto& a : man.at("artifacts")) {
    const std::string s = a.get<std::string>();
    (s.find(".csv") != std::string::npos ? csv_name : fit_name) = s;
  }
  const ulrates_cli::ParsedCsv table =
      ulrates_cli::parse_csv(read_file(out1.path / csv_name));
  CHECK(table.header ==
        std::vector<std::string>{"t", "x_mean", "x_stderr", "v2_mean",
                                 "v2_stderr"});
  REQUIRE(table.rows.size() == 11);
  CHECK(std::stod(table.rows[0][0]) == 0.0);
  CHECK(std::stod(table.rows[0][1]) == 1.0);  // point mass start
  CHECK(std::stod(table.rows[0][2]) == 0.0);
  CHECK(std::stod(table.rows[0][3]) == 0.0);

  // The table is the deterministic ensemble output.
  ulrates::IntegratorConfig icfg;
  icfg.scheme = ulrates::Scheme::EulerMaruyama;
  icfg.dt = 0.01;
  icfg.t_final = 1.0;
  icfg.gamma = 3.0;
  icfg.seed = 7;
  ulrates::InitialCondition init;
  init.kind = ulrates::InitialCondition::Kind::PointMass;
  init.mean = Eigen::VectorXd::Zero(2);
  init.mean[0] = 1.0;
  const ulrates::EnsembleSeries series = ulrates::simulate_ensemble(
      ulrates::make_isotropic_quadratic(1.0, 1), icfg, 200, init,
      {ulrates::observable_by_name("x"), ulrates::observable_by_name("v2")},
      10, 2);
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    CHECK(std::stod(table.rows[k][0]) == series.times[k]);
    CHECK(std::stod(table.rows[k][1]) == series.means[k][0]);
    CHECK(std::stod(table.rows[k][2]) == series.stderrs[k][0]);
    CHECK(std::stod(table.rows[k][3]) == series.means[k][1]);
    CHECK(std::stod(table.rows[k][4]) == series.stderrs[k][1]);
  }

  const json fit = load_json(out1.path / fit_name);
  check_schema("decay_fit", fit);
  CHECK(fit.at("mode") == "tail_linear");
  CHECK(fit.at("rate").get<double>() > 0.0);

  // Same config, different worker count: identical bytes, identical run id.
  TempDir out2;
  REQUIRE(run({"simulate", "--config", cfg.string(), "--workers", "1",
               "--output-dir", out2.str()})
              .code == 0);
  CHECK(read_file(out2.path / csv_name) == read_file(out1.path / csv_name));

  // Unknown nested keys are rejected like top-level ones.
  const fs::path bad = dir.path / "bad_init.json";
  {
    std::ofstream out(bad);
    out << R"({"potential": {"kind": "quadratic", "m": 1.0}, "dt": 0.01,
               "t_final": 0.1, "n_traj": 2,
               "init": {"kind": "point_mass", "bogus": 1}})";
  }
  const RunResult rb = run({"simulate", "--config", bad.string(),
                            "--output-dir", dir.str()});
  CHECK(rb.code == 1);
  CHECK(json::parse(rb.err).at("error").at("message") ==
        "unknown config key: \"init.bogus\"");
}

TEST_CASE("fit ingests toolkit CSV and returns the decay rate") {
  TempDir dir;
  ulrates_cli::CsvTable table({"t", "y"});
  for (int i = 0; i <= 200; ++i) {
    const double t = i * 0.01;
    table.add_row({ulrates_cli::format_double(t),
                   ulrates_cli::format_double(3.0 * std::exp(-1.25 * t))});
  }
  const fs::path input = dir.path / "series.csv";
  ulrates_cli::atomic_write(input, table.str());

  TempDir out;
  const RunResult r = run({"fit", "--input", input.string(), "--value-col",
                           "y", "--mode", "tail_linear", "--output-dir",
                           out.str()});
  REQUIRE(r.code == 0);
  const json man = manifest_of(out.path);
  const json fit =
      load_json(out.path / man.at("artifacts")[0].get<std::string>());
  check_schema("decay_fit", fit);
  CHECK(std::abs(fit.at("rate").get<double>() - 1.25) <= 1e-9);
  CHECK(std::abs(fit.at("log_intercept").get<double>() - std::log(3.0)) <=
        1e-9);
  CHECK(fit.at("window").at("t_start") == 0.0);  // defaults to the data span
  CHECK(fit.at("window").at("t_end") == 2.0);
  CHECK(stdout_value(r.out, "rate") == fit.at("rate").get<double>());

  const RunResult missing = run({"fit", "--input", input.string(),
                                 "--value-col", "z", "--output-dir",
                                 out.str()});
  CHECK(missing.code == 1);
  CHECK(json::parse(missing.err).at("error").at("message") ==
        "no such column: \"z\"");
}

TEST_CASE("report emits one row per grid point with the exact column") {
  TempDir dir;
  const fs::path cfg = dir.path / "report.json";
  {
    std::ofstream out(cfg);
    out << R"({"potential": {"kind": "quadratic", "m": 1.0},
               "gamma_values": [1.0]})";
  }
  TempDir outdir;
  const RunResult r = run({"report", "--config", cfg.string(), "--output-dir",
                           outdir.str()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("wrote 1 report rows") != std::string::npos);
  const json man = manifest_of(outdir.path);
  const ulrates_cli::ParsedCsv table = ulrates_cli::parse_csv(
      read_file(outdir.path / man.at("artifacts")[0].get<std::string>()));
  CHECK(table.header ==
        std::vector<std::string>{"m", "gamma", "R", "c0", "lambda_main",
                                 "lambda_dms", "lambda_exact"});
  REQUIRE(table.rows.size() == 1);
  const auto& row = table.rows[0];
  CHECK(std::stod(row[0]) == 1.0);
  CHECK(std::stod(row[1]) == 1.0);
  CHECK(std::stod(row[2]) == 0.0);  // quadratic potential is convex
  CHECK(std::stod(row[3]) == 1.0);
  CHECK(std::stod(row[4]) == std::log1p(0.25));
  CHECK(std::stod(row[5]) ==
        ulrates::dms_optimize(1.0, 1.0, std::sqrt(2.0)).lambda_star);
  CHECK(std::stod(row[6]) == 0.5);
}

TEST_CASE("report twisted-norm column is unimodal over a log friction grid") {
  TempDir dir;
  const fs::path cfg = dir.path / "report.json";
  {
    json c;
    c["potential"] = {{"kind", "quadratic"}, {"m", 1.0}};
    std::vector<double> gammas;
    for (int i = 0; i < 25; ++i)
      gammas.push_back(1e-3 * std::pow(1e6, i / 24.0));
    c["gamma_values"] = gammas;
    std::ofstream out(cfg);
    out << c.dump();
  }
  TempDir outdir;
  REQUIRE(run({"report", "--config", cfg.string(), "--output-dir",
               outdir.str()})
              .code == 0);
  const json man = manifest_of(outdir.path);
  const ulrates_cli::ParsedCsv table = ulrates_cli::parse_csv(
      read_file(outdir.path / man.at("artifacts")[0].get<std::string>()));
  REQUIRE(table.rows.size() == 25);
  std::vector<double> dms;
  for (const auto& row : table.rows) dms.push_back(std::stod(row[5]));

  std::size_t peak = 0;
  for (std::size_t i = 1; i < dms.size(); ++i)
    if (dms[i] > dms[peak]) peak = i;
  CHECK(peak > 0);
  CHECK(peak + 1 < dms.size());  // interior maximum: both limits vanish
  for (std::size_t i = 0; i < peak; ++i) CHECK(dms[i] < dms[i + 1]);
  for (std::size_t i = peak; i + 1 < dms.size(); ++i)
    CHECK(dms[i] > dms[i + 1]);
}

TEST_CASE("report rejects an empty friction grid") {
  TempDir dir;
  const fs::path cfg = dir.path / "report.json";
  {
    std::ofstream out(cfg);
    out << R"({"potential": {"kind": "quadratic", "m": 1.0},
               "gamma_values": []})";
  }
  const RunResult r = run({"report", "--config", cfg.string(), "--output-dir",
                           dir.str()});
  CHECK(r.code == 1);
  CHECK(json::parse(r.err).at("error").at("message") ==
        "gamma_values must be a non-empty array");
}

}  // TEST_SUITE("cli")
