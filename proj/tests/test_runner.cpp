#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mpdo/compressor.hpp"
#include "mpdo/config.hpp"
#include "mpdo/errors.hpp"
#include "mpdo/runner.hpp"

using namespace mpdo;

namespace {

Config make_config(const std::string& text) { return parse_config(text); }

std::filesystem::path fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("mpdo_runner_test_" + tag);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("format_double keeps shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(1e-9) == "1e-09");
  CHECK(format_double(-0.5) == "-0.5");
}

TEST_CASE("asymptotics task produces the documented grid") {
  const Config config = make_config(
      "task = asymptotics\n"
      "asymptotics.n = 16, 256\n"
      "asymptotics.kappa = 5\n");
  const TaskTable table = run_task(config);
  CHECK(table.task == "asymptotics");
  CHECK(table.columns == std::vector<std::string>{"n", "c", "lambda", "kappa", "alpha",
                                                  "kappa_min", "delta_exp", "log2_bond",
                                                  "log2_bound", "bound"});
  REQUIRE(table.rows.size() == 2);
  REQUIRE(table.statuses.size() == 2);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    CHECK(table.statuses[i] == "ok");
    CHECK(table.rows[i].size() == table.columns.size());
  }
  CHECK(table.rows[0][0] == "16");
  CHECK(table.rows[1][0] == "256");
  // Defaults lambda=0.5, c=1, kappa=5 give the unit gap exponent.
  CHECK(table.rows[0][6] == "1");
}

TEST_CASE("run_task output is independent of the thread count") {
  const std::string base =
      "task = truncate\n"
      "state.sites = 3\n"
      "state.beta = 1\n"
      "truncate.d_p = 1, 2, 4, 8\n"
      "seed = 5\n";
  const TaskTable one = run_task(make_config(base + "threads = 1\n"));
  const TaskTable four = run_task(make_config(base + "threads = 4\n"));
  CHECK(one.rows == four.rows);
  CHECK(one.statuses == four.statuses);
  REQUIRE(one.rows.size() == 8);  // 4 ranks x 2 cuts, ordered by rank then cut
  CHECK(one.rows[0][0] == "1");
  CHECK(one.rows[0][1] == "1");
  CHECK(one.rows[7][0] == "8");
  CHECK(one.rows[7][1] == "2");
}

TEST_CASE("per-row failures keep the grid shape and the run alive") {
  const Config config = make_config(
      "task = compress\n"
      "state.sites = 3\n"
      "compress.d_p = 0, 2\n"
      "seed = 3\n");
  const TaskTable table = run_task(config);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.statuses[0] == "config_error");
  CHECK(table.statuses[1] == "ok");
  // The failed row still has one (empty) cell per column.
  CHECK(table.rows[0].size() == table.columns.size());
  for (const std::string& cell : table.rows[0]) CHECK(cell.empty());
  CHECK(table.rows[1][0] == "2");
}

TEST_CASE("csv rendering stamps the config hash on every row") {
  const Config config = make_config(
      "task = asymptotics\n"
      "asymptotics.n = 16, 64\n");
  const TaskTable table = run_task(config);
  const std::string csv = table_to_csv(config, table);
  const auto lines = csv_lines(csv);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "config_hash,status,n,c,lambda,kappa,alpha,kappa_min,delta_exp,log2_bond,log2_bound,"
        "bound");
  const std::string hash = config_hash_hex(config);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    REQUIRE(cells.size() == table.columns.size() + 2);
    CHECK(cells[0] == hash);
    CHECK(cells[1] == "ok");
  }
}

TEST_CASE("json rendering carries the config, timestamp, and typed rows") {
  const Config config = make_config(
      "task = asymptotics\n"
      "asymptotics.n = 16\n"
      "asymptotics.lambda = 0.5\n");
  const TaskTable table = run_task(config);
  const std::string text = table_to_json(config, table, "2026-01-02T03:04:05Z");
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j["generated_at"] == "2026-01-02T03:04:05Z");
  CHECK(j["task"] == "asymptotics");
  CHECK(j["config_hash"] == config_hash_hex(config));
  CHECK(j["config"]["asymptotics.lambda"] == "0.5");
  CHECK(j["columns"].size() == 10);
  REQUIRE(j["rows"].size() == 1);
  CHECK(j["rows"][0]["status"] == "ok");
  CHECK(j["rows"][0]["n"] == "16");
  CHECK(j["rows"][0]["delta_exp"] == "1");
  CHECK(j["details"].is_array());
}

TEST_CASE("run_experiment writes the requested formats and artifacts") {
  const auto dir = fresh_dir("files");
  const Config config = make_config(
      "task = compress\n"
      "state.sites = 3\n"
      "compress.d_p = 2\n"
      "compress.save_mpdo = true\n"
      "format = both\n"
      "seed = 11\n"
      "out = " + dir.string() + "\n");
  std::ostringstream log;
  const RunOutput out = run_experiment(config, log);
  CHECK(out.exit_code == 0);
  REQUIRE(out.files.size() == 3);
  CHECK(std::filesystem::exists(dir / "compress.csv"));
  CHECK(std::filesystem::exists(dir / "compress.json"));
  CHECK(std::filesystem::exists(dir / "mpdo_dp2.txt"));
  CHECK(log.str().find("wrote ") != std::string::npos);

  // The saved factorization loads back and matches the reported chain shape.
  std::ifstream mf(dir / "mpdo_dp2.txt");
  const MPDO m = load_mpdo(mf);
  CHECK(m.num_sites == 3);
  CHECK(m.local_dim == 2);

  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "compress.json"));
  REQUIRE(j["details"].size() == 1);
  CHECK(j["details"][0]["num_sites"] == 3);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_experiment exit codes reflect total failure kinds") {
  const auto dir = fresh_dir("codes");
  std::ostringstream log;

  // Every row fails on a bad parameter: recoverable config failure -> 2.
  const Config all_config_bad = make_config(
      "task = compress\n"
      "state.sites = 3\n"
      "compress.d_p = 0\n"
      "out = " + (dir / "a").string() + "\n");
  CHECK(run_experiment(all_config_bad, log).exit_code == 2);

  // Every row trips a resource cap -> 3.
  const Config all_resource_bad = make_config(
      "task = eop\n"
      "state.sites = 3\n"
      "eop.anc_cap = 1\n"
      "out = " + (dir / "b").string() + "\n");
  CHECK(run_experiment(all_resource_bad, log).exit_code == 3);

  // A bad output format is a hard error, not a row status.
  const Config bad_format = make_config(
      "task = asymptotics\n"
      "format = yaml\n"
      "out = " + (dir / "c").string() + "\n");
  CHECK_THROWS_WITH_AS(run_experiment(bad_format, log), doctest::Contains("format"),
                       ConfigError);

  // Unknown task name fails validation before any work happens.
  CHECK_THROWS_AS(run_task(make_config("task = fly\n")), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scan and eop tables follow their schemas") {
  const Config scan_config = make_config(
      "task = scan\n"
      "state.sites = 3\n"
      "scan.alpha = 0.5\n"
      "scan.method = mutual-information\n"
      "seed = 2\n");
  const TaskTable scan = run_task(scan_config);
  CHECK(scan.columns ==
        std::vector<std::string>{"alpha", "method", "cut", "value", "e_max"});
  REQUIRE(scan.rows.size() == 2);
  CHECK(scan.rows[0][1] == "mutual-information");
  CHECK(scan.rows[0][2] == "1");
  CHECK(scan.rows[1][2] == "2");

  const Config eop_config = make_config(
      "task = eop\n"
      "state.sites = 3\n"
      "state.kind = product\n"
      "eop.restarts = 2\n"
      "eop.max_iters = 50\n"
      "seed = 2\n");
  const TaskTable eop = run_task(eop_config);
  CHECK(eop.columns ==
        std::vector<std::string>{"cut", "alpha", "value", "canonical_value",
                                 "gap_to_canonical", "restarts", "iterations", "converged"});
  REQUIRE(eop.rows.size() == 2);
  for (const auto& row : eop.rows) {
    // Product states carry no entanglement at any cut.
    CHECK(std::stod(row[2]) < 1e-6);
    CHECK(row[7] == "true");
  }
}

TEST_CASE("bench repeats the same compression and reports timing columns") {
  const Config config = make_config(
      "task = bench\n"
      "state.sites = 3\n"
      "bench.d_p = 2\n"
      "bench.repeats = 2\n"
      "seed = 4\n");
  const TaskTable table = run_task(config);
  CHECK(table.columns ==
        std::vector<std::string>{"d_p", "repeat", "wall_ms_truncate", "wall_ms_merge",
                                 "wall_ms_total", "eps_measured"});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0][1] == "0");
  CHECK(table.rows[1][1] == "1");
  // Timing differs run to run; the measured error must not.
  CHECK(table.rows[0][5] == table.rows[1][5]);
  CHECK_THROWS_AS(run_task(make_config("task = bench\nstate.sites = 3\nbench.repeats = 0\n")),
                  ConfigError);
}

TEST_CASE("task rows are reproducible for a fixed seed") {
  const std::string text =
      "task = compress\n"
      "state.sites = 4\n"
      "state.beta = 1\n"
      "compress.d_p = 1, 2\n"
      "seed = 21\n";
  const TaskTable a = run_task(make_config(text));
  const TaskTable b = run_task(make_config(text));
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].size() == b.rows[i].size());
    // Every column except the trailing wall_ms must match byte for byte.
    for (std::size_t c = 0; c + 1 < a.rows[i].size(); ++c) CHECK(a.rows[i][c] == b.rows[i][c]);
  }
}

TEST_CASE("svg plot renders compress output and rejects unusable input") {
  const auto dir = fresh_dir("plot");
  const Config config = make_config(
      "task = compress\n"
      "state.sites = 3\n"
      "compress.d_p = 1, 2, 4\n"
      "seed = 9\n"
      "out = " + dir.string() + "\n");
  std::ostringstream log;
  REQUIRE(run_experiment(config, log).exit_code == 0);

  const std::string csv = (dir / "compress.csv").string();
  const std::string svg = (dir / "plot.svg").string();
  write_svg_plot(csv, svg);
  const std::string body = slurp(svg);
  CHECK(body.find("<svg") != std::string::npos);
  CHECK(body.find("eps_measured") != std::string::npos);
  CHECK(body.find("eps_bound") != std::string::npos);
  CHECK(body.find("polyline") != std::string::npos);

  CHECK_THROWS_WITH_AS(write_svg_plot((dir / "missing.csv").string(), svg),
                       doctest::Contains("cannot open"), ConfigError);

  // A csv without the compress columns cannot be plotted.
  std::ofstream bad(dir / "bad.csv");
  bad << "config_hash,status,alpha\nabc,ok,0.5\n";
  bad.close();
  CHECK_THROWS_WITH_AS(write_svg_plot((dir / "bad.csv").string(), svg),
                       doctest::Contains("no column"), ConfigError);

  // A csv whose rows all failed has nothing to plot.
  std::ofstream empty(dir / "empty.csv");
  empty << "config_hash,status,d_p,eps_measured,eps_bound\nabc,config_error,,,\n";
  empty.close();
  CHECK_THROWS_WITH_AS(write_svg_plot((dir / "empty.csv").string(), svg),
                       doctest::Contains("no plottable rows"), ConfigError);
  std::filesystem::remove_all(dir);
}
