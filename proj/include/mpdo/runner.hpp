#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mpdo/config.hpp"

namespace mpdo {

// One output table: a fixed column list plus formatted rows. Every row is
// prefixed with the config hash and a status cell when written; rows whose
// computation failed on a per-row recoverable error keep their slot with
// empty data cells and a non-"ok" status.
struct TaskTable {
  std::string task;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> statuses;
  std::string details;  // task-specific JSON array (e.g. full compression reports)
  std::vector<std::pair<std::string, std::string>> artifacts;  // (file name, content)
};

struct RunOutput {
  int exit_code = 0;
  std::vector<std::string> files;
};

// Executes the configured task and writes <out>/<task>.csv and/or .json.
// Per-row config/resource failures are recorded in the row status; the exit
// code is nonzero only when every row failed (code of the first failure) or
// an invariant violation occurred (propagated as InvariantError by the
// caller's handler). `log` receives one progress line per written file.
RunOutput run_experiment(const Config& config, std::ostream& log);

// Runs the task and returns the table without touching the filesystem.
TaskTable run_task(const Config& config);

// Renders the csv/json text forms of a table.
std::string table_to_csv(const Config& config, const TaskTable& table);
std::string table_to_json(const Config& config, const TaskTable& table,
                          const std::string& timestamp);

// Minimal static SVG line chart from a compress-task CSV: eps_measured and
// eps_bound against d_p on a log10 vertical scale.
void write_svg_plot(const std::string& csv_path, const std::string& svg_path);

// Shortest round-trip decimal form of a double (locale-free).
std::string format_double(double x);

}  // namespace mpdo
