#include "mpdo/runner.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mpdo/compressor.hpp"
#include "mpdo/entanglement.hpp"
#include "mpdo/models.hpp"
#include "mpdo/purification.hpp"

namespace mpdo {

namespace {

std::string format_int(long long v) { return std::to_string(v); }

// A job computes a contiguous group of output rows; per-row recoverable
// failures are recorded as a status tag so the grid keeps its shape.
struct JobResult {
  std::vector<std::vector<std::string>> rows;
  std::string status = "ok";
  nlohmann::json details;  // null unless the task attaches diagnostics
  std::vector<std::pair<std::string, std::string>> artifacts;
};

void run_jobs(int threads, int njobs, const std::function<void(int)>& job) {
  if (threads <= 1 || njobs <= 1) {
    for (int i = 0; i < njobs; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  const int workers = std::min(threads, njobs);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < njobs; i = next++) job(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
        next = njobs;
      }
    });
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Wraps a group computation: config/resource problems stay per-row, anything
// else (notably invariant violations) aborts the whole run.
JobResult guarded(int empty_cells, const std::function<JobResult()>& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    JobResult r;
    r.status = "config_error";
    r.rows.push_back(std::vector<std::string>(static_cast<std::size_t>(empty_cells)));
    return r;
  } catch (const ResourceError&) {
    JobResult r;
    r.status = "resource_error";
    r.rows.push_back(std::vector<std::string>(static_cast<std::size_t>(empty_cells)));
    return r;
  }
}

SiteChain chain_from(const Config& config) {
  const int sites = config.get_int("state.sites", 4);
  const int d = config.get_int("state.local_dim", 2);
  if (sites < 2) throw ConfigError("state.sites must be >= 2");
  if (d < 2) throw ConfigError("state.local_dim must be >= 2");
  return SiteChain(sites, d);
}

DenseOperator build_state(const Config& config, const SiteChain& chain) {
  const std::string kind = config.get_string("state.kind", "gibbs");
  if (kind == "gibbs") {
    const std::string model = config.get_string("state.model", "tfim");
    HamiltonianSpec spec;
    if (model == "tfim") {
      spec = HamiltonianSpec::tfim(config.get_double("state.J", 1.0),
                                   config.get_double("state.g", 1.0));
    } else if (model == "xxz") {
      spec = HamiltonianSpec::xxz(config.get_double("state.Jxy", 1.0),
                                  config.get_double("state.Jz", 1.0),
                                  config.get_double("state.h", 0.0));
    } else if (model == "random_nn") {
      spec = HamiltonianSpec::random_nn(config.get_uint64("state.seed", 0),
                                        config.get_double("state.strength", 1.0));
    } else {
      throw ConfigError("state.model must be tfim, xxz, or random_nn (got '" + model + "')");
    }
    const DenseOperator h = build_hamiltonian(chain, spec);
    return gibbs_state(chain, h, GibbsSpec{config.get_double("state.beta", 1.0)});
  }
  return test_state(chain, test_state_kind_from_string(kind),
                    config.get_uint64("state.seed", 0), config.get_int("state.rank", 2));
}

TaskTable assemble(const std::string& task, std::vector<std::string> columns,
                   std::vector<JobResult>& results) {
  TaskTable table;
  table.task = task;
  table.columns = std::move(columns);
  nlohmann::json details = nlohmann::json::array();
  for (JobResult& r : results) {
    for (auto& row : r.rows) {
      table.rows.push_back(std::move(row));
      table.statuses.push_back(r.status);
    }
    if (!r.details.is_null()) details.push_back(std::move(r.details));
  }
  if (!details.empty()) table.details = details.dump(2);
  return table;
}

std::vector<std::pair<std::string, std::string>> collect_artifacts(
    std::vector<JobResult>& results) {
  std::vector<std::pair<std::string, std::string>> artifacts;
  for (JobResult& r : results)
    for (auto& a : r.artifacts) artifacts.push_back(std::move(a));
  return artifacts;
}

TaskTable run_scan(const Config& config) {
  const SiteChain chain = chain_from(config);
  const DenseOperator rho = build_state(config, chain);
  const std::vector<double> alphas = config.get_double_list("scan.alpha", {0.5});
  const ScanMethod method = scan_method_from_string(
      config.get_string("scan.method", "canonical-purification"));
  EopOptions opts;
  opts.restarts = config.get_int("eop.restarts", 8);
  opts.max_iters = config.get_int("eop.max_iters", 300);
  opts.anc_cap = config.get_int("eop.anc_cap", 64);
  opts.seed = config.get_uint64("seed", 0);

  std::vector<JobResult> results(alphas.size());
  run_jobs(config.get_int("threads", 1), static_cast<int>(alphas.size()), [&](int i) {
    results[static_cast<std::size_t>(i)] = guarded(5, [&] {
      const double alpha = alphas[static_cast<std::size_t>(i)];
      const EntropyProfile profile = arealaw_scan(rho, alpha, method, opts);
      JobResult r;
      for (int cut = 1; cut < chain.num_sites; ++cut)
        r.rows.push_back({format_double(alpha), scan_method_name(method), format_int(cut),
                          format_double(profile.values(cut - 1)),
                          format_double(profile.e_max)});
      return r;
    });
  });
  return assemble("scan", {"alpha", "method", "cut", "value", "e_max"}, results);
}

TaskTable run_truncate(const Config& config) {
  const SiteChain chain = chain_from(config);
  const DenseOperator rho = build_state(config, chain);
  const double alpha = config.get_double("truncate.alpha", 0.5);
  const std::vector<int> ranks = config.get_int_list("truncate.d_p", {1, 2, 4, 8});
  const PurifiedState psi = canonical_purification(chain, rho);

  std::vector<JobResult> results(ranks.size());
  run_jobs(config.get_int("threads", 1), static_cast<int>(ranks.size()), [&](int i) {
    results[static_cast<std::size_t>(i)] = guarded(9, [&] {
      const int d_p = ranks[static_cast<std::size_t>(i)];
      JobResult r;
      for (int c = 1; c < chain.num_sites; ++c) {
        const Cut cut(chain, c);
        const CutTruncation t = schmidt_truncate(psi, cut, d_p);
        const CutSigma cs = cut_sigma(t, rho);
        const double e_alpha = purification_entanglement(psi, cut, alpha);
        Eigen::SelfAdjointEigenSolver<Matrix> es(cs.sigma.mat(), Eigen::EigenvaluesOnly);
        r.rows.push_back({format_int(d_p), format_int(c), format_double(alpha),
                          format_double(e_alpha), format_double(t.eta),
                          format_double(eta_bound(e_alpha, alpha, d_p)),
                          format_double(cs.delta_measured), format_double(cs.two_sqrt_eta),
                          format_double(es.eigenvalues().minCoeff())});
      }
      return r;
    });
  });
  return assemble("truncate",
                  {"d_p", "cut", "alpha", "entanglement", "eta", "eta_bound", "delta",
                   "two_sqrt_eta", "min_eig"},
                  results);
}

TaskTable run_compress(const Config& config) {
  const SiteChain chain = chain_from(config);
  const DenseOperator rho = build_state(config, chain);
  const std::vector<int> ranks = config.get_int_list("compress.d_p", {1, 2, 4, 8});
  const ScheduleStrategy strategy =
      schedule_strategy_from_string(config.get_string("compress.strategy", "tree"));
  const BasisMode mode = basis_mode_from_string(config.get_string("compress.mode", "auerbach"));
  const MergeSchedule schedule = strategy == ScheduleStrategy::Tree
                                     ? schedule_tree(chain.num_sites)
                                     : schedule_sequential(chain.num_sites);
  const bool save = config.get_bool("compress.save_mpdo", false);

  std::vector<JobResult> results(ranks.size());
  run_jobs(config.get_int("threads", 1), static_cast<int>(ranks.size()), [&](int i) {
    results[static_cast<std::size_t>(i)] = guarded(9, [&] {
      const int d_p = ranks[static_cast<std::size_t>(i)];
      CompressOptions opts;
      opts.d_p = d_p;
      opts.mode = mode;
      opts.alpha = config.get_double("compress.alpha", 0.5);
      opts.seed = config.get_uint64("seed", 0);
      opts.dual_tolerance = config.get_double("compress.dual_tolerance", 1e-3);
      opts.max_iters = config.get_int("compress.max_iters", 200);
      const CompressionResult res = compress(rho, schedule, opts);
      const CompressionReport& rep = res.report;

      // The certified accounting must hold; a violation means the math went
      // wrong somewhere and the whole run is suspect. The absolute allowance
      // covers trace-norm measurement noise (relevant only near-lossless,
      // where the bounds themselves sit at the noise floor).
      if (rep.eps_measured > rep.eps_bound_fine * (1.0 + 1e-9) + 1e-12)
        throw InvariantError("compress: measured error " + format_double(rep.eps_measured) +
                             " exceeds the certified bound " +
                             format_double(rep.eps_bound_fine));
      if (mode == BasisMode::Auerbach && rep.merge_depth >= 1 && rep.delta_max > 0.0 &&
          rep.eps_measured > rep.eps_bound * (1.0 + 1e-9) + 1e-12)
        throw InvariantError("compress: measured error " + format_double(rep.eps_measured) +
                             " exceeds the coarse bound " + format_double(rep.eps_bound));

      JobResult r;
      r.rows.push_back({format_int(d_p), format_int(rep.span_dim_max),
                        format_int(rep.merge_depth), format_double(rep.eta_max),
                        format_double(rep.delta_max), format_double(rep.eps_measured),
                        format_double(rep.eps_bound), format_double(rep.min_eigenvalue),
                        format_double(rep.wall_ms_total)});
      r.details = nlohmann::json::parse(rep.to_json());
      if (save) {
        std::ostringstream buf;
        save_mpdo(res.mpdo, buf);
        r.artifacts.emplace_back("mpdo_dp" + std::to_string(d_p) + ".txt", buf.str());
      }
      return r;
    });
  });
  TaskTable table = assemble(
      "compress",
      {"d_p", "D", "K", "eta_max", "delta_max", "eps_measured", "eps_bound", "min_eig",
       "wall_ms"},
      results);
  table.artifacts = collect_artifacts(results);
  return table;
}

TaskTable run_eop(const Config& config) {
  const SiteChain chain = chain_from(config);
  const DenseOperator rho = build_state(config, chain);
  const double alpha = config.get_double("eop.alpha", 0.5);
  EopOptions opts;
  opts.restarts = config.get_int("eop.restarts", 8);
  opts.max_iters = config.get_int("eop.max_iters", 300);
  opts.anc_cap = config.get_int("eop.anc_cap", 64);
  opts.seed = config.get_uint64("seed", 0);

  const int ncuts = chain.num_sites - 1;
  std::vector<JobResult> results(static_cast<std::size_t>(ncuts));
  run_jobs(config.get_int("threads", 1), ncuts, [&](int i) {
    results[static_cast<std::size_t>(i)] = guarded(8, [&] {
      const Cut cut(chain, i + 1);
      const EopEstimate est = eop_estimate(rho, cut, alpha, opts);
      JobResult r;
      r.rows.push_back({format_int(i + 1), format_double(alpha), format_double(est.value),
                        format_double(est.canonical_value),
                        format_double(est.gap_to_canonical), format_int(est.restarts),
                        format_int(est.iterations), est.converged ? "true" : "false"});
      return r;
    });
  });
  return assemble("eop",
                  {"cut", "alpha", "value", "canonical_value", "gap_to_canonical", "restarts",
                   "iterations", "converged"},
                  results);
}

TaskTable run_asymptotics(const Config& config) {
  const std::vector<int> ns =
      config.get_int_list("asymptotics.n", {16, 256, 4096, 65536, 1048576});
  const double c = config.get_double("asymptotics.c", 1.0);
  const double lambda = config.get_double("asymptotics.lambda", 0.5);
  const double kappa = config.get_double("asymptotics.kappa", 5.0);

  std::vector<JobResult> results(ns.size());
  run_jobs(config.get_int("threads", 1), static_cast<int>(ns.size()), [&](int i) {
    results[static_cast<std::size_t>(i)] = guarded(10, [&] {
      const AsymptoticParams p =
          asymptotic_params(static_cast<double>(ns[static_cast<std::size_t>(i)]), c, lambda,
                            kappa);
      JobResult r;
      r.rows.push_back({format_int(ns[static_cast<std::size_t>(i)]), format_double(p.c),
                        format_double(p.lambda), format_double(p.kappa),
                        format_double(p.alpha), format_double(p.kappa_min),
                        format_double(p.delta_exp), format_double(p.log2_bond),
                        format_double(p.log2_bound), format_double(p.bound)});
      return r;
    });
  });
  return assemble("asymptotics",
                  {"n", "c", "lambda", "kappa", "alpha", "kappa_min", "delta_exp", "log2_bond",
                   "log2_bound", "bound"},
                  results);
}

TaskTable run_bench(const Config& config) {
  const SiteChain chain = chain_from(config);
  const DenseOperator rho = build_state(config, chain);
  const int d_p = config.get_int("bench.d_p", 2);
  const int repeats = config.get_int("bench.repeats", 3);
  if (repeats < 1) throw ConfigError("bench.repeats must be >= 1");
  const MergeSchedule schedule = schedule_tree(chain.num_sites);

  std::vector<JobResult> results(static_cast<std::size_t>(repeats));
  run_jobs(config.get_int("threads", 1), repeats, [&](int i) {
    results[static_cast<std::size_t>(i)] = guarded(6, [&] {
      CompressOptions opts;
      opts.d_p = d_p;
      opts.seed = config.get_uint64("seed", 0);
      const CompressionResult res = compress(rho, schedule, opts);
      JobResult r;
      r.rows.push_back({format_int(d_p), format_int(i),
                        format_double(res.report.wall_ms_truncate),
                        format_double(res.report.wall_ms_merge),
                        format_double(res.report.wall_ms_total),
                        format_double(res.report.eps_measured)});
      return r;
    });
  });
  return assemble("bench",
                  {"d_p", "repeat", "wall_ms_truncate", "wall_ms_merge", "wall_ms_total",
                   "eps_measured"},
                  results);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

TaskTable run_task(const Config& config) {
  validate_config(config);
  const std::string task = config.get_string("task", "");
  if (task == "scan") return run_scan(config);
  if (task == "truncate") return run_truncate(config);
  if (task == "compress") return run_compress(config);
  if (task == "eop") return run_eop(config);
  if (task == "asymptotics") return run_asymptotics(config);
  if (task == "bench") return run_bench(config);
  throw ConfigError("unknown task '" + task + "'");
}

std::string table_to_csv(const Config& config, const TaskTable& table) {
  const std::string hash = config_hash_hex(config);
  std::string out = "config_hash,status";
  for (const std::string& c : table.columns) out += "," + c;
  out += '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out += hash;
    out += ',';
    out += table.statuses[i];
    for (const std::string& cell : table.rows[i]) {
      out += ',';
      out += cell;
    }
    out += '\n';
  }
  return out;
}

std::string table_to_json(const Config& config, const TaskTable& table,
                          const std::string& timestamp) {
  nlohmann::json j;
  j["generated_at"] = timestamp;
  j["task"] = table.task;
  j["config_hash"] = config_hash_hex(config);
  j["config"] = nlohmann::json::object();
  for (const auto& [key, value] : config.values) j["config"][key] = value;
  j["columns"] = table.columns;
  j["rows"] = nlohmann::json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    nlohmann::json row;
    row["status"] = table.statuses[i];
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      row[table.columns[c]] = c < table.rows[i].size() ? table.rows[i][c] : "";
    j["rows"].push_back(std::move(row));
  }
  j["details"] =
      table.details.empty() ? nlohmann::json::array() : nlohmann::json::parse(table.details);
  return j.dump(2) + "\n";
}

RunOutput run_experiment(const Config& config, std::ostream& log) {
  const TaskTable table = run_task(config);
  const std::string out_dir = config.get_string("out", "out");
  const std::string format = config.get_string("format", "csv");
  if (format != "csv" && format != "json" && format != "both")
    throw ConfigError("format must be csv, json, or both (got '" + format + "')");
  std::filesystem::create_directories(out_dir);

  RunOutput out;
  const auto write_file = [&](const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file '" + path + "'");
    f << content;
    if (!f) throw ConfigError("write failed for '" + path + "'");
    out.files.push_back(path);
    log << "wrote " << path << '\n';
  };

  if (format == "csv" || format == "both")
    write_file(table.task + ".csv", table_to_csv(config, table));
  if (format == "json" || format == "both")
    write_file(table.task + ".json", table_to_json(config, table, utc_timestamp()));
  for (const auto& [name, content] : table.artifacts) write_file(name, content);

  // Exit is nonzero only when nothing succeeded; partial failures are
  // visible in the per-row status column.
  bool any_ok = table.statuses.empty();
  for (const std::string& s : table.statuses) any_ok = any_ok || s == "ok";
  if (!any_ok) {
    out.exit_code = 2;
    for (const std::string& s : table.statuses)
      if (s == "resource_error") {
        out.exit_code = 3;
        break;
      }
  }
  return out;
}

void write_svg_plot(const std::string& csv_path, const std::string& svg_path) {
  std::ifstream f(csv_path);
  if (!f) throw ConfigError("cannot open '" + csv_path + "'");
  std::string header;
  if (!std::getline(f, header)) throw ConfigError("empty csv '" + csv_path + "'");

  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
  }
  const auto col_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<long>(i);
    throw ConfigError("csv '" + csv_path + "' has no column '" + name + "'");
  };
  const long i_status = col_index("status");
  const long i_dp = col_index("d_p");
  const long i_eps = col_index("eps_measured");
  const long i_bound = col_index("eps_bound");

  std::vector<double> dps, eps, bounds;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const long need = std::max(std::max(i_status, i_dp), std::max(i_eps, i_bound));
    if (static_cast<long>(cells.size()) <= need) continue;
    if (cells[static_cast<std::size_t>(i_status)] != "ok") continue;
    dps.push_back(std::stod(cells[static_cast<std::size_t>(i_dp)]));
    eps.push_back(std::stod(cells[static_cast<std::size_t>(i_eps)]));
    bounds.push_back(std::stod(cells[static_cast<std::size_t>(i_bound)]));
  }
  if (dps.empty()) throw ConfigError("csv '" + csv_path + "' has no plottable rows");

  const double floor_val = 1e-18;
  double lo = 1e300, hi = -1e300;
  const auto log_val = [&](double v) { return std::log10(std::max(v, floor_val)); };
  for (std::size_t i = 0; i < dps.size(); ++i) {
    lo = std::min(lo, std::min(log_val(eps[i]), log_val(bounds[i])));
    hi = std::max(hi, std::max(log_val(eps[i]), log_val(bounds[i])));
  }
  lo = std::floor(lo) - 0.2;
  hi = std::ceil(hi) + 0.2;

  const double width = 640, height = 420;
  const double ml = 70, mr = 24, mt = 28, mb = 52;
  const double pw = width - ml - mr, ph = height - mt - mb;
  const std::size_t n = dps.size();
  const auto x_at = [&](std::size_t i) {
    return n == 1 ? ml + pw / 2 : ml + pw * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  const auto y_at = [&](double v) { return mt + ph * (hi - log_val(v)) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2
      << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
         "trace-norm error vs kept rank</text>\n";

  // Decade grid lines and labels.
  for (int dec = static_cast<int>(std::ceil(lo)); dec <= static_cast<int>(std::floor(hi));
       ++dec) {
    const double y = mt + ph * (hi - dec) / (hi - lo);
    svg << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + pw << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << dec
        << "</text>\n";
  }
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";

  const auto polyline = [&](const std::vector<double>& ys, const char* color,
                            const char* dash) {
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (dash[0] != '\0') svg << " stroke-dasharray=\"" << dash << "\"";
    svg << " points=\"";
    for (std::size_t i = 0; i < n; ++i) svg << x_at(i) << ',' << y_at(ys[i]) << ' ';
    svg << "\"/>\n";
    for (std::size_t i = 0; i < n; ++i)
      svg << "<circle cx=\"" << x_at(i) << "\" cy=\"" << y_at(ys[i])
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  };
  polyline(bounds, "#d62728", "6,4");
  polyline(eps, "#1f77b4", "");

  for (std::size_t i = 0; i < n; ++i)
    svg << "<text x=\"" << x_at(i) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(dps[i]) << "</text>\n";
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">kept rank "
         "d_p</text>\n"
      << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 14
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">eps_measured"
         "</text>\n"
      << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 30
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">eps_bound</text>\n"
      << "</svg>\n";

  std::ofstream outf(svg_path, std::ios::binary);
  if (!outf) throw ConfigError("cannot open output file '" + svg_path + "'");
  outf << svg.str();
  if (!outf) throw ConfigError("write failed for '" + svg_path + "'");
}

}  // namespace mpdo
