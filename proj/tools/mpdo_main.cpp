#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpdo/config.hpp"
#include "mpdo/errors.hpp"
#include "mpdo/runner.hpp"

namespace {

int dispatch(const std::vector<CLI::App*>& task_subs, CLI::App* plot,
             const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
             int threads, const std::string& format, const std::string& plot_in,
             const std::string& plot_out) {
  if (plot->parsed()) {
    mpdo::write_svg_plot(plot_in, plot_out);
    std::cout << "wrote " << plot_out << '\n';
    return 0;
  }
  for (CLI::App* sub : task_subs) {
    if (!sub->parsed()) continue;
    mpdo::Config config;
    if (!config_path.empty()) config = mpdo::parse_config_file(config_path);
    config.set("task", sub->get_name());
    if (sub->count("--seed")) config.set("seed", std::to_string(seed));
    if (sub->count("--out")) config.set("out", out_dir);
    if (sub->count("--threads")) config.set("threads", std::to_string(threads));
    if (sub->count("--format")) config.set("format", format);
    const mpdo::RunOutput out = mpdo::run_experiment(config, std::cout);
    return out.exit_code;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matrix product density operator compression toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string format = "csv";
  std::uint64_t seed = 0;
  int threads = 1;

  std::vector<CLI::App*> task_subs;
  for (const char* task : {"scan", "truncate", "compress", "eop", "asymptotics", "bench"}) {
    CLI::App* sub = app.add_subcommand(task, std::string("run the ") + task + " task");
    sub->add_option("--config", config_path, "path to a 'key = value' config file");
    sub->add_option("--seed", seed, "global seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--threads", threads, "worker threads for grid rows (overrides the config)");
    sub->add_option("--format", format, "output format (overrides the config)")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    task_subs.push_back(sub);
  }

  std::string plot_in;
  std::string plot_out = "plot.svg";
  CLI::App* plot =
      app.add_subcommand("plot", "render an svg error chart from a compress-task csv");
  plot->add_option("--in", plot_in, "compress-task csv file")->required();
  plot->add_option("--out", plot_out, "output svg path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    return dispatch(task_subs, plot, config_path, seed, out_dir, threads, format, plot_in,
                    plot_out);
  } catch (const mpdo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const mpdo::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return 3;
  } catch (const mpdo::InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
