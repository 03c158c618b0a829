#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spsim/config.hpp"
#include "spsim/runner.hpp"

namespace {

spsim::cli::RunConfig load_config(const std::string& path,
                                 const std::optional<std::uint64_t>& seed,
                                 const std::optional<std::string>& out) {
  spsim::cli::RunConfig::Overrides overrides;
  overrides.seed = seed;
  overrides.out = out;
  return spsim::cli::RunConfig::parse_file(path, overrides);
}

std::vector<spsim::scheduler::PolicyKind> parse_policy_list(
    const std::string& list) {
  std::vector<spsim::scheduler::PolicyKind> policies;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      policies.push_back(spsim::scheduler::policy_from_string(item));
  return policies;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming-perception simulator and evaluation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  std::string policies_arg;

  auto* simulate = app.add_subcommand(
      "simulate", "Run one policy and write stream log, report and delays");
  simulate->add_option("--config", config_path, "Run configuration file")
      ->required();
  simulate->add_option("--seed", seed_override, "Override run.seed");
  simulate->add_option("--out", out_override, "Override output directory");

  auto* compare = app.add_subcommand(
      "compare", "Run several policies against one shared latency trace");
  compare->add_option("--config", config_path, "Run configuration file")
      ->required();
  compare->add_option("--policies", policies_arg,
                      "Comma-separated policy list (default: run.policies)");
  compare->add_option("--seed", seed_override, "Override run.seed");
  compare->add_option("--out", out_override, "Override output directory");

  std::string log_path;
  double bin_width_ms = 0.0;
  std::string histogram_out;
  auto* histogram = app.add_subcommand(
      "histogram", "Per-job total delay histogram from a stream log");
  histogram->add_option("--log", log_path, "stream_log.jsonl path")
      ->required();
  histogram->add_option("--bin-width", bin_width_ms, "Bin width in ms")
      ->required();
  histogram->add_option("--out", histogram_out,
                        "Output CSV (default: next to the log)");

  double fit_mean = 0.0, fit_std = 0.0, fit_min = 0.0;
  auto* fit = app.add_subcommand(
      "fit-latency", "Fit a shifted log-normal to mean/std/min delay");
  fit->add_option("--mean", fit_mean, "Target mean delay in ms")->required();
  fit->add_option("--std", fit_std, "Target delay std in ms")->required();
  fit->add_option("--min", fit_min, "Minimum delay in ms")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      spsim::cli::run_simulate(load_config(config_path, seed_override, out_override),
                              std::cout);
    } else if (compare->parsed()) {
      auto config = load_config(config_path, seed_override, out_override);
      auto policies = policies_arg.empty() ? config.policies
                                           : parse_policy_list(policies_arg);
      spsim::cli::run_compare(config, policies, std::cout);
    } else if (histogram->parsed()) {
      const std::filesystem::path log(log_path);
      const std::filesystem::path out_csv =
          histogram_out.empty()
              ? log.parent_path() / "delay_histogram.csv"
              : std::filesystem::path(histogram_out);
      spsim::cli::run_histogram(log, bin_width_ms, out_csv, std::cout,
                               std::cerr);
    } else if (fit->parsed()) {
      spsim::cli::run_fit_latency(fit_mean, fit_std, fit_min, std::cout);
    }
  } catch (const spsim::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
