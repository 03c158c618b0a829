#pragma once

#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "spsim/config.hpp"
#include "spsim/streameval.hpp"

namespace spsim::cli {

struct SimulateResult {
  streameval::StreamLog log;
  streameval::EvalReport report;
  std::filesystem::path log_path;
  std::filesystem::path report_path;
  std::filesystem::path delays_path;
};

// Runs one policy: writes stream_log.jsonl, report.json and delays.csv
// under config.out_dir and prints a one-line summary.
SimulateResult run_simulate(const RunConfig& config, std::ostream& out);

struct CompareResult {
  std::vector<std::pair<scheduler::PolicyKind, streameval::EvalReport>> rows;
  std::filesystem::path csv_path;
  std::filesystem::path delays_path;
};

// Runs every policy against one shared latency trace (paired comparison)
// and writes compare.csv plus the shared delays.csv.
CompareResult run_compare(const RunConfig& config,
                          std::vector<scheduler::PolicyKind> policies,
                          std::ostream& out);

// Histogram of per-job total delay with marker rows at multiples of the
// frame interval. Returns the CSV path.
std::filesystem::path run_histogram(const std::filesystem::path& log_path,
                                    double bin_width_ms,
                                    const std::filesystem::path& out_csv,
                                    std::ostream& out, std::ostream& warn);

void run_fit_latency(double mean_ms, double std_ms, double min_ms,
                     std::ostream& out);

}  // namespace spsim::cli
