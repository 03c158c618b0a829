#include "spsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

namespace spsim::cli {

namespace {

std::string ap_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string ms_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void summary_line(std::ostream& out, const std::string& policy,
                  const streameval::EvalReport& report) {
  out << "policy=" << policy
      << " sAP=" << (report.sap ? ap_cell(report.sap) : "n/a")
      << " mean_delay_ms=" << ms_cell(report.delay.mean_ms)
      << " jobs=" << report.jobs << "\n";
}

nlohmann::ordered_json report_to_json(const streameval::EvalReport& report,
                                      const std::string& policy,
                                      const std::string& resolved_config) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["policy"] = policy;
  j["frames_evaluated"] = report.frames_evaluated;
  j["jobs"] = report.jobs;
  j["sap"] = opt(report.sap);
  j["sap50"] = opt(report.sap50);
  j["sap75"] = opt(report.sap75);
  j["sap_small"] = opt(report.sap_small);
  j["sap_medium"] = opt(report.sap_medium);
  j["sap_large"] = opt(report.sap_large);
  j["two_threshold_sap"] = opt(report.two_threshold_sap);
  j["delay"] = {{"mean_ms", report.delay.mean_ms},
                {"std_ms", report.delay.std_ms},
                {"min_ms", report.delay.min_ms},
                {"max_ms", report.delay.max_ms}};
  auto frames = nlohmann::ordered_json::array();
  for (const auto& f : report.per_frame)
    frames.push_back({{"frame", f.frame},
                      {"ground_truth", f.ground_truth},
                      {"predictions", f.predictions},
                      {"matched", f.matched}});
  j["per_frame"] = std::move(frames);
  j["resolved_config"] = resolved_config;
  return j;
}

latency::DelayTrace job_delays(const streameval::StreamLog& log) {
  std::vector<latency::DelaySample> samples;
  samples.reserve(log.jobs.size());
  for (const auto& job : log.jobs)
    samples.emplace_back(job.preprocess_ms, job.inference_ms);
  return latency::DelayTrace::from_samples(std::move(samples));
}

}  // namespace

SimulateResult run_simulate(const RunConfig& config, std::ostream& out) {
  std::filesystem::create_directories(config.out_dir);

  SimulateResult result;
  result.log = streameval::simulate(config.world, config.observer,
                                    config.model, config.policy, config.clock,
                                    config.queue_capacity);
  result.log.run_digest = config.digest();
  result.report = streameval::streaming_ap(config.world, result.log,
                                           config.clock,
                                           {config.eval_start_frame});

  result.log_path = config.out_dir / "stream_log.jsonl";
  result.report_path = config.out_dir / "report.json";
  result.delays_path = config.out_dir / "delays.csv";

  streameval::save_stream_log(result.log, result.log_path);
  latency::save_trace(job_delays(result.log), result.delays_path);

  std::ofstream report_file(result.report_path);
  if (!report_file)
    throw std::runtime_error("report: cannot open " +
                             result.report_path.string() + " for writing");
  report_file << report_to_json(result.report,
                                scheduler::to_string(config.policy),
                                config.canonical_text())
                     .dump(2)
              << '\n';

  summary_line(out, scheduler::to_string(config.policy), result.report);
  return result;
}

CompareResult run_compare(const RunConfig& config,
                          std::vector<scheduler::PolicyKind> policies,
                          std::ostream& out) {
  if (policies.size() < 2)
    throw ConfigError("compare: at least 2 policies are required");
  std::filesystem::create_directories(config.out_dir);

  // One latency trace shared by every policy keeps the comparison paired.
  latency::LatencyModel shared = config.model;
  if (config.model.kind != latency::ModelKind::TraceReplay) {
    latency::DelaySampler sampler(config.model);
    std::vector<latency::DelaySample> samples;
    samples.reserve(static_cast<std::size_t>(config.world.duration_frames));
    for (std::int64_t i = 0; i < config.world.duration_frames; ++i)
      samples.push_back(sampler.next());
    shared =
        latency::LatencyModel::trace_replay(latency::DelayTrace::from_samples(
            std::move(samples)));
  }

  CompareResult result;
  for (const auto policy : policies) {
    auto log = streameval::simulate(config.world, config.observer, shared,
                                    policy, config.clock,
                                    config.queue_capacity);
    log.run_digest = config.digest();
    auto report = streameval::streaming_ap(config.world, log, config.clock,
                                           {config.eval_start_frame});
    result.rows.emplace_back(policy, std::move(report));
  }

  result.csv_path = config.out_dir / "compare.csv";
  result.delays_path = config.out_dir / "delays.csv";
  latency::save_trace(shared.trace, result.delays_path);

  std::ofstream csv(result.csv_path);
  if (!csv)
    throw std::runtime_error("compare: cannot open " +
                             result.csv_path.string() + " for writing");
  const std::string header =
      "policy,sap,sap_l,sap_m,sap_s,sap50,sap75,"
      "mean_delay_ms,std_delay_ms,min_delay_ms,max_delay_ms";
  csv << header << "\n";
  out << header << "\n";
  for (const auto& [policy, report] : result.rows) {
    std::string row = scheduler::to_string(policy);
    row += "," + ap_cell(report.sap);
    row += "," + ap_cell(report.sap_large);
    row += "," + ap_cell(report.sap_medium);
    row += "," + ap_cell(report.sap_small);
    row += "," + ap_cell(report.sap50);
    row += "," + ap_cell(report.sap75);
    row += "," + ms_cell(report.delay.mean_ms);
    row += "," + ms_cell(report.delay.std_ms);
    row += "," + ms_cell(report.delay.min_ms);
    row += "," + ms_cell(report.delay.max_ms);
    csv << row << "\n";
    out << row << "\n";
  }
  if (!csv)
    throw std::runtime_error("compare: write failed: " +
                             result.csv_path.string());
  return result;
}

std::filesystem::path run_histogram(const std::filesystem::path& log_path,
                                    double bin_width_ms,
                                    const std::filesystem::path& out_csv,
                                    std::ostream& out, std::ostream& warn) {
  if (!(bin_width_ms > 0.0))
    throw ConfigError("histogram: bin width must be > 0");
  const auto log = streameval::load_stream_log(log_path);

  std::ofstream csv(out_csv);
  if (!csv)
    throw std::runtime_error("histogram: cannot open " + out_csv.string() +
                             " for writing");
  csv << "row_type,bin_start_ms,count\n";

  if (log.jobs.empty()) {
    warn << "histogram: stream log has no jobs, writing empty histogram\n";
    return out_csv;
  }

  const double lo = log.delay_summary.min_ms;
  const double hi = log.delay_summary.max_ms;
  const auto bin_count = static_cast<std::size_t>(
                             std::floor((hi - lo) / bin_width_ms)) +
                         1;
  std::vector<std::size_t> counts(bin_count, 0);
  for (const auto& job : log.jobs) {
    const double total = job.preprocess_ms + job.inference_ms;
    const auto idx = std::min(
        bin_count - 1,
        static_cast<std::size_t>(std::floor((total - lo) / bin_width_ms)));
    ++counts[idx];
  }
  char buf[96];
  for (std::size_t i = 0; i < bin_count; ++i) {
    std::snprintf(buf, sizeof buf, "bin,%.6f,%zu\n",
                  lo + static_cast<double>(i) * bin_width_ms, counts[i]);
    csv << buf;
  }

  // Real-time boundaries, the vertical lines of a delay-distribution plot.
  const double interval = 1000.0 / log.fps;
  const auto marker_hi = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(hi / interval)));
  for (std::int64_t m = 1; m <= marker_hi; ++m) {
    std::snprintf(buf, sizeof buf, "marker,%.6f,\n",
                  static_cast<double>(m) * interval);
    csv << buf;
  }
  out << "histogram: " << log.jobs.size() << " jobs, " << bin_count
      << " bins of " << bin_width_ms << "ms -> " << out_csv.string() << "\n";
  return out_csv;
}

void run_fit_latency(double mean_ms, double std_ms, double min_ms,
                     std::ostream& out) {
  const auto model = latency::fit_shifted_lognormal(mean_ms, std_ms, min_ms);
  char buf[200];
  if (model.kind == latency::ModelKind::Constant) {
    std::snprintf(buf, sizeof buf, "kind=constant total_ms=%.6f\n",
                  model.mean_ms);
    out << buf;
    return;
  }
  std::snprintf(buf, sizeof buf,
                "kind=shifted_lognormal min_ms=%.6f mu=%.9f sigma=%.9f "
                "analytic_mean_ms=%.6f analytic_std_ms=%.6f\n",
                model.min_ms, model.mu, model.sigma, latency::analytic_mean(model),
                latency::analytic_std(model));
  out << buf;
}

}  // namespace spsim::cli
