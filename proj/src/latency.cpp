#include "spsim/latency.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "spsim/rng.hpp"

namespace spsim::latency {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

DelaySample split_total(double total, double fraction) {
  return DelaySample(fraction * total, (1.0 - fraction) * total);
}

double parse_field(std::string_view text, const std::filesystem::path& path,
                   std::size_t line_no, const char* what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw TraceParseError(path.string() + ":" + std::to_string(line_no) +
                          ": malformed " + what + " value '" +
                          std::string(text) + "'");
  if (!std::isfinite(value) || value < 0.0)
    throw TraceParseError(path.string() + ":" + std::to_string(line_no) +
                          ": " + what + " must be non-negative, got '" +
                          std::string(text) + "'");
  return value;
}

}  // namespace

DelaySample::DelaySample(double preprocess, double inference)
    : preprocess_ms(preprocess), inference_ms(inference) {
  require(std::isfinite(preprocess_ms) && preprocess_ms >= 0.0,
          "DelaySample: preprocess_ms must be finite and >= 0");
  require(std::isfinite(inference_ms) && inference_ms >= 0.0,
          "DelaySample: inference_ms must be finite and >= 0");
}

TraceSummary summarize(const std::vector<DelaySample>& samples) {
  TraceSummary s;
  if (samples.empty()) return s;
  double sum = 0.0;
  s.min_ms = samples.front().total_ms();
  s.max_ms = s.min_ms;
  for (const auto& d : samples) {
    const double t = d.total_ms();
    sum += t;
    s.min_ms = std::min(s.min_ms, t);
    s.max_ms = std::max(s.max_ms, t);
  }
  s.mean_ms = sum / static_cast<double>(samples.size());
  double sq = 0.0;
  for (const auto& d : samples) {
    const double diff = d.total_ms() - s.mean_ms;
    sq += diff * diff;
  }
  s.std_ms = std::sqrt(sq / static_cast<double>(samples.size()));
  return s;
}

DelayTrace DelayTrace::from_samples(std::vector<DelaySample> samples) {
  DelayTrace trace;
  trace.summary = summarize(samples);
  trace.samples = std::move(samples);
  return trace;
}

LatencyModel LatencyModel::constant(double total_ms,
                                    double preprocess_fraction,
                                    std::uint64_t seed) {
  require(std::isfinite(total_ms) && total_ms >= 0.0,
          "latency: constant delay must be finite and >= 0");
  require(preprocess_fraction > 0.0 && preprocess_fraction < 1.0,
          "latency: preprocess_fraction must lie in (0, 1)");
  LatencyModel m;
  m.kind = ModelKind::Constant;
  m.mean_ms = total_ms;
  m.min_ms = total_ms;
  m.preprocess_fraction = preprocess_fraction;
  m.seed = seed;
  return m;
}

LatencyModel LatencyModel::trace_replay(DelayTrace trace) {
  LatencyModel m;
  m.kind = ModelKind::TraceReplay;
  m.mean_ms = trace.summary.mean_ms;
  m.std_ms = trace.summary.std_ms;
  m.min_ms = trace.summary.min_ms;
  m.trace = std::move(trace);
  return m;
}

LatencyModel fit_shifted_lognormal(double mean_ms, double std_ms,
                                   double min_ms, double preprocess_fraction,
                                   std::uint64_t seed) {
  require(std::isfinite(min_ms) && min_ms >= 0.0,
          "latency: min_ms must be finite and >= 0");
  require(std::isfinite(std_ms) && std_ms >= 0.0,
          "latency: std_ms must be finite and >= 0");
  if (std_ms == 0.0)
    return LatencyModel::constant(mean_ms, preprocess_fraction, seed);
  require(std::isfinite(mean_ms) && mean_ms > min_ms,
          "latency: mean_ms must exceed min_ms (no valid shift)");
  require(preprocess_fraction > 0.0 && preprocess_fraction < 1.0,
          "latency: preprocess_fraction must lie in (0, 1)");

  const double m = mean_ms - min_ms;
  const double v = std_ms * std_ms;
  const double sigma2 = std::log(1.0 + v / (m * m));

  LatencyModel model;
  model.kind = ModelKind::ShiftedLognormal;
  model.mean_ms = mean_ms;
  model.std_ms = std_ms;
  model.min_ms = min_ms;
  model.sigma = std::sqrt(sigma2);
  model.mu = std::log(m) - sigma2 / 2.0;
  model.preprocess_fraction = preprocess_fraction;
  model.seed = seed;
  return model;
}

double analytic_mean(const LatencyModel& model) {
  switch (model.kind) {
    case ModelKind::Constant:
      return model.mean_ms;
    case ModelKind::ShiftedLognormal:
      return model.min_ms +
             std::exp(model.mu + model.sigma * model.sigma / 2.0);
    case ModelKind::TraceReplay:
      return model.trace.summary.mean_ms;
  }
  return 0.0;
}

double analytic_std(const LatencyModel& model) {
  switch (model.kind) {
    case ModelKind::Constant:
      return 0.0;
    case ModelKind::ShiftedLognormal: {
      const double s2 = model.sigma * model.sigma;
      return std::exp(model.mu + s2 / 2.0) * std::sqrt(std::expm1(s2));
    }
    case ModelKind::TraceReplay:
      return model.trace.summary.std_ms;
  }
  return 0.0;
}

DelaySampler::DelaySampler(LatencyModel model) : model_(std::move(model)) {}

DelaySample DelaySampler::next() {
  const std::uint64_t index = draw_index_++;
  switch (model_.kind) {
    case ModelKind::Constant:
      return split_total(model_.mean_ms, model_.preprocess_fraction);
    case ModelKind::ShiftedLognormal: {
      rng::Stream stream(rng::mix(model_.seed, index));
      const double total =
          model_.min_ms + std::exp(model_.mu + model_.sigma * stream.normal());
      return split_total(total, model_.preprocess_fraction);
    }
    case ModelKind::TraceReplay: {
      if (index >= model_.trace.samples.size())
        throw TraceExhausted("latency trace exhausted after " +
                             std::to_string(model_.trace.samples.size()) +
                             " samples");
      return model_.trace.samples[index];
    }
  }
  throw std::logic_error("latency: unknown model kind");
}

void save_trace(const DelayTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("latency: cannot open " + path.string() +
                             " for writing");
  out << "preprocess_ms,inference_ms\n";
  char buf[80];
  for (const auto& s : trace.samples) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", s.preprocess_ms,
                  s.inference_ms);
    out << buf;
  }
  if (!out) throw std::runtime_error("latency: write failed: " + path.string());
}

DelayTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("latency: cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    throw TraceParseError(path.string() + ":1: missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "preprocess_ms,inference_ms")
    throw TraceParseError(path.string() +
                          ":1: expected header 'preprocess_ms,inference_ms'");

  std::vector<DelaySample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw TraceParseError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'preprocess_ms,inference_ms' row");
    const double p = parse_field(std::string_view(line).substr(0, comma), path,
                                 line_no, "preprocess_ms");
    const double i = parse_field(std::string_view(line).substr(comma + 1),
                                 path, line_no, "inference_ms");
    samples.emplace_back(p, i);
  }
  return DelayTrace::from_samples(std::move(samples));
}

}  // namespace spsim::latency
