#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace spsim::latency {

// One pipeline job's (preprocessing, inference) latency pair, milliseconds.
struct DelaySample {
  double preprocess_ms = 0.0;
  double inference_ms = 0.0;

  DelaySample() = default;
  DelaySample(double preprocess, double inference);

  double total_ms() const { return preprocess_ms + inference_ms; }
};

struct TraceSummary {
  double mean_ms = 0.0;
  double std_ms = 0.0;  // population standard deviation
  double min_ms = 0.0;
  double max_ms = 0.0;
};

TraceSummary summarize(const std::vector<DelaySample>& samples);

// Recorded per-job delays plus summary statistics over total delay.
struct DelayTrace {
  std::vector<DelaySample> samples;
  TraceSummary summary;

  static DelayTrace from_samples(std::vector<DelaySample> samples);
};

enum class ModelKind { Constant, ShiftedLognormal, TraceReplay };

// Immutable description of a delay environment. Fitted kinds draw
// min_ms + LogNormal(mu, sigma); every draw splits into preprocessing and
// inference by preprocess_fraction. TraceReplay replays stored pairs.
struct LatencyModel {
  ModelKind kind = ModelKind::Constant;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double min_ms = 0.0;
  double mu = 0.0;     // log-space location (ShiftedLognormal)
  double sigma = 0.0;  // log-space scale (ShiftedLognormal)
  double preprocess_fraction = 0.25;
  std::uint64_t seed = 0;
  DelayTrace trace;  // TraceReplay only

  static LatencyModel constant(double total_ms,
                               double preprocess_fraction = 0.25,
                               std::uint64_t seed = 0);
  static LatencyModel trace_replay(DelayTrace trace);
};

// Moment-matched shifted log-normal: for m = mean - min and v = std^2,
// sigma^2 = ln(1 + v/m^2) and mu = ln(m) - sigma^2/2, so the analytic mean
// and std of the model equal the targets. std_ms == 0 degenerates to the
// constant model at mean_ms.
LatencyModel fit_shifted_lognormal(double mean_ms, double std_ms,
                                   double min_ms,
                                   double preprocess_fraction = 0.25,
                                   std::uint64_t seed = 0);

double analytic_mean(const LatencyModel& model);
double analytic_std(const LatencyModel& model);

struct TraceExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Draws samples from a model. Draw i is a pure function of (model.seed, i),
// so equal seeds reproduce equal traces draw by draw.
class DelaySampler {
 public:
  explicit DelaySampler(LatencyModel model);

  DelaySample next();
  std::uint64_t draws() const { return draw_index_; }

 private:
  LatencyModel model_;
  std::uint64_t draw_index_ = 0;
};

struct TraceParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CSV with header "preprocess_ms,inference_ms", one row per job, fixed
// 6 fractional digits. save followed by load reproduces the trace exactly.
void save_trace(const DelayTrace& trace, const std::filesystem::path& path);
DelayTrace load_trace(const std::filesystem::path& path);

}  // namespace spsim::latency
