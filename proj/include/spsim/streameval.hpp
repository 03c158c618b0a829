#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spsim/core.hpp"
#include "spsim/latency.hpp"
#include "spsim/scheduler.hpp"
#include "spsim/worldsim.hpp"

namespace spsim::streameval {

// One completed pipeline job: which frame went in, when each stage ran and
// what the policy emitted. completion_ms = start_ms + preprocess + inference.
struct PipelineJob {
  std::int64_t input_frame_index = 0;
  double start_ms = 0.0;
  double preprocess_ms = 0.0;
  double inference_ms = 0.0;
  double completion_ms = 0.0;
  int target_step = 0;    // chosen n (0 for no_forecast)
  std::int64_t gap = 0;   // frame-index gap of the snapshot pair used
  std::vector<core::BBox> boxes;
};

// Timestamped sequence of completed outputs: the output-buffer history.
struct StreamLog {
  std::vector<PipelineJob> jobs;
  std::string policy;
  double fps = 0.0;
  std::string run_digest;    // digest of the producing run configuration
  std::string world_digest;  // digest of the world + clock scored against
  latency::TraceSummary delay_summary;

  void validate() const;
};

inline constexpr int kStreamLogSchemaVersion = 1;

// Runs the single-pipeline event loop: on each completion the pipeline
// grabs the newest captured, not yet processed frame (idling until the
// next capture when none is pending), samples a delay, pushes the frame's
// snapshot into the feature queue and emits boxes according to the policy.
StreamLog simulate(const worldsim::WorldSpec& world,
                   const worldsim::ObserverSpec& observer,
                   const latency::LatencyModel& model,
                   scheduler::PolicyKind policy, const core::FrameClock& clock,
                   std::size_t queue_capacity = scheduler::kDefaultQueueCapacity);

// Boxes of the latest job completed at or before query_ms; empty before the
// first completion. The boundary is inclusive: a job completing exactly at
// query_ms is visible.
std::span<const core::BBox> query_buffer(const StreamLog& log,
                                         double query_ms);

// Index of that job, when one exists.
std::optional<std::size_t> query_buffer_index(const StreamLog& log,
                                              double query_ms);

// 101-point interpolated average precision, averaged over the classes
// present in the ground truth. Predictions are ranked by descending score
// (ties by image index, then insertion order) and greedily matched to the
// unmatched ground-truth box of the same class with highest IoU at or above
// the threshold. Returns nullopt when no ground truth exists at all.
std::optional<double> average_precision(
    const std::vector<std::vector<core::BBox>>& predictions,
    const std::vector<std::vector<core::BBox>>& truths, double iou_threshold);

// IoU thresholds averaged for the headline score: 0.50, 0.55, ..., 0.95.
std::vector<double> headline_iou_thresholds();

struct PerFrameCount {
  std::int64_t frame = 0;
  int ground_truth = 0;
  int predictions = 0;
  int matched = 0;  // greedy matches at IoU 0.5
};

struct EvalReport {
  std::optional<double> sap;        // mean over headline thresholds
  std::optional<double> sap50;
  std::optional<double> sap75;
  std::optional<double> sap_small;  // ground truth and predictions filtered
  std::optional<double> sap_medium; // by box size class
  std::optional<double> sap_large;
  std::optional<double> two_threshold_sap;  // mean of sap50 and sap75
  latency::TraceSummary delay;
  std::int64_t frames_evaluated = 0;
  std::int64_t jobs = 0;
  std::vector<PerFrameCount> per_frame;
};

struct EvalOptions {
  // First frame index scored. The default scores every frame, including
  // cold-start queries issued before the first job completes.
  std::int64_t eval_start_frame = 0;
};

// Streaming evaluation: queries the output buffer at every capture instant
// and scores the returned boxes against that frame's ground truth.
EvalReport streaming_ap(const worldsim::WorldSpec& world, const StreamLog& log,
                        const core::FrameClock& clock,
                        const EvalOptions& options = {});

// Same protocol over pre-built ground-truth frames (frame k is scored at
// k * frame_interval). Used for ingested annotations.
EvalReport streaming_ap(const std::vector<core::GroundTruthFrame>& truths,
                        const StreamLog& log, const core::FrameClock& clock,
                        const EvalOptions& options = {});

std::string world_digest(const worldsim::WorldSpec& world,
                         const core::FrameClock& clock);

// JSON-lines serialization: a header object followed by one job per line.
void save_stream_log(const StreamLog& log, const std::filesystem::path& path);
StreamLog load_stream_log(const std::filesystem::path& path);

}  // namespace spsim::streameval
