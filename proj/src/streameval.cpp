#include "spsim/streameval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "spsim/digest.hpp"

namespace spsim::streameval {

namespace {

constexpr double kTimeEps = 1e-9;

void check(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

// Ranked prediction reference used by the evaluator.
struct RankedPred {
  double score = 0.0;
  std::size_t image = 0;
  std::size_t order = 0;  // insertion order within the image
};

bool rank_before(const RankedPred& a, const RankedPred& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image != b.image) return a.image < b.image;
  return a.order < b.order;
}

// AP for one class: greedy score-ordered matching, 101-point interpolation.
double single_class_ap(int class_id,
                       const std::vector<std::vector<core::BBox>>& predictions,
                       const std::vector<std::vector<core::BBox>>& truths,
                       double iou_threshold) {
  const std::size_t image_count = truths.size();

  std::size_t npos = 0;
  std::vector<std::vector<std::size_t>> gt_index(image_count);
  for (std::size_t i = 0; i < image_count; ++i)
    for (std::size_t j = 0; j < truths[i].size(); ++j)
      if (truths[i][j].class_id == class_id) {
        gt_index[i].push_back(j);
        ++npos;
      }
  if (npos == 0) return 0.0;

  std::vector<RankedPred> ranked;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    for (std::size_t j = 0; j < predictions[i].size(); ++j)
      if (predictions[i][j].class_id == class_id)
        ranked.push_back({predictions[i][j].score, i, j});
  std::sort(ranked.begin(), ranked.end(), rank_before);

  std::vector<std::vector<char>> gt_matched(image_count);
  for (std::size_t i = 0; i < image_count; ++i)
    gt_matched[i].assign(gt_index[i].size(), 0);

  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(ranked.size());
  recall.reserve(ranked.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& p : ranked) {
    const core::BBox& pred = predictions[p.image][p.order];
    double best_iou = 0.0;
    std::size_t best = gt_index[p.image].size();
    for (std::size_t k = 0; k < gt_index[p.image].size(); ++k) {
      if (gt_matched[p.image][k]) continue;
      const double v = core::iou(pred, truths[p.image][gt_index[p.image][k]]);
      if (v > best_iou) {  // strict: ties keep the lower ground-truth index
        best_iou = v;
        best = k;
      }
    }
    if (best < gt_index[p.image].size() && best_iou >= iou_threshold) {
      gt_matched[p.image][best] = 1;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) /
                        static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(npos));
  }

  // max precision at or beyond each point, for the interpolated envelope
  std::vector<double> suffix_max(precision.size());
  double running = 0.0;
  for (std::size_t i = precision.size(); i-- > 0;) {
    running = std::max(running, precision[i]);
    suffix_max[i] = running;
  }

  double sum = 0.0;
  for (int g = 0; g <= 100; ++g) {
    const double r = static_cast<double>(g) / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end())
      sum += suffix_max[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

std::vector<int> classes_in_truth(
    const std::vector<std::vector<core::BBox>>& truths) {
  std::set<int> classes;
  for (const auto& image : truths)
    for (const auto& b : image) classes.insert(b.class_id);
  return {classes.begin(), classes.end()};
}

// Greedy matches within one frame at the given threshold, across classes.
int matched_in_frame(const std::vector<core::BBox>& predictions,
                     const std::vector<core::BBox>& truths,
                     double iou_threshold) {
  std::vector<RankedPred> ranked;
  for (std::size_t j = 0; j < predictions.size(); ++j)
    ranked.push_back({predictions[j].score, 0, j});
  std::sort(ranked.begin(), ranked.end(), rank_before);

  std::vector<char> used(truths.size(), 0);
  int matched = 0;
  for (const auto& p : ranked) {
    const core::BBox& pred = predictions[p.order];
    double best_iou = 0.0;
    std::size_t best = truths.size();
    for (std::size_t k = 0; k < truths.size(); ++k) {
      if (used[k] || truths[k].class_id != pred.class_id) continue;
      const double v = core::iou(pred, truths[k]);
      if (v > best_iou) {
        best_iou = v;
        best = k;
      }
    }
    if (best < truths.size() && best_iou >= iou_threshold) {
      used[best] = 1;
      ++matched;
    }
  }
  return matched;
}

std::vector<std::vector<core::BBox>> filter_by_size(
    const std::vector<std::vector<core::BBox>>& images,
    core::SizeClass size) {
  std::vector<std::vector<core::BBox>> out;
  out.reserve(images.size());
  for (const auto& image : images) {
    std::vector<core::BBox> kept;
    for (const auto& b : image)
      if (core::box_area_class(b) == size) kept.push_back(b);
    out.push_back(std::move(kept));
  }
  return out;
}

std::optional<double> mean_over_thresholds(
    const std::vector<std::vector<core::BBox>>& predictions,
    const std::vector<std::vector<core::BBox>>& truths) {
  double sum = 0.0;
  int count = 0;
  for (const double thr : headline_iou_thresholds()) {
    const auto ap = average_precision(predictions, truths, thr);
    if (!ap) return std::nullopt;
    sum += *ap;
    ++count;
  }
  return sum / count;
}

nlohmann::ordered_json box_to_json(const core::BBox& b) {
  nlohmann::ordered_json j;
  j["x1"] = b.x1;
  j["y1"] = b.y1;
  j["x2"] = b.x2;
  j["y2"] = b.y2;
  j["class_id"] = b.class_id;
  j["score"] = b.score;
  if (b.track_id)
    j["track_id"] = *b.track_id;
  else
    j["track_id"] = nullptr;
  return j;
}

core::BBox box_from_json(const nlohmann::json& j) {
  std::optional<std::int64_t> track;
  if (j.contains("track_id") && !j.at("track_id").is_null())
    track = j.at("track_id").get<std::int64_t>();
  return core::BBox(j.at("x1").get<double>(), j.at("y1").get<double>(),
                    j.at("x2").get<double>(), j.at("y2").get<double>(),
                    j.at("class_id").get<int>(), j.at("score").get<double>(),
                    track);
}

}  // namespace

void StreamLog::validate() const {
  check(fps > 0.0, "stream log: fps must be positive");
  const double interval = 1000.0 / fps;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const std::string tag = "stream log: job " + std::to_string(i);
    check(job.preprocess_ms >= 0.0 && job.inference_ms >= 0.0,
          tag + ": stage delays must be >= 0");
    check(std::abs(job.start_ms + job.preprocess_ms + job.inference_ms -
                   job.completion_ms) <= 1e-6,
          tag + ": completion must equal start + preprocess + inference");
    check(job.completion_ms + kTimeEps >=
              static_cast<double>(job.input_frame_index) * interval,
          tag + ": completion precedes the input frame capture");
    if (i > 0) {
      check(job.start_ms + kTimeEps >= jobs[i - 1].completion_ms,
            tag + ": jobs overlap on the single pipeline");
      check(job.input_frame_index > jobs[i - 1].input_frame_index,
            tag + ": input frames must be strictly increasing");
    }
  }
}

StreamLog simulate(const worldsim::WorldSpec& world,
                   const worldsim::ObserverSpec& observer,
                   const latency::LatencyModel& model,
                   scheduler::PolicyKind policy, const core::FrameClock& clock,
                   std::size_t queue_capacity) {
  world.validate();
  observer.validate();
  if (std::abs(world.fps - clock.fps) > 1e-9)
    throw std::invalid_argument("simulate: world fps and clock fps differ");

  const double interval = clock.frame_interval_ms;
  const std::int64_t duration = world.duration_frames;

  latency::DelaySampler sampler(model);
  scheduler::FeatureQueue queue(queue_capacity);

  StreamLog log;
  log.policy = scheduler::to_string(policy);
  log.fps = clock.fps;
  log.world_digest = world_digest(world, clock);

  std::vector<latency::DelaySample> delays;
  std::optional<double> last_inference;
  std::int64_t last_processed = -1;
  double now = 0.0;

  while (true) {
    const auto newest_captured = std::min<std::int64_t>(
        duration - 1, static_cast<std::int64_t>(std::floor(now / interval)));
    std::int64_t frame = 0;
    double start = 0.0;
    if (newest_captured > last_processed) {
      frame = newest_captured;  // grab the newest pending frame
      start = now;
    } else {
      frame = last_processed + 1;
      if (frame >= duration) break;
      start = clock.capture_time_ms(frame);  // idle until the next capture
    }

    const latency::DelaySample delay = sampler.next();
    const double completion = start + delay.total_ms();

    core::FeatureSnapshot snapshot = worldsim::observe(world, frame, observer);
    queue.push(snapshot);
    const scheduler::DelayTrend trend =
        scheduler::estimate_delay_trend(delay.preprocess_ms, last_inference);

    PipelineJob job;
    job.input_frame_index = frame;
    job.start_ms = start;
    job.preprocess_ms = delay.preprocess_ms;
    job.inference_ms = delay.inference_ms;
    job.completion_ms = completion;

    switch (policy) {
      case scheduler::PolicyKind::NoForecast:
        job.boxes = snapshot.boxes;
        break;
      case scheduler::PolicyKind::FixedNextStep: {
        job.target_step = 1;
        const auto& entries = queue.entries();
        if (entries.size() >= 2) {
          const auto& past = entries[entries.size() - 2];
          job.gap = snapshot.frame_index - past.frame_index;
          job.boxes = worldsim::extrapolate(snapshot, past, 1);
        } else {
          job.boxes = snapshot.boxes;  // nothing to fuse with yet
        }
        break;
      }
      case scheduler::PolicyKind::DelayAdaptive: {
        const scheduler::FeatureSelection sel =
            scheduler::select_features(queue, trend, clock);
        job.target_step = sel.target_n;
        job.gap = sel.effective_n;
        job.boxes = worldsim::extrapolate(sel.current, sel.past, sel.target_n);
        break;
      }
    }

    delays.push_back(delay);
    log.jobs.push_back(std::move(job));
    last_processed = frame;
    last_inference = delay.inference_ms;
    now = completion;
  }

  log.delay_summary = latency::summarize(delays);
  return log;
}

std::optional<std::size_t> query_buffer_index(const StreamLog& log,
                                              double query_ms) {
  if (query_ms < 0.0)
    throw std::invalid_argument("query_buffer: query time must be >= 0");
  const auto& jobs = log.jobs;
  const auto it = std::upper_bound(
      jobs.begin(), jobs.end(), query_ms,
      [](double q, const PipelineJob& j) { return q < j.completion_ms; });
  if (it == jobs.begin()) return std::nullopt;
  return static_cast<std::size_t>(std::prev(it) - jobs.begin());
}

std::span<const core::BBox> query_buffer(const StreamLog& log,
                                         double query_ms) {
  const auto index = query_buffer_index(log, query_ms);
  if (!index) return {};
  return log.jobs[*index].boxes;
}

std::vector<double> headline_iou_thresholds() {
  std::vector<double> thresholds;
  for (int i = 0; i < 10; ++i)
    thresholds.push_back(0.50 + 0.05 * static_cast<double>(i));
  return thresholds;
}

std::optional<double> average_precision(
    const std::vector<std::vector<core::BBox>>& predictions,
    const std::vector<std::vector<core::BBox>>& truths, double iou_threshold) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument(
        "average_precision: prediction and truth image counts differ");
  const auto classes = classes_in_truth(truths);
  if (classes.empty()) return std::nullopt;
  double sum = 0.0;
  for (const int c : classes)
    sum += single_class_ap(c, predictions, truths, iou_threshold);
  return sum / static_cast<double>(classes.size());
}

EvalReport streaming_ap(const std::vector<core::GroundTruthFrame>& truths,
                        const StreamLog& log, const core::FrameClock& clock,
                        const EvalOptions& options) {
  log.validate();
  if (std::abs(log.fps - clock.fps) > 1e-9)
    throw std::invalid_argument("streaming_ap: log fps and clock fps differ");

  EvalReport report;
  report.delay = log.delay_summary;
  report.jobs = static_cast<std::int64_t>(log.jobs.size());

  std::vector<std::vector<core::BBox>> predictions;
  std::vector<std::vector<core::BBox>> ground_truth;
  for (const auto& frame : truths) {
    if (frame.frame_index < options.eval_start_frame) continue;
    const double query_ms = clock.capture_time_ms(frame.frame_index);
    const auto buffered = query_buffer(log, query_ms);
    predictions.emplace_back(buffered.begin(), buffered.end());
    ground_truth.push_back(frame.boxes);

    PerFrameCount count;
    count.frame = frame.frame_index;
    count.ground_truth = static_cast<int>(frame.boxes.size());
    count.predictions = static_cast<int>(buffered.size());
    count.matched = matched_in_frame(predictions.back(), frame.boxes, 0.5);
    report.per_frame.push_back(count);
  }
  report.frames_evaluated = static_cast<std::int64_t>(ground_truth.size());

  report.sap = mean_over_thresholds(predictions, ground_truth);
  report.sap50 = average_precision(predictions, ground_truth, 0.50);
  report.sap75 = average_precision(predictions, ground_truth, 0.75);
  if (report.sap50 && report.sap75)
    report.two_threshold_sap = (*report.sap50 + *report.sap75) / 2.0;

  report.sap_small = mean_over_thresholds(
      filter_by_size(predictions, core::SizeClass::Small),
      filter_by_size(ground_truth, core::SizeClass::Small));
  report.sap_medium = mean_over_thresholds(
      filter_by_size(predictions, core::SizeClass::Medium),
      filter_by_size(ground_truth, core::SizeClass::Medium));
  report.sap_large = mean_over_thresholds(
      filter_by_size(predictions, core::SizeClass::Large),
      filter_by_size(ground_truth, core::SizeClass::Large));
  return report;
}

EvalReport streaming_ap(const worldsim::WorldSpec& world, const StreamLog& log,
                        const core::FrameClock& clock,
                        const EvalOptions& options) {
  if (!log.world_digest.empty() &&
      log.world_digest != world_digest(world, clock))
    throw std::runtime_error(
        "streaming_ap: log was produced against a different world or clock");
  std::vector<core::GroundTruthFrame> truths;
  truths.reserve(static_cast<std::size_t>(world.duration_frames));
  for (std::int64_t k = 0; k < world.duration_frames; ++k)
    truths.push_back(worldsim::ground_truth_at(world, k));
  return streaming_ap(truths, log, clock, options);
}

std::string world_digest(const worldsim::WorldSpec& world,
                         const core::FrameClock& clock) {
  char fps_text[40];
  std::snprintf(fps_text, sizeof fps_text, "|fps=%.17g", clock.fps);
  return digest::fnv1a_hex(worldsim::world_to_json(world).dump() + fps_text);
}

void save_stream_log(const StreamLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("stream log: cannot open " + path.string() +
                             " for writing");
  nlohmann::ordered_json header;
  header["schema_version"] = kStreamLogSchemaVersion;
  header["kind"] = "stream_log";
  header["policy"] = log.policy;
  header["fps"] = log.fps;
  header["run_digest"] = log.run_digest;
  header["world_digest"] = log.world_digest;
  header["delay_summary"] = {{"mean_ms", log.delay_summary.mean_ms},
                             {"std_ms", log.delay_summary.std_ms},
                             {"min_ms", log.delay_summary.min_ms},
                             {"max_ms", log.delay_summary.max_ms}};
  out << header.dump() << '\n';
  for (const auto& job : log.jobs) {
    nlohmann::ordered_json j;
    j["input_frame_index"] = job.input_frame_index;
    j["start_ms"] = job.start_ms;
    j["preprocess_ms"] = job.preprocess_ms;
    j["inference_ms"] = job.inference_ms;
    j["completion_ms"] = job.completion_ms;
    j["target_step"] = job.target_step;
    j["gap"] = job.gap;
    auto boxes = nlohmann::ordered_json::array();
    for (const auto& b : job.boxes) boxes.push_back(box_to_json(b));
    j["boxes"] = std::move(boxes);
    out << j.dump() << '\n';
  }
  if (!out)
    throw std::runtime_error("stream log: write failed: " + path.string());
}

StreamLog load_stream_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("stream log: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("stream log: " + path.string() +
                             ": missing header line");
  StreamLog log;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.value("schema_version", -1) != kStreamLogSchemaVersion)
      throw std::runtime_error("unsupported schema_version");
    log.policy = header.value("policy", std::string{});
    log.fps = header.at("fps").get<double>();
    log.run_digest = header.value("run_digest", std::string{});
    log.world_digest = header.value("world_digest", std::string{});
    const auto& summary = header.at("delay_summary");
    log.delay_summary.mean_ms = summary.at("mean_ms").get<double>();
    log.delay_summary.std_ms = summary.at("std_ms").get<double>();
    log.delay_summary.min_ms = summary.at("min_ms").get<double>();
    log.delay_summary.max_ms = summary.at("max_ms").get<double>();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      PipelineJob job;
      job.input_frame_index = j.at("input_frame_index").get<std::int64_t>();
      job.start_ms = j.at("start_ms").get<double>();
      job.preprocess_ms = j.at("preprocess_ms").get<double>();
      job.inference_ms = j.at("inference_ms").get<double>();
      job.completion_ms = j.at("completion_ms").get<double>();
      job.target_step = j.value("target_step", 0);
      job.gap = j.value("gap", std::int64_t{0});
      for (const auto& b : j.at("boxes")) job.boxes.push_back(box_from_json(b));
      log.jobs.push_back(std::move(job));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("stream log: " + path.string() + ": " + e.what());
  }
  log.validate();
  return log;
}

}  // namespace spsim::streameval
