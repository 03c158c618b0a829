#include "spsim/scheduler.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace spsim::scheduler {

DelayTrend estimate_delay_trend(double current_preprocess_ms,
                                std::optional<double> last_inference_ms) {
  if (!(std::isfinite(current_preprocess_ms) && current_preprocess_ms >= 0.0))
    throw std::invalid_argument(
        "delay trend: preprocess time must be finite and >= 0");
  if (last_inference_ms &&
      !(std::isfinite(*last_inference_ms) && *last_inference_ms >= 0.0))
    throw std::invalid_argument(
        "delay trend: inference time must be finite and >= 0");

  DelayTrend trend;
  trend.current_preprocess_ms = current_preprocess_ms;
  trend.last_inference_ms = last_inference_ms;
  if (last_inference_ms)
    trend.trend_ms = current_preprocess_ms + *last_inference_ms;
  return trend;
}

int target_step(const DelayTrend& trend, const core::FrameClock& clock) {
  if (!(clock.frame_interval_ms > 0.0))
    throw std::invalid_argument("target_step: frame interval must be > 0");
  if (!trend.has_trend()) return 1;
  return static_cast<int>(
             std::floor(*trend.trend_ms / clock.frame_interval_ms)) +
         1;
}

FeatureQueue::FeatureQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1)
    throw std::invalid_argument("FeatureQueue: capacity must be >= 1");
}

void FeatureQueue::push(core::FeatureSnapshot snapshot) {
  if (!entries_.empty() &&
      snapshot.frame_index <= entries_.back().frame_index)
    throw std::invalid_argument(
        "FeatureQueue: frame indices must be strictly increasing");
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(std::move(snapshot));
}

const core::FeatureSnapshot& FeatureQueue::newest() const {
  if (entries_.empty())
    throw std::out_of_range("FeatureQueue: queue is empty");
  return entries_.back();
}

FeatureSelection select_features(const FeatureQueue& queue,
                                 const DelayTrend& trend,
                                 const core::FrameClock& clock) {
  if (queue.empty())
    throw std::invalid_argument(
        "select_features: queue must hold the current snapshot");

  const int n = target_step(trend, clock);
  const auto& entries = queue.entries();
  const core::FeatureSnapshot& current = entries.back();

  FeatureSelection sel;
  sel.current = current;
  sel.target_n = n;

  if (entries.size() == 1) {
    sel.past = current;
    sel.effective_n = 0;
    sel.degenerate = true;
    return sel;
  }

  const std::int64_t target_index = current.frame_index - n;
  std::size_t best = 0;
  std::int64_t best_dist = std::llabs(entries[0].frame_index - target_index);
  // Older candidates win ties because iteration starts at the oldest entry.
  for (std::size_t i = 1; i + 1 < entries.size(); ++i) {
    const std::int64_t dist =
        std::llabs(entries[i].frame_index - target_index);
    if (dist < best_dist) {
      best = i;
      best_dist = dist;
    }
  }

  sel.past = entries[best];
  sel.effective_n = current.frame_index - sel.past.frame_index;
  return sel;
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::NoForecast:
      return "no_forecast";
    case PolicyKind::FixedNextStep:
      return "fixed_next_step";
    case PolicyKind::DelayAdaptive:
      return "delay_adaptive";
  }
  return "unknown";
}

PolicyKind policy_from_string(const std::string& name) {
  if (name == "no_forecast") return PolicyKind::NoForecast;
  if (name == "fixed_next_step") return PolicyKind::FixedNextStep;
  if (name == "delay_adaptive") return PolicyKind::DelayAdaptive;
  throw std::invalid_argument(
      "unknown policy '" + name +
      "' (expected no_forecast, fixed_next_step or delay_adaptive)");
}

}  // namespace spsim::scheduler
