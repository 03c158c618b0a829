#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "spsim/core.hpp"

namespace spsim::scheduler {

// Expected total delay of the in-flight job: the current preprocessing
// time plus the most recent completed inference time. Before the first
// job completes there is no inference sample and the trend is absent.
struct DelayTrend {
  double current_preprocess_ms = 0.0;
  std::optional<double> last_inference_ms;
  std::optional<double> trend_ms;

  bool has_trend() const { return trend_ms.has_value(); }
};

DelayTrend estimate_delay_trend(double current_preprocess_ms,
                                std::optional<double> last_inference_ms);

// Target time-step n = floor(trend / frame_interval) + 1; the output
// should describe the world n frames past the input frame. Returns 1 when
// the trend is absent. Note the boundary: a trend of exactly one frame
// interval yields n = 2.
int target_step(const DelayTrend& trend, const core::FrameClock& clock);

inline constexpr std::size_t kDefaultQueueCapacity = 5;  // current + 4 previous

// Fixed-capacity history of per-frame snapshots, newest last. Pushing when
// full evicts the oldest entry. Frame indices must be strictly increasing.
class FeatureQueue {
 public:
  explicit FeatureQueue(std::size_t capacity = kDefaultQueueCapacity);

  void push(core::FeatureSnapshot snapshot);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const core::FeatureSnapshot& newest() const;
  const std::deque<core::FeatureSnapshot>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<core::FeatureSnapshot> entries_;
};

struct FeatureSelection {
  core::FeatureSnapshot current;
  core::FeatureSnapshot past;
  std::int64_t effective_n = 0;  // actual frame-index gap of the pair
  int target_n = 1;              // requested step from the delay trend
  bool degenerate = false;       // queue held only the current snapshot
};

// Picks (F_t, F_{t-n}) from the queue. When no stored snapshot sits exactly
// n steps back, the one whose frame index is nearest to t-n is chosen (ties
// go to the older snapshot); effective_n reports the realized gap. With an
// absent trend the previous snapshot is returned. A queue holding only the
// current snapshot yields the degenerate zero-motion pair (F_t, F_t, 0).
FeatureSelection select_features(const FeatureQueue& queue,
                                 const DelayTrend& trend,
                                 const core::FrameClock& clock);

enum class PolicyKind { NoForecast, FixedNextStep, DelayAdaptive };

std::string to_string(PolicyKind kind);
PolicyKind policy_from_string(const std::string& name);

}  // namespace spsim::scheduler
