#include "spsim/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spsim::core {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

BBox::BBox(double x1_, double y1_, double x2_, double y2_, int class_id_,
           double score_, std::optional<std::int64_t> track_id_)
    : x1(x1_),
      y1(y1_),
      x2(x2_),
      y2(y2_),
      class_id(class_id_),
      score(score_),
      track_id(track_id_) {
  require(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
              std::isfinite(y2),
          "BBox: coordinates must be finite");
  require(x2 > x1, "BBox: x2 must be greater than x1");
  require(y2 > y1, "BBox: y2 must be greater than y1");
  require(std::isfinite(score) && score >= 0.0 && score <= 1.0,
          "BBox: score must lie in [0, 1]");
}

double iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

SizeClass box_area_class(const BBox& b) {
  const double area = b.area();
  if (area < kSmallAreaMax) return SizeClass::Small;
  if (area > kLargeAreaMin) return SizeClass::Large;
  return SizeClass::Medium;
}

FrameClock FrameClock::from_fps(double fps) {
  if (!(std::isfinite(fps) && fps > 0.0))
    throw std::invalid_argument("FrameClock: fps must be positive");
  FrameClock clock;
  clock.fps = fps;
  clock.frame_interval_ms = 1000.0 / fps;
  if (std::abs(clock.fps * clock.frame_interval_ms - 1000.0) > 1e-9)
    throw std::invalid_argument(
        "FrameClock: fps * frame_interval must equal 1000ms");
  return clock;
}

FeatureSnapshot make_feature_snapshot(std::int64_t frame_index,
                                      const FrameClock& clock,
                                      std::vector<BBox> boxes) {
  if (frame_index < 0)
    throw std::invalid_argument("FeatureSnapshot: frame_index must be >= 0");
  std::vector<std::int64_t> ids;
  ids.reserve(boxes.size());
  for (const auto& b : boxes)
    if (b.track_id) ids.push_back(*b.track_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument("FeatureSnapshot: track ids must be distinct");
  return FeatureSnapshot{frame_index, clock.capture_time_ms(frame_index),
                         std::move(boxes)};
}

}  // namespace spsim::core
