#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace spsim::core {

// Axis-aligned box in continuous pixel coordinates, image frame.
// Invariants are enforced at construction: x2 > x1, y2 > y1, score in [0,1].
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  int class_id = 0;
  double score = 1.0;
  std::optional<std::int64_t> track_id;

  BBox(double x1, double y1, double x2, double y2, int class_id = 0,
       double score = 1.0, std::optional<std::int64_t> track_id = std::nullopt);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
};

// area(a intersect b) / area(a union b); 0 when disjoint.
double iou(const BBox& a, const BBox& b);

enum class SizeClass { Small, Medium, Large };

// COCO area breakpoints.
inline constexpr double kSmallAreaMax = 32.0 * 32.0;
inline constexpr double kLargeAreaMin = 96.0 * 96.0;

SizeClass box_area_class(const BBox& b);

// Sensor frame timing; frame_interval_ms = 1000 / fps.
struct FrameClock {
  double fps = 0.0;
  double frame_interval_ms = 0.0;

  static FrameClock from_fps(double fps);

  double capture_time_ms(std::int64_t frame_index) const {
    return static_cast<double>(frame_index) * frame_interval_ms;
  }
};

// Per-frame detector observation: the boxes seen in frame `frame_index`,
// captured at `capture_time_ms`.
struct FeatureSnapshot {
  std::int64_t frame_index = 0;
  double capture_time_ms = 0.0;
  std::vector<BBox> boxes;
};

// Validates frame_index >= 0 and that assigned track ids are distinct.
FeatureSnapshot make_feature_snapshot(std::int64_t frame_index,
                                      const FrameClock& clock,
                                      std::vector<BBox> boxes);

struct GroundTruthFrame {
  std::int64_t frame_index = 0;
  double image_width = 0.0;
  double image_height = 0.0;
  std::vector<BBox> boxes;
};

}  // namespace spsim::core
