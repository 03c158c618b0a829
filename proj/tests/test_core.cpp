#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spsim/core.hpp"
#include "spsim/rng.hpp"

using spsim::core::BBox;
using spsim::core::box_area_class;
using spsim::core::FrameClock;
using spsim::core::iou;
using spsim::core::SizeClass;

namespace {

BBox random_box(spsim::rng::Stream& stream) {
  const double x1 = stream.uniform(-200.0, 1800.0);
  const double y1 = stream.uniform(-200.0, 1000.0);
  const double w = stream.uniform(0.5, 400.0);
  const double h = stream.uniform(0.5, 400.0);
  return BBox(x1, y1, x1 + w, y1 + h);
}

}  // namespace

TEST_CASE("iou examples") {
  const BBox a(0, 0, 10, 10);
  CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)) == 0.0);
  // intersection 5x10 = 50, union 100 + 100 - 50 = 150
  CHECK(iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou properties: symmetry, identity, translation invariance") {
  spsim::rng::Stream stream(20240601);
  for (int i = 0; i < 500; ++i) {
    const BBox a = random_box(stream);
    const BBox b = random_box(stream);
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);

    const double dx = stream.uniform(-500.0, 500.0);
    const double dy = stream.uniform(-500.0, 500.0);
    const BBox at(a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy);
    const BBox bt(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy);
    CHECK(iou(at, bt) == doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("box size classes follow the COCO area breakpoints") {
  CHECK(box_area_class(BBox(0, 0, 10, 10)) == SizeClass::Small);    // 100
  CHECK(box_area_class(BBox(0, 0, 50, 50)) == SizeClass::Medium);   // 2500
  CHECK(box_area_class(BBox(0, 0, 100, 100)) == SizeClass::Large);  // 10000
  CHECK(box_area_class(BBox(0, 0, 32, 32)) == SizeClass::Medium);   // boundary
  CHECK(box_area_class(BBox(0, 0, 96, 96)) == SizeClass::Medium);   // boundary
}

TEST_CASE("invalid boxes are rejected at construction") {
  CHECK_THROWS_AS(BBox(10, 0, 10, 10), std::invalid_argument);  // zero width
  CHECK_THROWS_AS(BBox(0, 10, 10, 5), std::invalid_argument);
  CHECK_THROWS_AS(BBox(0, 0, 10, 10, 0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(BBox(0, 0, 10, 10, 0, -0.1), std::invalid_argument);
  const double nan = std::nan("");
  CHECK_THROWS_AS(BBox(nan, 0, 10, 10), std::invalid_argument);
}

TEST_CASE("frame clock") {
  const auto clock = FrameClock::from_fps(30.0);
  CHECK(clock.frame_interval_ms == doctest::Approx(1000.0 / 30.0));
  CHECK(std::abs(clock.fps * clock.frame_interval_ms - 1000.0) <= 1e-9);
  CHECK(clock.capture_time_ms(3) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK_THROWS_AS(FrameClock::from_fps(0.0), std::invalid_argument);
  CHECK_THROWS_AS(FrameClock::from_fps(-30.0), std::invalid_argument);
}

TEST_CASE("feature snapshots enforce distinct track ids and capture time") {
  const auto clock = FrameClock::from_fps(30.0);
  std::vector<BBox> boxes;
  boxes.emplace_back(0, 0, 10, 10, 0, 1.0, 1);
  boxes.emplace_back(20, 20, 30, 30, 0, 1.0, 2);
  const auto snap = spsim::core::make_feature_snapshot(4, clock, boxes);
  CHECK(snap.frame_index == 4);
  CHECK(snap.capture_time_ms == doctest::Approx(4 * clock.frame_interval_ms));

  boxes.emplace_back(40, 40, 50, 50, 0, 1.0, 1);  // duplicate id
  CHECK_THROWS_AS(spsim::core::make_feature_snapshot(5, clock, boxes),
                  std::invalid_argument);
  CHECK_THROWS_AS(spsim::core::make_feature_snapshot(-1, clock, {}),
                  std::invalid_argument);
}
