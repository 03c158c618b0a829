#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spsim/rng.hpp"
#include "spsim/scheduler.hpp"

using namespace spsim::scheduler;
using spsim::core::FrameClock;

namespace {

const FrameClock kClock = FrameClock::from_fps(30.0);

spsim::core::FeatureSnapshot snapshot_at(std::int64_t frame) {
  std::vector<spsim::core::BBox> boxes;
  boxes.emplace_back(10.0 + frame, 10.0, 30.0 + frame, 30.0, 0, 1.0, 1);
  return spsim::core::make_feature_snapshot(frame, kClock, std::move(boxes));
}

DelayTrend trend_of(double value) {
  // split an intended trend into preprocess + last inference
  return estimate_delay_trend(value / 4.0, 3.0 * value / 4.0);
}

}  // namespace

TEST_CASE("delay trend is the current preprocess plus last inference") {
  const auto trend = estimate_delay_trend(10.0, 30.0);
  CHECK(trend.has_trend());
  CHECK(*trend.trend_ms == 40.0);

  const auto zero = estimate_delay_trend(0.0, 0.0);
  CHECK(*zero.trend_ms == 0.0);

  const auto absent = estimate_delay_trend(5.0, std::nullopt);
  CHECK(!absent.has_trend());
  CHECK(absent.current_preprocess_ms == 5.0);

  CHECK_THROWS_AS(estimate_delay_trend(-1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_delay_trend(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("target step examples") {
  CHECK(target_step(trend_of(24.0), kClock) == 1);
  CHECK(target_step(trend_of(40.0), kClock) == 2);
  CHECK(target_step(trend_of(63.0), kClock) == 2);  // 63/33.3 = 1.89
  // boundary: exactly one frame interval steps to 2
  CHECK(target_step(trend_of(kClock.frame_interval_ms), kClock) == 2);
  CHECK(target_step(estimate_delay_trend(5.0, std::nullopt), kClock) == 1);
}

TEST_CASE("target step agrees with the frame current at completion") {
  // A job started at a capture instant finishes during frame
  // floor((t*T + D)/T); the step must point one past that frame.
  spsim::rng::Stream stream(77);
  for (int i = 0; i < 200; ++i) {
    const std::int64_t t = static_cast<std::int64_t>(stream.uniform(0, 300));
    const double delay = stream.uniform(0.0, 8.0 * kClock.frame_interval_ms);
    const double start = kClock.capture_time_ms(t);
    const auto current_at_completion = static_cast<std::int64_t>(
        std::floor((start + delay) / kClock.frame_interval_ms));
    CHECK(target_step(trend_of(delay), kClock) ==
          static_cast<int>(current_at_completion - t) + 1);
  }
}

TEST_CASE("target step band property and monotonicity") {
  spsim::rng::Stream stream(4242);
  const double interval = kClock.frame_interval_ms;
  for (int k = 1; k <= 10; ++k) {
    for (int i = 0; i < 100; ++i) {
      const double d = (static_cast<double>(k - 1) + stream.uniform01()) *
                       interval;
      CHECK(target_step(trend_of(d), kClock) == k);
    }
    CHECK(target_step(trend_of((k - 1) * interval), kClock) == k);
  }

  double previous = 0.0;
  int last_step = 1;
  for (int i = 0; i < 500; ++i) {
    previous += stream.uniform(0.0, 20.0);
    const int step = target_step(trend_of(previous), kClock);
    CHECK(step >= last_step);
    CHECK(step >= 1);
    last_step = step;
  }
}

TEST_CASE("feature queue keeps the five most recent snapshots in order") {
  FeatureQueue queue;
  CHECK(queue.capacity() == 5);
  for (std::int64_t f = 0; f < 12; ++f) queue.push(snapshot_at(f));
  REQUIRE(queue.size() == 5);
  std::int64_t expected = 7;
  for (const auto& snap : queue.entries()) {
    CHECK(snap.frame_index == expected);
    ++expected;
  }
  CHECK(queue.newest().frame_index == 11);

  CHECK_THROWS_AS(queue.push(snapshot_at(11)), std::invalid_argument);
  CHECK_THROWS_AS(queue.push(snapshot_at(3)), std::invalid_argument);
  CHECK_THROWS_AS(FeatureQueue(0), std::invalid_argument);
}

TEST_CASE("feature selection") {
  SUBCASE("absent trend falls back to the previous snapshot") {
    FeatureQueue queue;
    queue.push(snapshot_at(6));
    queue.push(snapshot_at(7));
    const auto sel = select_features(
        queue, estimate_delay_trend(5.0, std::nullopt), kClock);
    CHECK(sel.current.frame_index == 7);
    CHECK(sel.past.frame_index == 6);
    CHECK(sel.effective_n == 1);
    CHECK(sel.target_n == 1);
    CHECK(!sel.degenerate);
  }

  SUBCASE("direct index when the step is stored") {
    FeatureQueue queue;
    for (std::int64_t f = 3; f <= 7; ++f) queue.push(snapshot_at(f));
    const auto sel = select_features(queue, trend_of(40.0), kClock);  // n = 2
    CHECK(sel.current.frame_index == 7);
    CHECK(sel.past.frame_index == 5);
    CHECK(sel.effective_n == 2);
  }

  SUBCASE("steps beyond the stored history clamp to the oldest snapshot") {
    FeatureQueue queue;
    for (std::int64_t f = 3; f <= 7; ++f) queue.push(snapshot_at(f));
    const auto sel = select_features(
        queue, trend_of(5.5 * kClock.frame_interval_ms), kClock);  // n = 6
    CHECK(sel.target_n == 6);
    CHECK(sel.past.frame_index == 3);
    CHECK(sel.effective_n == 4);
  }

  SUBCASE("queue holding only the current snapshot degenerates") {
    FeatureQueue queue;
    queue.push(snapshot_at(9));
    const auto sel = select_features(queue, trend_of(40.0), kClock);
    CHECK(sel.degenerate);
    CHECK(sel.effective_n == 0);
    CHECK(sel.past.frame_index == 9);
  }

  SUBCASE("gapped history picks the snapshot nearest to t - n") {
    FeatureQueue queue;
    for (const std::int64_t f : {0, 2, 3, 4, 6}) queue.push(snapshot_at(f));
    const auto sel = select_features(queue, trend_of(75.0), kClock);  // n = 3
    CHECK(sel.target_n == 3);
    CHECK(sel.past.frame_index == 3);  // exactly t - n
    CHECK(sel.effective_n == 3);
  }

  SUBCASE("equidistant candidates resolve to the older snapshot") {
    FeatureQueue queue;
    for (const std::int64_t f : {1, 3, 5}) queue.push(snapshot_at(f));
    // n = 3 targets frame 2; frames 1 and 3 are both one step away
    const auto sel = select_features(queue, trend_of(75.0), kClock);
    CHECK(sel.past.frame_index == 1);
    CHECK(sel.effective_n == 4);
  }

  SUBCASE("empty queue is rejected") {
    FeatureQueue queue;
    CHECK_THROWS_AS(select_features(queue, trend_of(40.0), kClock),
                    std::invalid_argument);
  }
}

TEST_CASE("selected pairs from a contiguous queue span at most 4 frames") {
  spsim::rng::Stream stream(99);
  FeatureQueue queue;
  for (std::int64_t f = 0; f < 40; ++f) {
    queue.push(snapshot_at(f));
    const double d = stream.uniform(0.0, 12.0 * kClock.frame_interval_ms);
    const auto sel = select_features(queue, trend_of(d), kClock);
    CHECK(sel.current.frame_index == f);
    CHECK(sel.current.frame_index - sel.past.frame_index <= 4);
    CHECK(sel.effective_n >= 0);
  }
}

TEST_CASE("policy names round-trip") {
  for (const auto kind : {PolicyKind::NoForecast, PolicyKind::FixedNextStep,
                          PolicyKind::DelayAdaptive})
    CHECK(policy_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(policy_from_string("bogus"), std::invalid_argument);
}
