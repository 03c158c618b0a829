#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spsim/rng.hpp"
#include "spsim/worldsim.hpp"

#include "test_support.hpp"

using namespace spsim::worldsim;
using spsim::core::BBox;

namespace {

WorldSpec two_object_world(std::int64_t duration = 60) {
  return test_support::make_world(
      {
          {100.0, 100.0, 40.0, 30.0, 3.0, 0.0, 0},
          {500.0, 400.0, 80.0, 80.0, -2.0, 1.5, 1},
      },
      duration);
}

}  // namespace

TEST_CASE("ground truth positions") {
  const auto world = two_object_world();

  SUBCASE("zero displacement at spawn") {
    const auto frame = ground_truth_at(world, 0);
    REQUIRE(frame.boxes.size() == 2);
    CHECK(frame.boxes[0].x1 == 100.0);
    CHECK(frame.boxes[0].y1 == 100.0);
  }

  SUBCASE("linear motion") {
    const auto frame = ground_truth_at(world, 10);
    CHECK(frame.boxes[0].x1 == doctest::Approx(130.0).epsilon(1e-12));
    CHECK(frame.boxes[0].x2 == doctest::Approx(170.0).epsilon(1e-12));
    CHECK(frame.boxes[0].y1 == doctest::Approx(100.0).epsilon(1e-12));
  }

  SUBCASE("acceleration adds a quadratic term") {
    auto world_acc = two_object_world();
    world_acc.objects[0].vx = 2.0;
    world_acc.objects[0].vy = 1.0;
    world_acc.objects[0].ax = 1.0;
    const auto frame = ground_truth_at(world_acc, 4);
    // dx = 2*4 + 0.5*1*16 = 16, dy = 4
    CHECK(frame.boxes[0].x1 == doctest::Approx(116.0).epsilon(1e-12));
    CHECK(frame.boxes[0].y1 == doctest::Approx(104.0).epsilon(1e-12));
  }

  SUBCASE("despawned objects are omitted") {
    auto world_short = two_object_world();
    world_short.objects[0].despawn_frame = 5;
    CHECK(ground_truth_at(world_short, 4).boxes.size() == 2);
    CHECK(ground_truth_at(world_short, 5).boxes.size() == 1);
    CHECK(ground_truth_at(world_short, 5).boxes[0].track_id == 2);
  }

  SUBCASE("objects leaving the image are clamped then dropped") {
    auto world_exit = test_support::make_world(
        {{10.0, 100.0, 30.0, 30.0, -4.0, 0.0, 0}}, 120);
    // after enough frames the box is fully outside on the left
    bool dropped = false;
    for (std::int64_t f = 0; f < 30; ++f) {
      const auto frame = ground_truth_at(world_exit, f);
      if (frame.boxes.empty()) {
        dropped = true;
        break;
      }
      CHECK(frame.boxes[0].x1 >= 0.0);
      CHECK(frame.boxes[0].width() >= 1.0);
    }
    CHECK(dropped);
  }

  SUBCASE("frame index out of range is rejected") {
    CHECK_THROWS_AS(ground_truth_at(world, -1), std::out_of_range);
    CHECK_THROWS_AS(ground_truth_at(world, 60), std::out_of_range);
  }
}

TEST_CASE("world validation") {
  auto world = two_object_world();
  world.duration_frames = 1;
  CHECK_THROWS_AS(world.validate(), std::invalid_argument);

  world = two_object_world();
  world.objects.clear();
  CHECK_THROWS_AS(world.validate(), std::invalid_argument);

  world = two_object_world();
  world.objects[0].despawn_frame = world.objects[0].spawn_frame;
  CHECK_THROWS_AS(world.validate(), std::invalid_argument);

  world = two_object_world();
  world.objects[1].track_id = world.objects[0].track_id;
  CHECK_THROWS_AS(world.validate(), std::invalid_argument);
}

TEST_CASE("observers") {
  const auto world = two_object_world();

  SUBCASE("oracle reproduces ground truth with ids and unit scores") {
    ObserverSpec oracle;
    const auto snap = observe(world, 10, oracle);
    const auto truth = ground_truth_at(world, 10);
    REQUIRE(snap.boxes.size() == truth.boxes.size());
    for (std::size_t i = 0; i < snap.boxes.size(); ++i) {
      CHECK(snap.boxes[i].x1 == truth.boxes[i].x1);
      CHECK(snap.boxes[i].y2 == truth.boxes[i].y2);
      CHECK(snap.boxes[i].score == 1.0);
      CHECK(snap.boxes[i].track_id == truth.boxes[i].track_id);
    }
  }

  SUBCASE("certain misses empty the snapshot") {
    ObserverSpec blind;
    blind.kind = ObserverKind::Noisy;
    blind.miss_prob = 1.0;
    CHECK(observe(world, 10, blind).boxes.empty());
  }

  SUBCASE("noiseless noisy observer equals the oracle") {
    ObserverSpec quiet;
    quiet.kind = ObserverKind::Noisy;
    const auto snap = observe(world, 10, quiet);
    const auto truth = ground_truth_at(world, 10);
    REQUIRE(snap.boxes.size() == truth.boxes.size());
    for (std::size_t i = 0; i < snap.boxes.size(); ++i)
      CHECK(snap.boxes[i].x1 == truth.boxes[i].x1);
  }

  SUBCASE("noisy observer is deterministic per seed and frame") {
    ObserverSpec noisy;
    noisy.kind = ObserverKind::Noisy;
    noisy.position_noise_std = 2.0;
    noisy.miss_prob = 0.1;
    noisy.false_positive_rate = 0.5;
    noisy.seed = 314;
    const auto a = observe(world, 13, noisy);
    const auto b = observe(world, 13, noisy);
    REQUIRE(a.boxes.size() == b.boxes.size());
    for (std::size_t i = 0; i < a.boxes.size(); ++i) {
      CHECK(a.boxes[i].x1 == b.boxes[i].x1);
      CHECK(a.boxes[i].score == b.boxes[i].score);
    }
    noisy.seed = 315;
    const auto c = observe(world, 13, noisy);
    bool differs = c.boxes.size() != a.boxes.size();
    for (std::size_t i = 0; !differs && i < a.boxes.size(); ++i)
      differs = a.boxes[i].x1 != c.boxes[i].x1;
    CHECK(differs);
  }

  SUBCASE("noisy boxes stay valid and false positives get fresh ids") {
    ObserverSpec noisy;
    noisy.kind = ObserverKind::Noisy;
    noisy.position_noise_std = 25.0;  // large: exercises coordinate ordering
    noisy.false_positive_rate = 2.0;
    noisy.seed = 7;
    for (std::int64_t f = 0; f < 40; ++f) {
      const auto snap = observe(world, f, noisy);
      for (const auto& b : snap.boxes) {
        CHECK(b.width() > 0.0);
        CHECK(b.height() > 0.0);
        REQUIRE(b.track_id.has_value());
        if (*b.track_id < 0) CHECK(b.score < 1.0);  // injected
      }
    }
  }

  SUBCASE("observer parameter validation") {
    ObserverSpec bad;
    bad.miss_prob = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = ObserverSpec{};
    bad.position_noise_std = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("extrapolation") {
  const auto world = two_object_world(80);
  const ObserverSpec oracle;

  SUBCASE("zero forward steps returns the current boxes verbatim") {
    const auto current = observe(world, 20, oracle);
    const auto past = observe(world, 18, oracle);
    const auto out = extrapolate(current, past, 0);
    REQUIRE(out.size() == current.boxes.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(out[i].x1 == current.boxes[i].x1);
  }

  SUBCASE("zero gap returns the current boxes verbatim") {
    const auto current = observe(world, 20, oracle);
    const auto out = extrapolate(current, current, 3);
    REQUIRE(out.size() == current.boxes.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(out[i].x1 == current.boxes[i].x1);
  }

  SUBCASE("constant-velocity forecasts reproduce ground truth exactly") {
    for (std::int64_t gap = 1; gap <= 4; ++gap) {
      const std::int64_t t = 30;
      const auto current = observe(world, t, oracle);
      const auto past = observe(world, t - gap, oracle);
      const auto out = extrapolate(current, past, gap);
      const auto truth = ground_truth_at(world, t + gap);
      REQUIRE(out.size() == truth.boxes.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(std::abs(out[i].x1 - truth.boxes[i].x1) <= 1e-9);
        CHECK(std::abs(out[i].y1 - truth.boxes[i].y1) <= 1e-9);
        CHECK(std::abs(out[i].x2 - truth.boxes[i].x2) <= 1e-9);
        CHECK(std::abs(out[i].y2 - truth.boxes[i].y2) <= 1e-9);
      }
    }
  }

  SUBCASE("gap and forward step may differ") {
    // velocity measured over 2 frames, projected 1 frame ahead
    const auto current = observe(world, 30, oracle);
    const auto past = observe(world, 28, oracle);
    const auto out = extrapolate(current, past, 1);
    const auto truth = ground_truth_at(world, 31);
    REQUIRE(out.size() == truth.boxes.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(std::abs(out[i].x1 - truth.boxes[i].x1) <= 1e-9);
  }

  SUBCASE("objects missing from the past snapshot are emitted unmoved") {
    auto world_spawn = two_object_world(80);
    world_spawn.objects[1].spawn_frame = 25;
    const auto current = observe(world_spawn, 26, oracle);
    const auto past = observe(world_spawn, 22, oracle);
    REQUIRE(current.boxes.size() == 2);
    REQUIRE(past.boxes.size() == 1);
    const auto out = extrapolate(current, past, 4);
    REQUIRE(out.size() == 2);
    // track 2 spawned in between: no velocity, stays at the current position
    CHECK(out[1].x1 == current.boxes[1].x1);
    CHECK(out[1].y1 == current.boxes[1].y1);
    // track 1 moves
    CHECK(out[0].x1 != current.boxes[0].x1);
  }

  SUBCASE("invalid arguments are rejected") {
    const auto current = observe(world, 20, oracle);
    const auto past = observe(world, 18, oracle);
    CHECK_THROWS_AS(extrapolate(past, current, 1), std::invalid_argument);
    CHECK_THROWS_AS(extrapolate(current, past, -1), std::invalid_argument);
  }
}

TEST_CASE("greedy IoU association") {
  const auto clock = spsim::core::FrameClock::from_fps(30.0);

  SUBCASE("identical snapshots pair index to index") {
    std::vector<BBox> boxes;
    boxes.emplace_back(0, 0, 10, 10, 0, 1.0, 1);
    boxes.emplace_back(50, 50, 70, 70, 0, 1.0, 2);
    const auto a = spsim::core::make_feature_snapshot(1, clock, boxes);
    const auto b = spsim::core::make_feature_snapshot(2, clock, boxes);
    const auto pairs = associate_by_iou(a, b);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].a == pairs[0].b);
    CHECK(pairs[1].a == pairs[1].b);
  }

  SUBCASE("disjoint snapshots produce no pairs") {
    std::vector<BBox> left, right;
    left.emplace_back(0, 0, 10, 10);
    right.emplace_back(500, 500, 510, 510);
    const auto a = spsim::core::make_feature_snapshot(1, clock, left);
    const auto b = spsim::core::make_feature_snapshot(2, clock, right);
    CHECK(associate_by_iou(a, b).empty());
  }

  SUBCASE("equal IoU candidates break ties toward lower indices") {
    // both boxes of `a` overlap b0 with identical IoU
    std::vector<BBox> left, right;
    left.emplace_back(0, 0, 10, 10);
    left.emplace_back(6, 0, 16, 10);
    right.emplace_back(3, 0, 13, 10);
    const auto a = spsim::core::make_feature_snapshot(1, clock, left);
    const auto b = spsim::core::make_feature_snapshot(2, clock, right);
    const auto pairs = associate_by_iou(a, b);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].a == 0);
    CHECK(pairs[0].b == 0);
  }
}

TEST_CASE("world JSON round-trip") {
  const auto dir = test_support::scratch_dir("worldsim_json");
  auto world = two_object_world();
  world.seed = 99;
  world.objects[0].ax = 0.25;

  const auto path = dir / "world.json";
  save_world(world, path);
  const auto loaded = load_world(path);
  CHECK(loaded.image_width == world.image_width);
  CHECK(loaded.duration_frames == world.duration_frames);
  CHECK(loaded.seed == world.seed);
  REQUIRE(loaded.objects.size() == world.objects.size());
  CHECK(loaded.objects[0].ax == 0.25);
  CHECK(loaded.objects[1].vx == world.objects[1].vx);

  const auto j = world_to_json(world);
  CHECK(j.at("schema_version").get<int>() == kWorldSchemaVersion);

  auto bad = j;
  bad["schema_version"] = 999;
  CHECK_THROWS_AS(world_from_json(bad), std::invalid_argument);

  auto invalid = j;
  invalid["duration_frames"] = 1;
  CHECK_THROWS_AS(world_from_json(invalid), std::invalid_argument);
}
