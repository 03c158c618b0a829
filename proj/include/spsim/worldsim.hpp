#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "spsim/core.hpp"

namespace spsim::worldsim {

// Object with a box at spawn, per-frame velocity, optional acceleration
// and a [spawn, despawn) lifetime in frame indices.
struct ObjectTrack {
  std::int64_t track_id = 0;
  int class_id = 0;
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;  // box at spawn_frame
  double vx = 0.0, vy = 0.0;                      // pixels per frame
  double ax = 0.0, ay = 0.0;                      // pixels per frame^2
  std::int64_t spawn_frame = 0;
  std::int64_t despawn_frame = 0;
};

struct WorldSpec {
  double image_width = 1920.0;
  double image_height = 1080.0;
  double fps = 30.0;
  std::int64_t duration_frames = 0;
  std::uint64_t seed = 0;
  std::vector<ObjectTrack> objects;

  void validate() const;
  core::FrameClock clock() const { return core::FrameClock::from_fps(fps); }
};

enum class ObserverKind { Oracle, Noisy };

// Detector stand-in. Oracle reproduces ground truth verbatim; Noisy
// perturbs coordinates, drops boxes and injects false positives,
// deterministically per (seed, frame_index).
struct ObserverSpec {
  ObserverKind kind = ObserverKind::Oracle;
  double position_noise_std = 0.0;   // pixels, per coordinate
  double miss_prob = 0.0;            // in [0, 1]
  double false_positive_rate = 0.0;  // expected count per frame
  std::uint64_t seed = 0;

  void validate() const;
};

// Box positions at `frame_index`: spawn box displaced by v*k + a*k^2/2
// (k frames since spawn), clamped to image bounds. Objects despawned or
// shrunk below 1px by clamping are omitted.
core::GroundTruthFrame ground_truth_at(const WorldSpec& world,
                                       std::int64_t frame_index);

core::FeatureSnapshot observe(const WorldSpec& world, std::int64_t frame_index,
                              const ObserverSpec& observer);

// Two-point linear forecast. Boxes are matched across the snapshots by
// track id (greedy IoU association when ids are not available on both
// sides); each matched box moves by forward_steps times its per-frame
// velocity (current - past) / gap. Unmatched current boxes are emitted
// unchanged, as is everything when the gap or forward_steps is zero.
std::vector<core::BBox> extrapolate(const core::FeatureSnapshot& current,
                                    const core::FeatureSnapshot& past,
                                    std::int64_t forward_steps);

struct IndexPair {
  std::size_t a = 0;
  std::size_t b = 0;
};

// Greedy one-to-one matching by descending IoU at the given threshold.
// Ties break deterministically by (lower a index, lower b index).
std::vector<IndexPair> associate_by_iou(const core::FeatureSnapshot& a,
                                        const core::FeatureSnapshot& b,
                                        double min_iou = 0.3);

inline constexpr int kWorldSchemaVersion = 1;

nlohmann::ordered_json world_to_json(const WorldSpec& world);
WorldSpec world_from_json(const nlohmann::json& j);
void save_world(const WorldSpec& world, const std::filesystem::path& path);
WorldSpec load_world(const std::filesystem::path& path);

}  // namespace spsim::worldsim
