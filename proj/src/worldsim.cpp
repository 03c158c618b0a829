#include "spsim/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "spsim/rng.hpp"

namespace spsim::worldsim {

namespace {

constexpr double kMinBoxExtent = 1e-9;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Keeps a perturbed or forecast box valid: orders the coordinates and
// enforces a tiny minimum extent.
core::BBox sanitized_box(double x1, double y1, double x2, double y2,
                         const core::BBox& like) {
  if (x2 < x1) std::swap(x1, x2);
  if (y2 < y1) std::swap(y1, y2);
  if (x2 - x1 < kMinBoxExtent) x2 = x1 + kMinBoxExtent;
  if (y2 - y1 < kMinBoxExtent) y2 = y1 + kMinBoxExtent;
  return core::BBox(x1, y1, x2, y2, like.class_id, like.score, like.track_id);
}

}  // namespace

void WorldSpec::validate() const {
  require(image_width > 0.0 && image_height > 0.0,
          "world: image dimensions must be positive");
  require(std::isfinite(fps) && fps > 0.0, "world: fps must be positive");
  require(duration_frames >= 2, "world: duration_frames must be >= 2");
  require(!objects.empty(), "world: at least one object is required");
  for (const auto& t : objects) {
    const std::string tag = "world: track " + std::to_string(t.track_id);
    require(t.spawn_frame >= 0, tag + ": spawn_frame must be >= 0");
    require(t.spawn_frame < t.despawn_frame,
            tag + ": spawn_frame must precede despawn_frame");
    require(t.x2 > t.x1 && t.y2 > t.y1, tag + ": box invalid at spawn");
    require(std::isfinite(t.vx) && std::isfinite(t.vy) &&
                std::isfinite(t.ax) && std::isfinite(t.ay),
            tag + ": motion parameters must be finite");
  }
  std::vector<std::int64_t> ids;
  ids.reserve(objects.size());
  for (const auto& t : objects) ids.push_back(t.track_id);
  std::sort(ids.begin(), ids.end());
  require(std::adjacent_find(ids.begin(), ids.end()) == ids.end(),
          "world: track ids must be distinct");
}

void ObserverSpec::validate() const {
  require(std::isfinite(position_noise_std) && position_noise_std >= 0.0,
          "observer: position_noise_std must be >= 0");
  require(miss_prob >= 0.0 && miss_prob <= 1.0,
          "observer: miss_prob must lie in [0, 1]");
  require(std::isfinite(false_positive_rate) && false_positive_rate >= 0.0,
          "observer: false_positive_rate must be >= 0");
}

core::GroundTruthFrame ground_truth_at(const WorldSpec& world,
                                       std::int64_t frame_index) {
  world.validate();
  if (frame_index < 0 || frame_index >= world.duration_frames)
    throw std::out_of_range("ground_truth_at: frame index " +
                            std::to_string(frame_index) + " outside [0, " +
                            std::to_string(world.duration_frames) + ")");

  core::GroundTruthFrame frame;
  frame.frame_index = frame_index;
  frame.image_width = world.image_width;
  frame.image_height = world.image_height;

  for (const auto& t : world.objects) {
    if (frame_index < t.spawn_frame || frame_index >= t.despawn_frame)
      continue;
    const double k = static_cast<double>(frame_index - t.spawn_frame);
    const double dx = t.vx * k + 0.5 * t.ax * k * k;
    const double dy = t.vy * k + 0.5 * t.ay * k * k;
    const double x1 = std::clamp(t.x1 + dx, 0.0, world.image_width);
    const double x2 = std::clamp(t.x2 + dx, 0.0, world.image_width);
    const double y1 = std::clamp(t.y1 + dy, 0.0, world.image_height);
    const double y2 = std::clamp(t.y2 + dy, 0.0, world.image_height);
    if (x2 - x1 < 1.0 || y2 - y1 < 1.0) continue;  // left the image
    frame.boxes.emplace_back(x1, y1, x2, y2, t.class_id, 1.0, t.track_id);
  }
  return frame;
}

core::FeatureSnapshot observe(const WorldSpec& world, std::int64_t frame_index,
                              const ObserverSpec& observer) {
  observer.validate();
  const core::GroundTruthFrame truth = ground_truth_at(world, frame_index);
  const core::FrameClock clock = world.clock();

  if (observer.kind == ObserverKind::Oracle)
    return core::make_feature_snapshot(frame_index, clock, truth.boxes);

  rng::Stream stream(
      rng::mix(observer.seed, static_cast<std::uint64_t>(frame_index)));
  std::vector<core::BBox> boxes;
  boxes.reserve(truth.boxes.size());
  for (const auto& b : truth.boxes) {
    const double miss_draw = stream.uniform01();
    double coords[4] = {b.x1, b.y1, b.x2, b.y2};
    if (observer.position_noise_std > 0.0)
      for (double& c : coords) c += stream.normal(0.0, observer.position_noise_std);
    if (miss_draw < observer.miss_prob) continue;
    boxes.push_back(
        sanitized_box(coords[0], coords[1], coords[2], coords[3], b));
  }

  if (observer.false_positive_rate > 0.0) {
    std::set<int> class_set;
    for (const auto& t : world.objects) class_set.insert(t.class_id);
    const std::vector<int> classes(class_set.begin(), class_set.end());
    const int count = stream.poisson(observer.false_positive_rate);
    for (int j = 0; j < count; ++j) {
      const double w = stream.uniform(10.0, 100.0);
      const double h = stream.uniform(10.0, 100.0);
      const double cx = stream.uniform(0.0, world.image_width);
      const double cy = stream.uniform(0.0, world.image_height);
      const double score = stream.uniform(0.1, 0.9);
      const int cls = classes[static_cast<std::size_t>(
          std::min(stream.uniform01() * classes.size(),
                   static_cast<double>(classes.size()) - 1.0))];
      // ids unique across frames so phantoms never pair up in extrapolation
      boxes.emplace_back(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0,
                         cy + h / 2.0, cls, score,
                         -(frame_index * 1000 + j) - 1);
    }
  }

  return core::make_feature_snapshot(frame_index, clock, std::move(boxes));
}

std::vector<IndexPair> associate_by_iou(const core::FeatureSnapshot& a,
                                        const core::FeatureSnapshot& b,
                                        double min_iou) {
  struct Candidate {
    double iou;
    std::size_t ai;
    std::size_t bi;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    for (std::size_t j = 0; j < b.boxes.size(); ++j) {
      const double v = core::iou(a.boxes[i], b.boxes[j]);
      if (v >= min_iou) candidates.push_back({v, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& l, const Candidate& r) {
              if (l.iou != r.iou) return l.iou > r.iou;
              if (l.ai != r.ai) return l.ai < r.ai;
              return l.bi < r.bi;
            });

  std::vector<bool> used_a(a.boxes.size(), false);
  std::vector<bool> used_b(b.boxes.size(), false);
  std::vector<IndexPair> pairs;
  for (const auto& c : candidates) {
    if (used_a[c.ai] || used_b[c.bi]) continue;
    used_a[c.ai] = true;
    used_b[c.bi] = true;
    pairs.push_back({c.ai, c.bi});
  }
  return pairs;
}

std::vector<core::BBox> extrapolate(const core::FeatureSnapshot& current,
                                    const core::FeatureSnapshot& past,
                                    std::int64_t forward_steps) {
  const std::int64_t gap = current.frame_index - past.frame_index;
  if (gap < 0)
    throw std::invalid_argument(
        "extrapolate: past snapshot must not be newer than current");
  if (forward_steps < 0)
    throw std::invalid_argument("extrapolate: forward_steps must be >= 0");
  if (gap == 0 || forward_steps == 0) return current.boxes;

  const bool ids_usable =
      std::all_of(current.boxes.begin(), current.boxes.end(),
                  [](const core::BBox& b) { return b.track_id.has_value(); }) &&
      std::all_of(past.boxes.begin(), past.boxes.end(),
                  [](const core::BBox& b) { return b.track_id.has_value(); });

  // past-box index for each current box, or npos when unmatched
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> partner(current.boxes.size(), npos);
  if (ids_usable) {
    std::unordered_map<std::int64_t, std::size_t> past_by_id;
    for (std::size_t j = 0; j < past.boxes.size(); ++j)
      past_by_id[*past.boxes[j].track_id] = j;
    for (std::size_t i = 0; i < current.boxes.size(); ++i) {
      const auto it = past_by_id.find(*current.boxes[i].track_id);
      if (it != past_by_id.end()) partner[i] = it->second;
    }
  } else {
    for (const auto& pair : associate_by_iou(current, past))
      partner[pair.a] = pair.b;
  }

  const double scale =
      static_cast<double>(forward_steps) / static_cast<double>(gap);
  std::vector<core::BBox> out;
  out.reserve(current.boxes.size());
  for (std::size_t i = 0; i < current.boxes.size(); ++i) {
    const core::BBox& cur = current.boxes[i];
    if (partner[i] == npos) {
      out.push_back(cur);  // spawned since `past`: emit unmoved
      continue;
    }
    const core::BBox& prev = past.boxes[partner[i]];
    out.push_back(sanitized_box(cur.x1 + (cur.x1 - prev.x1) * scale,
                                cur.y1 + (cur.y1 - prev.y1) * scale,
                                cur.x2 + (cur.x2 - prev.x2) * scale,
                                cur.y2 + (cur.y2 - prev.y2) * scale, cur));
  }
  return out;
}

nlohmann::ordered_json world_to_json(const WorldSpec& world) {
  nlohmann::ordered_json j;
  j["schema_version"] = kWorldSchemaVersion;
  j["image_width"] = world.image_width;
  j["image_height"] = world.image_height;
  j["fps"] = world.fps;
  j["duration_frames"] = world.duration_frames;
  j["seed"] = world.seed;
  auto objects = nlohmann::ordered_json::array();
  for (const auto& t : world.objects) {
    nlohmann::ordered_json o;
    o["track_id"] = t.track_id;
    o["class_id"] = t.class_id;
    o["box"] = {t.x1, t.y1, t.x2, t.y2};
    o["velocity"] = {t.vx, t.vy};
    o["acceleration"] = {t.ax, t.ay};
    o["spawn_frame"] = t.spawn_frame;
    o["despawn_frame"] = t.despawn_frame;
    objects.push_back(std::move(o));
  }
  j["objects"] = std::move(objects);
  return j;
}

WorldSpec world_from_json(const nlohmann::json& j) {
  if (!j.contains("schema_version") ||
      j.at("schema_version").get<int>() != kWorldSchemaVersion)
    throw std::invalid_argument("world: unsupported or missing schema_version");

  WorldSpec world;
  world.image_width = j.value("image_width", 1920.0);
  world.image_height = j.value("image_height", 1080.0);
  world.fps = j.value("fps", 30.0);
  world.duration_frames = j.at("duration_frames").get<std::int64_t>();
  world.seed = j.value("seed", std::uint64_t{0});
  for (const auto& o : j.at("objects")) {
    ObjectTrack t;
    t.track_id = o.at("track_id").get<std::int64_t>();
    t.class_id = o.value("class_id", 0);
    const auto& box = o.at("box");
    if (!box.is_array() || box.size() != 4)
      throw std::invalid_argument("world: object box must be [x1,y1,x2,y2]");
    t.x1 = box[0].get<double>();
    t.y1 = box[1].get<double>();
    t.x2 = box[2].get<double>();
    t.y2 = box[3].get<double>();
    const auto vel = o.value("velocity", std::vector<double>{0.0, 0.0});
    const auto acc = o.value("acceleration", std::vector<double>{0.0, 0.0});
    if (vel.size() != 2 || acc.size() != 2)
      throw std::invalid_argument(
          "world: velocity/acceleration must be [x, y]");
    t.vx = vel[0];
    t.vy = vel[1];
    t.ax = acc[0];
    t.ay = acc[1];
    t.spawn_frame = o.value("spawn_frame", std::int64_t{0});
    t.despawn_frame = o.value("despawn_frame", world.duration_frames);
    world.objects.push_back(t);
  }
  world.validate();
  return world;
}

void save_world(const WorldSpec& world, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("world: cannot open " + path.string() +
                             " for writing");
  out << world_to_json(world).dump(2) << '\n';
}

WorldSpec load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("world: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("world: " + path.string() + ": " + e.what());
  }
  return world_from_json(j);
}

}  // namespace spsim::worldsim
