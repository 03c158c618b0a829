#include "spsim/coco.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace spsim::streameval {

std::vector<core::GroundTruthFrame> load_coco_ground_truth(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("coco: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("coco: " + path.string() + ": " + e.what());
  }

  struct ImageInfo {
    double width = 0.0;
    double height = 0.0;
  };
  std::map<std::int64_t, ImageInfo> images;  // ordered by image id
  for (const auto& img : j.at("images")) {
    const auto id = img.at("id").get<std::int64_t>();
    ImageInfo info;
    info.width = img.at("width").get<double>();
    info.height = img.at("height").get<double>();
    if (info.width <= 0.0 || info.height <= 0.0)
      throw std::runtime_error("coco: image " + std::to_string(id) +
                               ": non-positive dimensions");
    images[id] = info;
  }
  if (images.empty()) throw std::runtime_error("coco: no images");

  std::map<std::int64_t, std::int64_t> frame_of_image;
  std::vector<core::GroundTruthFrame> frames;
  frames.reserve(images.size());
  std::int64_t next_frame = 0;
  for (const auto& [id, info] : images) {
    frame_of_image[id] = next_frame;
    core::GroundTruthFrame frame;
    frame.frame_index = next_frame++;
    frame.image_width = info.width;
    frame.image_height = info.height;
    frames.push_back(std::move(frame));
  }

  for (const auto& ann : j.at("annotations")) {
    const auto image_id = ann.at("image_id").get<std::int64_t>();
    const auto it = frame_of_image.find(image_id);
    if (it == frame_of_image.end())
      throw std::runtime_error("coco: annotation references unknown image " +
                               std::to_string(image_id));
    const auto& bbox = ann.at("bbox");
    if (!bbox.is_array() || bbox.size() != 4)
      throw std::runtime_error("coco: bbox must be [x, y, width, height]");
    const double x = bbox[0].get<double>();
    const double y = bbox[1].get<double>();
    const double w = bbox[2].get<double>();
    const double h = bbox[3].get<double>();
    if (w <= 0.0 || h <= 0.0)
      throw std::runtime_error(
          "coco: annotation " +
          std::to_string(ann.value("id", std::int64_t{-1})) +
          ": bbox width/height must be positive");

    core::GroundTruthFrame& frame = frames[static_cast<std::size_t>(it->second)];
    const double x1 = std::clamp(x, 0.0, frame.image_width);
    const double x2 = std::clamp(x + w, 0.0, frame.image_width);
    const double y1 = std::clamp(y, 0.0, frame.image_height);
    const double y2 = std::clamp(y + h, 0.0, frame.image_height);
    if (x2 - x1 < 1.0 || y2 - y1 < 1.0) continue;
    frame.boxes.emplace_back(x1, y1, x2, y2,
                             ann.at("category_id").get<int>(), 1.0);
  }
  return frames;
}

}  // namespace spsim::streameval
