#pragma once

#include <filesystem>
#include <vector>

#include "spsim/core.hpp"

namespace spsim::streameval {

// Loads COCO-format annotations (images, annotations, categories) as
// ground-truth frames. Frame order follows ascending image id; boxes are
// clamped to their image bounds and dropped when thinner than 1px.
// Together with a declared fps this lets logged runs be scored offline.
std::vector<core::GroundTruthFrame> load_coco_ground_truth(
    const std::filesystem::path& path);

}  // namespace spsim::streameval
