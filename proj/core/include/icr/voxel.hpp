#pragma once

#include <cstdint>
#include <vector>

#include "icr/scene.hpp"

namespace icr {

struct DownsampleResult {
  Scene scene;
  /// Maps each input point to the index of its voxel representative.
  std::vector<std::int32_t> index_map;
};

/// Replaces every occupied voxel by one point at the centroid of its members.
///
/// Voxel keys are floor((x - scene_min) / voxel_size) per axis. Colors are
/// averaged, labels take the majority vote of the members (ties toward the
/// smallest ID). The semantic vote is restricted to members sharing the
/// winning instance ID so every instance point keeps a category. Instance
/// IDs are renumbered to stay contiguous. Output points are ordered by
/// voxel key, so the result does not depend on input order.
DownsampleResult voxel_downsample(const Scene& scene, double voxel_size);

/// Keeps each point independently with probability keep_ratio.
/// Instance IDs are renumbered to stay contiguous.
Scene random_subsample(const Scene& scene, double keep_ratio, std::uint64_t seed);

}  // namespace icr
