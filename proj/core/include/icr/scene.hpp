#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icr/matrix.hpp"

namespace icr {

/// Instance/semantic ID of background or unlabeled points.
inline constexpr std::int32_t kBackground = -1;

/// A point cloud with optional superpoints and ground truth.
///
/// Instance IDs are 1-based; 0 is never a valid instance ID. Semantic
/// categories run over 1..num_categories.
struct Scene {
  std::string scene_id;
  int num_categories = 0;
  bool labeled = false;

  MatrixF coords;  // N x 3, meters
  std::optional<MatrixF> colors;  // N x 3 in [0,1]
  std::optional<std::vector<std::int32_t>> superpoint_id;
  std::optional<std::vector<std::int32_t>> sem_gt;
  std::optional<std::vector<std::int32_t>> inst_gt;

  std::size_t size() const noexcept { return coords.rows(); }

  /// Largest instance ID in inst_gt, or 0 without instance labels.
  int instance_count() const;

  /// Throws ShapeError / InvalidArgument naming the offending array.
  void validate() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Per-point, per-instance membership scores (N x I, entries in [0,1]).
/// Column i holds instance ID i + 1.
struct SoftMaskSet {
  MatrixF scores;

  SoftMaskSet() = default;
  explicit SoftMaskSet(MatrixF s) : scores(std::move(s)) {}
  SoftMaskSet(std::size_t points, std::size_t instances)
      : scores(points, instances, 0.0f) {}

  std::size_t points() const noexcept { return scores.rows(); }
  std::size_t instances() const noexcept { return scores.cols(); }

  void validate() const;

  friend bool operator==(const SoftMaskSet&, const SoftMaskSet&) = default;
};

/// Dense hard instance IDs: kBackground or 1..num_instances per point.
struct HardLabeling {
  std::vector<std::int32_t> inst_id;
  int num_instances = 0;
  std::vector<std::int32_t> inst_category;  // empty or num_instances entries
  std::vector<float> inst_confidence;       // empty or num_instances entries

  HardLabeling() = default;
  HardLabeling(std::vector<std::int32_t> ids, int instances)
      : inst_id(std::move(ids)), num_instances(instances) {}

  std::size_t size() const noexcept { return inst_id.size(); }

  /// Number of points carrying each ID 1..num_instances (index 0 unused).
  std::vector<std::size_t> point_counts() const;

  void validate() const;

  friend bool operator==(const HardLabeling&, const HardLabeling&) = default;
};

/// Builds a labeling from raw IDs, taking num_instances as the max ID.
HardLabeling labeling_from_ids(std::vector<std::int32_t> ids);

/// Per-point semantic logits (N x C). Rows need not be normalized.
struct SemanticScores {
  MatrixF logits;

  std::size_t points() const noexcept { return logits.rows(); }
  std::size_t categories() const noexcept { return logits.cols(); }

  /// Row-wise softmax.
  MatrixD probs() const;
  /// Predicted category per point, 1-based; ties break toward the smaller.
  std::vector<std::int32_t> argmax() const;

  void validate() const;

  friend bool operator==(const SemanticScores&, const SemanticScores&) =
      default;
};

/// Majority category among the points of each instance (ties -> smaller).
/// `categories` holds a 1-based category per point, <1 entries are skipped.
std::vector<std::int32_t> vote_categories(
    const HardLabeling& labeling, std::span<const std::int32_t> categories);

}  // namespace icr
