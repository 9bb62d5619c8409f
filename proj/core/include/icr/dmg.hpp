#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "icr/scene.hpp"

namespace icr {

struct EnhanceConfig {
  double threshold_cap = 0.5;  // columns with an Otsu threshold >= cap are left alone
  int otsu_bins = 256;
  double fg_threshold = 0.5;  // projection foreground bar
  int min_points = 100;       // instances with fewer points are dropped
  double min_confidence = 0.5;  // instances with lower confidence are dropped
  bool use_superpoints = true;  // ignored when the scene has no superpoints
  bool confidence_after_refine = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const EnhanceConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, EnhanceConfig& c);

/// Intermediate quantities of the enhancement pipeline.
struct EnhanceReport {
  std::vector<double> thresholds;  // Otsu threshold per input column
  std::vector<std::uint8_t> rescaled;  // 1 when the column was divided by 2T
  std::vector<double> purities;    // purity score per input column
  std::size_t foreground_initial = 0;  // foreground points after the first projection
  std::size_t cleared_by_reprojection = 0;    // foreground -> background
  std::size_t relabeled_by_reprojection = 0;  // foreground -> other instance
  std::size_t changed_by_superpoints = 0;
  std::size_t removed_by_filter = 0;  // points cleared with filtered instances
  std::size_t instances_in = 0;
  std::size_t instances_out = 0;
  bool superpoints_applied = false;

  nlohmann::json to_json() const;
};

/// Histogram Otsu threshold over [0,1].
///
/// Values fall into `bins` equal bins; candidate thresholds are the interior
/// bin boundaries k/bins. The split with the largest between-class variance
/// wins (class statistics use the actual values, not bin centers), and ties
/// between distinct splits go to the smallest boundary. All boundaries
/// between the two occupied bins adjacent to the winning split produce the
/// same split; among those the one nearest the midpoint of the two
/// neighbouring values is returned. A histogram with zero variance
/// everywhere yields 1/bins.
double otsu_threshold(std::span<const float> values, int bins = 256);

struct IntraResult {
  SoftMaskSet masks;
  std::vector<double> thresholds;
  std::vector<std::uint8_t> rescaled;
};

/// Divides every column whose Otsu threshold T is below the cap by 2T,
/// clamping at 1.
IntraResult intra_enhance(const SoftMaskSet& masks, const EnhanceConfig& cfg);

/// Channel-wise maximum projection. A point is foreground when its maximum
/// score exceeds fg_threshold, and takes the argmax column (ties toward the
/// smaller index). With foreground_only, only points that are foreground in
/// `prior` are re-projected; the others keep the prior's label.
HardLabeling project(const SoftMaskSet& masks, double fg_threshold = 0.5,
                     bool foreground_only = false,
                     const HardLabeling* prior = nullptr);

/// Agreement between soft column `instance_id - 1` and the hard labeling:
/// sum of scores where the hard label is the instance, over the sum of
/// scores above score_threshold. Zero denominator gives 0.
double purity_score(const SoftMaskSet& masks, const HardLabeling& hard,
                    int instance_id, double score_threshold = 0.5);

struct InterResult {
  SoftMaskSet masks;
  std::vector<double> purities;
};

/// Scales every column by its purity score.
InterResult inter_enhance(const SoftMaskSet& masks, const HardLabeling& hard);

/// Broadcasts each superpoint's mode instance ID to all of its points.
/// Ties prefer a non-background ID, then the smallest ID.
HardLabeling superpoint_refine(const HardLabeling& hard,
                               std::span<const std::int32_t> superpoint_id);

/// Mean score of each instance's column over the points it owns.
std::vector<float> instance_confidence(const SoftMaskSet& masks,
                                       const HardLabeling& hard);

/// Clears instances with fewer than min_points points or (when confidences
/// are present) confidence below min_confidence, then renumbers survivors
/// 1..K in their original order. Both comparisons are strict.
HardLabeling filter_instances(const HardLabeling& hard, int min_points,
                              double min_confidence);

struct PseudoLabels {
  HardLabeling labels;
  EnhanceReport report;
};

/// Full pseudo-label pipeline:
/// intra_enhance -> project -> inter_enhance -> project(foreground only)
/// -> superpoint_refine (when enabled and available) -> filter_instances.
///
/// Confidence is the mean enhanced score of each instance's points.
/// Categories come from a majority vote of `semantics` when given, else 1.
PseudoLabels generate_pseudo_labels(const SoftMaskSet& masks, const Scene& scene,
                                    const EnhanceConfig& cfg,
                                    const SemanticScores* semantics = nullptr);

/// Projection-only baseline: project at fg_threshold, attach confidences and
/// categories, no enhancement or filtering.
HardLabeling naive_pseudo_labels(const SoftMaskSet& masks, double fg_threshold = 0.5,
                                 const SemanticScores* semantics = nullptr);

}  // namespace icr
