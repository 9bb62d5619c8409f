#pragma once

#include <cstddef>
#include <cstdint>
#include <array>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "icr/scene.hpp"

namespace icr {

struct InstancePrediction {
  std::vector<std::uint8_t> mask;  // N flags
  std::int32_t category = 1;
  double confidence = 1.0;
};

/// One prediction per non-empty instance of `labeling`. Missing categories
/// default to 1, missing confidences to 1.
std::vector<InstancePrediction> predictions_from_labeling(const HardLabeling& labeling);

/// Predictions and ground truth of one scene. gt.inst_category must be set.
struct SceneInstances {
  std::vector<InstancePrediction> predictions;
  HardLabeling gt;
};

/// IoU thresholds averaged by mAP: 0.50, 0.55, ..., 0.95.
std::vector<double> map_thresholds();

struct EvalResult {
  std::vector<std::pair<double, double>> ap_per_threshold;  // requested thresholds
  double mAP = 0.0;
  double AP50 = 0.0;
  double AP25 = 0.0;
  /// category -> (mAP, AP50, AP25) for categories present in the GT.
  std::map<std::int32_t, std::array<double, 3>> per_class;

  /// AP at a requested threshold; throws when it was not evaluated.
  double ap_at(double threshold) const;
  nlohmann::json to_json() const;
};

/// Instance average precision, pooled over scenes.
///
/// Per category and threshold, predictions are ranked by descending
/// confidence (stable), and each in turn claims the unmatched same-category
/// GT instance of its scene with the highest IoU, provided IoU >= threshold
/// (IoU ties toward the smaller GT ID). AP is the area under the precision
/// envelope (all-point interpolation). Categories absent from the GT are
/// ignored; the result averages the remaining categories.
EvalResult average_precision(std::span<const SceneInstances> scenes,
                             std::span<const double> thresholds);
EvalResult average_precision(const std::vector<InstancePrediction>& predictions,
                             const HardLabeling& gt, std::span<const double> thresholds);

/// Area under the all-point interpolated precision–recall curve for one
/// ranked list of TP/FP flags against `gt_count` positives.
double all_point_ap(std::span<const std::uint8_t> ranked_tp, std::size_t gt_count);

/// Semantic mIoU over points with gt != -1, averaging categories present
/// in the GT. Predictions outside 1..C count as misses.
double mean_iou(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt,
                int num_categories);

struct AmbiguityOptions {
  double threshold = 0.25;
  /// Predictions below this confidence are discarded before mask matching.
  double min_confidence = 0.5;
};

/// Instance-level ambiguity statistics. Means and rates are percentages.
struct AmbiguityStats {
  double mAcc = 0.0;
  double sem_ambiguity_rate = 0.0;
  double mIoU_inst = 0.0;
  double inst_ambiguity_rate = 0.0;
  std::vector<double> instance_accuracy;  // fraction per GT instance
  std::vector<double> instance_best_iou;  // fraction per GT instance
  std::vector<std::uint8_t> sem_ambiguous;
  std::vector<std::uint8_t> inst_ambiguous;

  nlohmann::json to_json() const;
};

/// For every GT instance: the fraction of its points whose predicted
/// category equals sem_gt, and the best IoU with any prediction (with
/// replacement). An instance is ambiguous when the value is below
/// options.threshold.
AmbiguityStats ambiguity_stats(std::span<const std::int32_t> sem_pred,
                               const std::vector<InstancePrediction>& predictions,
                               const HardLabeling& gt_instances,
                               std::span<const std::int32_t> sem_gt,
                               const AmbiguityOptions& options = {});

/// Rand index between two labelings of the same points (each ID, including
/// -1, is one cluster). 1.0 for identical partitions up to relabeling.
double rand_index(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

}  // namespace icr
