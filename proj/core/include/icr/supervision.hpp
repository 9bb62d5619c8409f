#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "icr/kernel_infer.hpp"
#include "icr/scene.hpp"

namespace icr {

/// Probability clamp applied inside every logarithm.
inline constexpr double kLossEpsilon = 1e-7;

/// Minimum size coefficient, meters.
inline constexpr double kMinSizeCoeff = 0.1;

/// Training targets derived from a hard labeling.
struct SupervisionTargets {
  MatrixD offsets;              // N x 3, centroid - x for foreground points, 0 otherwise
  std::vector<double> heatmap;  // N, exp(-|offset|^2 / L^2) on foreground, 0 otherwise
  MatrixD centroids;            // I x 3, mean coordinate per instance
  std::vector<double> size_coeff;  // I, max point-to-centroid distance, floored
  MatrixD affinity;             // Q x Q, 1 where candidates share an instance ID
  MatrixF masks;                // N x I one-hot of the labeling
  std::vector<std::uint8_t> fg_mask;
  std::size_t fg_count = 0;

  std::size_t points() const noexcept { return fg_mask.size(); }
  std::size_t instances() const noexcept { return size_coeff.size(); }
};

/// Builds targets for `labeling` over `scene`. `candidates` lists point
/// indices whose pairwise affinity targets are wanted (may be empty).
/// Throws InvalidArgument when an instance ID 1..I owns no points.
SupervisionTargets make_targets(const Scene& scene, const HardLabeling& labeling,
                                std::span<const std::int32_t> candidates = {});

/// Mean cross-entropy over points with a label plus the multi-class dice
/// term (1/C) * sum_c (1 - 2 sum(B B^) / (sum B^2 + sum B^^2)).
/// A class whose dice denominator is below kLossEpsilon contributes 0.
double semantic_loss(const SemanticScores& pred, std::span<const std::int32_t> sem_gt,
                     int num_categories);

/// (1/N') * sum over foreground of |O - O^| + (1 - cos(O, O^)) + |H - H^|.
/// The direction term is 0 when either offset is shorter than 1e-8.
double localization_loss(const MatrixF& offsets, const Heatmap& heat,
                         const SupervisionTargets& targets);

/// Mean binary cross-entropy between predicted and target affinity.
double representation_loss(const AffinityMatrix& affinity, const SupervisionTargets& targets);

struct Matching {
  std::vector<int> pred_to_gt;  // -1 when unpaired
  std::vector<int> gt_to_pred;
  double total_cost = 0.0;      // summed centroid distance of the pairs
};

/// One-to-one pairing of predicted and ground-truth centroids minimising
/// the total Euclidean distance.
Matching match_instances(const MatrixD& pred_centroids, const MatrixD& gt_centroids);

/// Mask reconstruction loss over matched pairs whose IoU (prediction
/// binarized at 0.5) exceeds 0.5: mean BCE plus dice, averaged over the
/// pairs that pass. Zero when none pass.
double reconstruction_loss(const SoftMaskSet& masks, const SupervisionTargets& targets,
                           const Matching& matching);

struct LossComponents {
  std::optional<double> sem;
  std::optional<double> loc;
  std::optional<double> rep;
  std::optional<double> rec;
};

struct LossBreakdown {
  double sem = 0.0;
  double loc = 0.0;
  double rep = 0.0;
  double rec = 0.0;
  double ins = 0.0;
  double total = 0.0;

  nlohmann::json to_json() const;
};

/// Labeled scenes: sem + loc + rep + rec. Unlabeled scenes: loc + rep + rec
/// (sem is reported as 0). Throws InvalidArgument for a missing component.
LossBreakdown total_loss(const LossComponents& parts, bool labeled);

}  // namespace icr
