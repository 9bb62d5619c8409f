#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icr/kernel_infer.hpp"
#include "icr/metrics.hpp"
#include "icr/scene.hpp"

namespace icr {

enum class InstanceShape { kGaussianBlob, kBox };

struct GenConfig {
  std::uint64_t seed = 0;
  int instance_count_min = 3;
  int instance_count_max = 8;
  int points_per_instance_min = 200;
  int points_per_instance_max = 600;
  double room_extent = 6.0;        // meters, square floor [0, extent]^2
  double instance_radius_min = 0.25;
  double instance_radius_max = 0.6;
  InstanceShape shape = InstanceShape::kGaussianBlob;
  double gap = 0.2;                // min distance between instances, meters
  double superpoint_grid = 0.15;   // meters
  int num_categories = 5;
  int feature_dim = 16;            // must exceed the instance count
  double background_ratio = 0.1;   // floor points per instance point
  double inside_score = 0.9;       // ideal soft-mask score inside an instance
  double outside_score = 0.05;
  double semantic_margin = 4.0;    // ideal logit of the true class
  double feature_noise = 0.05;
  int max_retries = 200;

  void validate() const;
};

void from_json(const nlohmann::json& j, GenConfig& c);
void to_json(nlohmann::json& j, const GenConfig& c);

/// A generated scene with everything a perfect model would predict for it.
struct SyntheticScene {
  Scene scene;
  MatrixF features;         // N x D, instance code + noise
  KernelSet kernels;        // reconstructs masks that project onto inst_gt
  SoftMaskSet masks;        // inside_score / outside_score per column
  Heatmap heatmap;          // centroid heat of the GT instances
  SemanticScores semantics; // semantic_margin on the true class
};

/// Deterministic for a fixed cfg.seed. Throws InvalidArgument when the
/// instances cannot be packed with the requested gap.
SyntheticScene generate_scene(const GenConfig& cfg);

struct CorruptionConfig {
  double duplicate_rate = 0.0;   // chance per instance of a duplicate column
  double attenuation = 0.0;      // attenuated columns are scaled by 1 - attenuation
  double boundary_noise = 0.0;   // meters of boundary shift on duplicates
  double sem_flip_rate = 0.0;    // chance per point of a wrong semantic argmax
  /// Share of the original columns that are attenuated (at least one when
  /// attenuation > 0).
  double attenuated_fraction = 0.5;

  void validate() const;
};

void from_json(const nlohmann::json& j, CorruptionConfig& c);
void to_json(nlohmann::json& j, const CorruptionConfig& c);

struct CorruptedPredictions {
  SoftMaskSet masks;
  Heatmap heatmap;
  SemanticScores semantics;
  std::vector<int> attenuated;    // 0-based original columns that were scaled
  std::vector<int> duplicate_of;  // source column of each appended column
};

/// Applies, in order: attenuation of a random subset of columns, duplicate
/// columns (appended after the originals) and semantic argmax flips.
///
/// A duplicate of column i is the column scaled by a random factor in
/// [0.8, 0.95] whose support is shifted by boundary_noise along a random
/// direction u: instance points within boundary_noise of the instance's
/// extreme along -u leave the support, and other points within
/// boundary_noise of the instance on its +u side join it.
CorruptedPredictions corrupt_predictions(const SyntheticScene& ideal,
                                         const CorruptionConfig& cc, std::uint64_t seed);

enum class AugmentStrength { kWeak, kStrong };

struct AugmentConfig {
  double jitter_sigma = 0.01;     // meters
  double elastic_spacing = 0.2;   // meters between noise-grid nodes
  double elastic_magnitude = 0.04;  // meters, std-dev of node displacement
  double color_scale = 0.1;       // channel gain drawn from 1 +- color_scale
  double color_shift = 0.05;      // channel offset drawn from +- color_shift
};

void from_json(const nlohmann::json& j, AugmentConfig& c);

/// Weak: random x/y flips and a rotation about the vertical axis through the
/// scene's bounding-box center. Strong adds coordinate jitter, an elastic
/// distortion (trilinear noise grid) and color gain/offset. Labels and
/// superpoints are untouched.
Scene augment(const Scene& scene, AugmentStrength strength, std::uint64_t seed,
              const AugmentConfig& cfg = {});

struct PlantedAmbiguity {
  std::vector<std::int32_t> sem_pred;
  std::vector<InstancePrediction> predictions;
  std::vector<double> planted_accuracy;  // per GT instance
  std::vector<double> planted_iou;       // per GT instance (0 when no prediction)
};

/// Per GT instance, draws a corruption level c from `levels`, relabels
/// round(c * n) of its points to a wrong category and predicts the instance
/// with round(c * n) of its points removed.
PlantedAmbiguity plant_ambiguity(const SyntheticScene& ideal, std::span<const double> levels,
                                 std::uint64_t seed);

}  // namespace icr
