#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "icr/container.hpp"
#include "icr/scene.hpp"

namespace icr {

/// Per-point centroid proximity score in [0,1].
struct Heatmap {
  std::vector<float> values;

  std::size_t size() const noexcept { return values.size(); }
  void validate() const;

  friend bool operator==(const Heatmap&, const Heatmap&) = default;
};

/// Candidate centroids, ordered by non-increasing heat.
struct CandidateSet {
  std::vector<std::int32_t> point_index;
  MatrixF features;  // Q x D
  std::vector<float> heat;

  std::size_t size() const noexcept { return point_index.size(); }
};

/// Symmetric Q x Q similarity between candidates, unit diagonal.
struct AffinityMatrix {
  MatrixF values;

  std::size_t size() const noexcept { return values.rows(); }
  /// Throws InvalidArgument when asymmetric beyond `tolerance`.
  void validate(double tolerance = 1e-6) const;
};

/// One linear kernel per instance over [feature, coord - centroid].
struct KernelSet {
  MatrixF weights;          // I x (D + 3)
  std::vector<float> bias;  // I
  MatrixF centroid_coords;  // I x 3
  std::vector<float> centroid_heat;  // I

  std::size_t size() const noexcept { return bias.size(); }
  std::size_t feature_dim() const noexcept {
    return weights.cols() >= 3 ? weights.cols() - 3 : 0;
  }
  void validate() const;

  friend bool operator==(const KernelSet&, const KernelSet&) = default;
};

/// Stores a kernel set as the arrays kernel_w, kernel_b, kernel_c, kernel_h.
void put_kernels(Container& c, const KernelSet& k);
KernelSet kernels_from_container(const Container& c);

struct LocalizeConfig {
  double suppression_radius = 0.3;  // meters
  double heat_floor = 0.1;
  int max_candidates = 128;
  /// Average features over the suppression sphere instead of taking the
  /// candidate point's own feature.
  bool pool_features = false;

  void validate() const;
};

void from_json(const nlohmann::json& j, LocalizeConfig& c);
void to_json(nlohmann::json& j, const LocalizeConfig& c);

/// Radius-suppression peak picking: repeatedly emit the unsuppressed point
/// with the highest heat (>= heat_floor; equal heats -> smaller index) and
/// suppress every point within suppression_radius of it.
///
/// `features` may have zero columns.
CandidateSet find_candidates(const Heatmap& heat, const MatrixF& coords,
                             const MatrixF& features, const LocalizeConfig& cfg);

/// Candidate affinity from feature cosine similarity, clamped at 0.
AffinityMatrix feature_affinity(const CandidateSet& candidates);

struct AggregateConfig {
  double merge_threshold = 0.5;
  /// Logit slope of the feature-matching kernel head (see aggregate_candidates).
  double kernel_gain = 8.0;
};

struct Aggregation {
  KernelSet kernels;
  std::vector<std::int32_t> group_of;  // candidate -> kernel index (0-based)
};

/// Greedy mean-linkage agglomeration.
///
/// While some pair of groups has mean cross affinity above merge_threshold,
/// the best pair merges (ties toward the lexicographically smallest pair).
/// Each group's feature g is the mean of its members' features, and its
/// centroid is its hottest member. The kernel scores a point by how far its
/// feature projects onto g: weights = gain * g / |g|^2 on the feature
/// channels, zero on the coordinate channels, bias = -gain / 2. Groups are
/// ordered by their first (hottest) candidate.
Aggregation aggregate_candidates(const CandidateSet& candidates,
                                 const AffinityMatrix& affinity,
                                 const MatrixF& coords,
                                 const AggregateConfig& cfg = {});

/// R(n,i) = sigmoid(w_i . [f_n, x_n - c_i] + b_i).
SoftMaskSet reconstruct_masks(const KernelSet& kernels, const MatrixF& features,
                              const MatrixF& coords);

}  // namespace icr
