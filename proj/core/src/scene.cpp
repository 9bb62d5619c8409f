#include "icr/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

namespace icr {
namespace {

void require_rows(std::size_t n, std::size_t got, const char* name) {
  if (got != n) {
    throw ShapeError(std::string("array '") + name + "' has " +
                     std::to_string(got) + " rows, expected " +
                     std::to_string(n));
  }
}

}  // namespace

int Scene::instance_count() const {
  if (!inst_gt || inst_gt->empty()) return 0;
  return std::max(0, *std::max_element(inst_gt->begin(), inst_gt->end()));
}

void Scene::validate() const {
  const std::size_t n = coords.rows();
  if (n == 0) throw ShapeError("array 'coords' is empty");
  if (coords.cols() != 3) throw ShapeError("array 'coords' must have 3 columns");
  for (float v : coords.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("array 'coords' has non-finite entries");
  }
  if (colors) {
    require_rows(n, colors->rows(), "colors");
    if (colors->cols() != 3) throw ShapeError("array 'colors' must have 3 columns");
  }
  if (superpoint_id) {
    require_rows(n, superpoint_id->size(), "superpoint_id");
    for (auto s : *superpoint_id) {
      if (s < 0) throw InvalidArgument("array 'superpoint_id' has negative IDs");
    }
  }
  if (sem_gt) {
    require_rows(n, sem_gt->size(), "sem_gt");
    for (auto s : *sem_gt) {
      if (s != kBackground && (s < 1 || s > num_categories)) {
        throw InvalidArgument("array 'sem_gt' has label " + std::to_string(s) +
                              " outside {-1, 1.." +
                              std::to_string(num_categories) + "}");
      }
    }
  }
  if (inst_gt) {
    require_rows(n, inst_gt->size(), "inst_gt");
    const int count = instance_count();
    std::vector<char> seen(static_cast<std::size_t>(count) + 1, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto id = (*inst_gt)[p];
      if (id == kBackground) continue;
      if (id < 1) {
        throw InvalidArgument("array 'inst_gt' has invalid ID " + std::to_string(id));
      }
      seen[static_cast<std::size_t>(id)] = 1;
      if (sem_gt && (*sem_gt)[p] < 1) {
        throw InvalidArgument(
            "array 'sem_gt' is unlabeled at a point with an instance in 'inst_gt'");
      }
    }
    for (int id = 1; id <= count; ++id) {
      if (!seen[static_cast<std::size_t>(id)]) {
        throw InvalidArgument("array 'inst_gt' IDs are not contiguous: ID " +
                              std::to_string(id) + " is missing");
      }
    }
  }
}

void SoftMaskSet::validate() const {
  for (float v : scores.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw InvalidArgument("array 'soft_masks' has entries outside [0,1]");
    }
  }
}

std::vector<std::size_t> HardLabeling::point_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_instances) + 1, 0);
  for (auto id : inst_id) {
    if (id >= 1 && id <= num_instances) ++counts[static_cast<std::size_t>(id)];
  }
  return counts;
}

void HardLabeling::validate() const {
  for (auto id : inst_id) {
    if (id != kBackground && (id < 1 || id > num_instances)) {
      throw InvalidArgument("instance ID " + std::to_string(id) +
                            " outside {-1, 1.." + std::to_string(num_instances) + "}");
    }
  }
  const auto k = static_cast<std::size_t>(num_instances);
  if (!inst_category.empty() && inst_category.size() != k) {
    throw ShapeError("inst_category length does not match instance count");
  }
  if (!inst_confidence.empty() && inst_confidence.size() != k) {
    throw ShapeError("inst_confidence length does not match instance count");
  }
}

HardLabeling labeling_from_ids(std::vector<std::int32_t> ids) {
  int count = 0;
  for (auto id : ids) count = std::max(count, static_cast<int>(id));
  HardLabeling out(std::move(ids), count);
  out.validate();
  return out;
}

MatrixD SemanticScores::probs() const {
  MatrixD out(logits.rows(), logits.cols());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    const auto row = logits.row(n);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      out(n, c) = std::exp(static_cast<double>(row[c]) - mx);
      sum += out(n, c);
    }
    for (std::size_t c = 0; c < row.size(); ++c) out(n, c) /= sum;
  }
  return out;
}

std::vector<std::int32_t> SemanticScores::argmax() const {
  std::vector<std::int32_t> out(logits.rows(), kBackground);
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    const auto row = logits.row(n);
    if (row.empty()) continue;
    const auto it = std::max_element(row.begin(), row.end());
    out[n] = static_cast<std::int32_t>(it - row.begin()) + 1;
  }
  return out;
}

void SemanticScores::validate() const {
  for (float v : logits.data()) {
    if (!std::isfinite(v)) throw InvalidArgument("array 'sem_scores' has non-finite entries");
  }
}

std::vector<std::int32_t> vote_categories(
    const HardLabeling& labeling, std::span<const std::int32_t> categories) {
  if (categories.size() != labeling.size()) {
    throw ShapeError("category vector and labeling differ in length");
  }
  const auto k = static_cast<std::size_t>(labeling.num_instances);
  int max_cat = 0;
  for (auto c : categories) max_cat = std::max(max_cat, static_cast<int>(c));
  std::vector<std::vector<std::size_t>> votes(
      k + 1, std::vector<std::size_t>(static_cast<std::size_t>(max_cat) + 1, 0));
  for (std::size_t n = 0; n < labeling.size(); ++n) {
    const auto id = labeling.inst_id[n];
    if (id < 1 || categories[n] < 1) continue;
    ++votes[static_cast<std::size_t>(id)][static_cast<std::size_t>(categories[n])];
  }
  std::vector<std::int32_t> out(k, 1);
  for (std::size_t i = 1; i <= k; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes[i].size(); ++c) {
      if (votes[i][c] > best) {
        best = votes[i][c];
        out[i - 1] = static_cast<std::int32_t>(c);
      }
    }
  }
  return out;
}

}  // namespace icr
