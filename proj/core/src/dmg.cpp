#include "icr/dmg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

namespace icr {
namespace {

void require_points(const SoftMaskSet& masks, const HardLabeling& hard) {
  if (masks.points() != hard.size()) {
    throw ShapeError("soft masks have " + std::to_string(masks.points()) +
                     " points but the labeling has " + std::to_string(hard.size()));
  }
}

}  // namespace

void EnhanceConfig::validate() const {
  if (!(threshold_cap > 0.0 && threshold_cap <= 1.0)) {
    throw InvalidArgument("threshold_cap must lie in (0, 1]");
  }
  if (otsu_bins < 2) throw InvalidArgument("otsu_bins must be at least 2");
  if (!(fg_threshold > 0.0 && fg_threshold < 1.0)) {
    throw InvalidArgument("fg_threshold must lie in (0, 1)");
  }
  if (min_points < 1) throw InvalidArgument("min_points must be positive");
}

void to_json(nlohmann::json& j, const EnhanceConfig& c) {
  j = nlohmann::json{{"threshold_cap", c.threshold_cap},
                     {"otsu_bins", c.otsu_bins},
                     {"fg_threshold", c.fg_threshold},
                     {"min_points", c.min_points},
                     {"min_confidence", c.min_confidence},
                     {"use_superpoints", c.use_superpoints},
                     {"confidence_after_refine", c.confidence_after_refine}};
}

void from_json(const nlohmann::json& j, EnhanceConfig& c) {
  c.threshold_cap = j.value("threshold_cap", c.threshold_cap);
  c.otsu_bins = j.value("otsu_bins", c.otsu_bins);
  c.fg_threshold = j.value("fg_threshold", c.fg_threshold);
  c.min_points = j.value("min_points", c.min_points);
  c.min_confidence = j.value("min_confidence", c.min_confidence);
  c.use_superpoints = j.value("use_superpoints", c.use_superpoints);
  c.confidence_after_refine = j.value("confidence_after_refine", c.confidence_after_refine);
}

nlohmann::json EnhanceReport::to_json() const {
  nlohmann::json instances = nlohmann::json::array();
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    instances.push_back({{"column", i + 1},
                         {"threshold", thresholds[i]},
                         {"rescaled", rescaled.at(i) != 0},
                         {"purity", i < purities.size() ? purities[i] : 0.0}});
  }
  return {{"instances_in", instances_in},
          {"instances_out", instances_out},
          {"superpoints_applied", superpoints_applied},
          {"foreground_initial", foreground_initial},
          {"cleared_by_reprojection", cleared_by_reprojection},
          {"relabeled_by_reprojection", relabeled_by_reprojection},
          {"changed_by_superpoints", changed_by_superpoints},
          {"removed_by_filter", removed_by_filter},
          {"columns", instances}};
}

double otsu_threshold(std::span<const float> values, int bins) {
  if (values.empty()) throw InvalidArgument("otsu_threshold: empty input");
  if (bins < 2) throw InvalidArgument("otsu_threshold: bins must be at least 2");
  const auto nb = static_cast<std::size_t>(bins);
  std::vector<double> count(nb, 0.0), sum(nb, 0.0);
  std::vector<float> lo(nb, 1.0f), hi(nb, 0.0f);
  for (float raw : values) {
    const float v = std::clamp(raw, 0.0f, 1.0f);
    const auto b =
        std::min(nb - 1, static_cast<std::size_t>(static_cast<double>(v) * bins));
    count[b] += 1.0;
    sum[b] += v;
    lo[b] = std::min(lo[b], v);
    hi[b] = std::max(hi[b], v);
  }
  const double total = static_cast<double>(values.size());
  double total_sum = 0.0;
  for (double s : sum) total_sum += s;

  // Between-class variance for the split "bins < k" vs "bins >= k".
  double best_var = 0.0;
  std::size_t best_k = 0;
  double w0 = 0.0, s0 = 0.0;
  for (std::size_t k = 1; k < nb; ++k) {
    w0 += count[k - 1];
    s0 += sum[k - 1];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double diff = s0 / w0 - (total_sum - s0) / w1;
    const double var = (w0 / total) * (w1 / total) * diff * diff;
    if (var > best_var) {
      best_var = var;
      best_k = k;
    }
  }
  if (best_k == 0) return 1.0 / bins;

  // best_k is the first boundary above the last occupied lower bin; the split
  // is unchanged up to the first occupied upper bin.
  std::size_t k_hi = best_k;
  while (count[k_hi] == 0.0) ++k_hi;
  const double gap_mid = 0.5 * (static_cast<double>(hi[best_k - 1]) + lo[k_hi]);
  const double k_mid = std::round(gap_mid * bins);
  const double k = std::clamp(k_mid, static_cast<double>(best_k), static_cast<double>(k_hi));
  return k / bins;
}

IntraResult intra_enhance(const SoftMaskSet& masks, const EnhanceConfig& cfg) {
  cfg.validate();
  IntraResult out{masks, {}, {}};
  const std::size_t n = masks.points();
  const std::size_t k = masks.instances();
  out.thresholds.resize(k);
  out.rescaled.assign(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto column = masks.scores.column(i);
    const double t = n ? otsu_threshold(column, cfg.otsu_bins) : 1.0;
    out.thresholds[i] = t;
    if (t < cfg.threshold_cap) {
      out.rescaled[i] = 1;
      const double scale = 1.0 / (2.0 * t);
      for (std::size_t p = 0; p < n; ++p) {
        const double v = static_cast<double>(column[p]) * scale;
        out.masks.scores(p, i) = static_cast<float>(std::min(1.0, v));
      }
    }
  }
  return out;
}

HardLabeling project(const SoftMaskSet& masks, double fg_threshold,
                     bool foreground_only, const HardLabeling* prior) {
  if (foreground_only && prior == nullptr) {
    throw InvalidArgument("project: foreground_only requires a prior labeling");
  }
  if (prior) require_points(masks, *prior);
  const std::size_t n = masks.points();
  const std::size_t k = masks.instances();
  HardLabeling out(std::vector<std::int32_t>(n, kBackground), static_cast<int>(k));
  for (std::size_t p = 0; p < n; ++p) {
    if (foreground_only && prior->inst_id[p] == kBackground) continue;
    const auto row = masks.scores.row(p);
    std::size_t best = 0;
    float best_score = -1.0f;
    for (std::size_t i = 0; i < k; ++i) {
      if (row[i] > best_score) {
        best_score = row[i];
        best = i;
      }
    }
    if (k > 0 && static_cast<double>(best_score) > fg_threshold) {
      out.inst_id[p] = static_cast<std::int32_t>(best) + 1;
    }
  }
  return out;
}

double purity_score(const SoftMaskSet& masks, const HardLabeling& hard,
                    int instance_id, double score_threshold) {
  require_points(masks, hard);
  if (instance_id < 1 || static_cast<std::size_t>(instance_id) > masks.instances()) {
    throw InvalidArgument("purity_score: instance " + std::to_string(instance_id) +
                          " out of range 1.." + std::to_string(masks.instances()));
  }
  const auto col = static_cast<std::size_t>(instance_id - 1);
  double agree = 0.0, confident = 0.0;
  for (std::size_t p = 0; p < masks.points(); ++p) {
    const double r = masks.scores(p, col);
    if (hard.inst_id[p] == instance_id) agree += r;
    if (r > score_threshold) confident += r;
  }
  if (confident <= 0.0) return 0.0;
  return std::min(1.0, agree / confident);
}

InterResult inter_enhance(const SoftMaskSet& masks, const HardLabeling& hard) {
  require_points(masks, hard);
  InterResult out{masks, {}};
  const std::size_t n = masks.points();
  const std::size_t k = masks.instances();
  std::vector<double> agree(k, 0.0), confident(k, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto row = masks.scores.row(p);
    for (std::size_t i = 0; i < k; ++i) {
      if (row[i] > 0.5f) confident[i] += row[i];
    }
    const auto id = hard.inst_id[p];
    if (id >= 1 && static_cast<std::size_t>(id) <= k) {
      agree[static_cast<std::size_t>(id - 1)] += row[static_cast<std::size_t>(id - 1)];
    }
  }
  out.purities.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.purities[i] = confident[i] > 0.0 ? std::min(1.0, agree[i] / confident[i]) : 0.0;
  }
  for (std::size_t p = 0; p < n; ++p) {
    auto row = out.masks.scores.row(p);
    for (std::size_t i = 0; i < k; ++i) {
      row[i] = static_cast<float>(static_cast<double>(row[i]) * out.purities[i]);
    }
  }
  return out;
}

HardLabeling superpoint_refine(const HardLabeling& hard,
                               std::span<const std::int32_t> superpoint_id) {
  if (superpoint_id.size() != hard.size()) {
    throw InvalidArgument("superpoint_refine: superpoints cover " +
                          std::to_string(superpoint_id.size()) + " of " +
                          std::to_string(hard.size()) + " points");
  }
  std::unordered_map<std::int32_t, std::size_t> dense;
  std::vector<std::size_t> group(hard.size());
  for (std::size_t p = 0; p < hard.size(); ++p) {
    if (superpoint_id[p] < 0) {
      throw InvalidArgument("superpoint_refine: point " + std::to_string(p) +
                            " has no superpoint");
    }
    group[p] = dense.try_emplace(superpoint_id[p], dense.size()).first->second;
  }
  std::vector<std::map<std::int32_t, std::size_t>> votes(dense.size());
  for (std::size_t p = 0; p < hard.size(); ++p) ++votes[group[p]][hard.inst_id[p]];
  std::vector<std::int32_t> mode(dense.size(), kBackground);
  for (std::size_t g = 0; g < votes.size(); ++g) {
    std::size_t best = 0;
    for (const auto& [id, c] : votes[g]) {  // ascending, background first
      if (c > best || (c == best && mode[g] == kBackground && id != kBackground)) {
        best = c;
        mode[g] = id;
      }
    }
  }
  HardLabeling out = hard;
  for (std::size_t p = 0; p < hard.size(); ++p) out.inst_id[p] = mode[group[p]];
  return out;
}

std::vector<float> instance_confidence(const SoftMaskSet& masks,
                                       const HardLabeling& hard) {
  require_points(masks, hard);
  const auto k = static_cast<std::size_t>(hard.num_instances);
  if (k > masks.instances()) {
    throw ShapeError("labeling has more instances than soft mask columns");
  }
  std::vector<double> sum(k, 0.0), count(k, 0.0);
  for (std::size_t p = 0; p < hard.size(); ++p) {
    const auto id = hard.inst_id[p];
    if (id < 1) continue;
    const auto i = static_cast<std::size_t>(id - 1);
    sum[i] += masks.scores(p, i);
    count[i] += 1.0;
  }
  std::vector<float> out(k, 0.0f);
  for (std::size_t i = 0; i < k; ++i) {
    if (count[i] > 0.0) out[i] = static_cast<float>(sum[i] / count[i]);
  }
  return out;
}

HardLabeling filter_instances(const HardLabeling& hard, int min_points,
                              double min_confidence) {
  hard.validate();
  const auto counts = hard.point_counts();
  const auto k = static_cast<std::size_t>(hard.num_instances);
  std::vector<std::int32_t> remap(k + 1, kBackground);
  HardLabeling out;
  int next = 0;
  for (std::size_t i = 1; i <= k; ++i) {
    const bool too_small = counts[i] < static_cast<std::size_t>(std::max(0, min_points));
    const bool unsure = !hard.inst_confidence.empty() &&
                        static_cast<double>(hard.inst_confidence[i - 1]) < min_confidence;
    if (too_small || unsure) continue;
    remap[i] = ++next;
    if (!hard.inst_category.empty()) out.inst_category.push_back(hard.inst_category[i - 1]);
    if (!hard.inst_confidence.empty()) {
      out.inst_confidence.push_back(hard.inst_confidence[i - 1]);
    }
  }
  out.num_instances = next;
  out.inst_id.resize(hard.size());
  for (std::size_t p = 0; p < hard.size(); ++p) {
    const auto id = hard.inst_id[p];
    out.inst_id[p] = id >= 1 ? remap[static_cast<std::size_t>(id)] : kBackground;
  }
  return out;
}

namespace {

void attach_categories(HardLabeling& labels, const SemanticScores* semantics) {
  if (semantics) {
    if (semantics->points() != labels.size()) {
      throw ShapeError("semantic scores and soft masks differ in point count");
    }
    labels.inst_category = vote_categories(labels, semantics->argmax());
  } else {
    labels.inst_category.assign(static_cast<std::size_t>(labels.num_instances), 1);
  }
}

std::size_t count_changed(const HardLabeling& a, const HardLabeling& b) {
  std::size_t changed = 0;
  for (std::size_t p = 0; p < a.size(); ++p) changed += a.inst_id[p] != b.inst_id[p];
  return changed;
}

}  // namespace

PseudoLabels generate_pseudo_labels(const SoftMaskSet& masks, const Scene& scene,
                                    const EnhanceConfig& cfg,
                                    const SemanticScores* semantics) {
  cfg.validate();
  if (masks.points() != scene.size()) {
    throw ShapeError("soft masks have " + std::to_string(masks.points()) +
                     " points but the scene has " + std::to_string(scene.size()));
  }
  PseudoLabels result;
  EnhanceReport& report = result.report;
  report.instances_in = masks.instances();
  if (masks.instances() == 0) {
    result.labels = HardLabeling(std::vector<std::int32_t>(scene.size(), kBackground), 0);
    attach_categories(result.labels, semantics);
    return result;
  }

  IntraResult intra = intra_enhance(masks, cfg);
  report.thresholds = intra.thresholds;
  report.rescaled = intra.rescaled;
  const HardLabeling initial = project(intra.masks, cfg.fg_threshold);
  for (auto id : initial.inst_id) report.foreground_initial += id != kBackground;

  InterResult inter = inter_enhance(intra.masks, initial);
  report.purities = inter.purities;
  HardLabeling labels = project(inter.masks, cfg.fg_threshold, true, &initial);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    if (initial.inst_id[p] == kBackground || labels.inst_id[p] == initial.inst_id[p]) continue;
    if (labels.inst_id[p] == kBackground) {
      ++report.cleared_by_reprojection;
    } else {
      ++report.relabeled_by_reprojection;
    }
  }

  std::vector<float> confidence_before;
  if (!cfg.confidence_after_refine) confidence_before = instance_confidence(inter.masks, labels);
  if (cfg.use_superpoints && scene.superpoint_id) {
    HardLabeling refined = superpoint_refine(labels, *scene.superpoint_id);
    report.changed_by_superpoints = count_changed(labels, refined);
    report.superpoints_applied = true;
    labels = std::move(refined);
  }
  labels.inst_confidence = cfg.confidence_after_refine
                               ? instance_confidence(inter.masks, labels)
                               : std::move(confidence_before);
  attach_categories(labels, semantics);

  HardLabeling filtered = filter_instances(labels, cfg.min_points, cfg.min_confidence);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    report.removed_by_filter += labels.inst_id[p] != kBackground && filtered.inst_id[p] == kBackground;
  }
  report.instances_out = static_cast<std::size_t>(filtered.num_instances);
  result.labels = std::move(filtered);
  return result;
}

HardLabeling naive_pseudo_labels(const SoftMaskSet& masks, double fg_threshold,
                                 const SemanticScores* semantics) {
  HardLabeling labels = project(masks, fg_threshold);
  labels.inst_confidence = instance_confidence(masks, labels);
  attach_categories(labels, semantics);
  return labels;
}

}  // namespace icr
