#include "icr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace icr {
namespace {

bool same_threshold(double a, double b) { return std::abs(a - b) < 1e-9; }

// IoU of every prediction against every GT instance of one scene.
std::vector<std::vector<double>> iou_table(const SceneInstances& s) {
  const auto counts = s.gt.point_counts();
  const auto g = static_cast<std::size_t>(s.gt.num_instances);
  std::vector<std::vector<double>> table(s.predictions.size(), std::vector<double>(g + 1, 0.0));
  std::vector<std::size_t> inter(g + 1);
  for (std::size_t i = 0; i < s.predictions.size(); ++i) {
    const auto& mask = s.predictions[i].mask;
    if (mask.size() != s.gt.size()) {
      throw ShapeError("prediction mask has " + std::to_string(mask.size()) +
                       " points, ground truth has " + std::to_string(s.gt.size()));
    }
    std::fill(inter.begin(), inter.end(), 0);
    std::size_t area = 0;
    for (std::size_t p = 0; p < mask.size(); ++p) {
      if (!mask[p]) continue;
      ++area;
      const auto id = s.gt.inst_id[p];
      if (id >= 1) ++inter[static_cast<std::size_t>(id)];
    }
    for (std::size_t j = 1; j <= g; ++j) {
      const std::size_t uni = area + counts[j] - inter[j];
      table[i][j] = uni ? static_cast<double>(inter[j]) / static_cast<double>(uni) : 0.0;
    }
  }
  return table;
}

struct RankedPrediction {
  double confidence;
  std::size_t scene;
  std::size_t index;
};

}  // namespace

std::vector<InstancePrediction> predictions_from_labeling(const HardLabeling& labeling) {
  labeling.validate();
  const auto k = static_cast<std::size_t>(labeling.num_instances);
  std::vector<InstancePrediction> out(k);
  std::vector<std::size_t> area(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    out[i].mask.assign(labeling.size(), 0);
    out[i].category = labeling.inst_category.empty() ? 1 : labeling.inst_category[i];
    out[i].confidence = labeling.inst_confidence.empty() ? 1.0 : labeling.inst_confidence[i];
  }
  for (std::size_t p = 0; p < labeling.size(); ++p) {
    const auto id = labeling.inst_id[p];
    if (id < 1) continue;
    out[static_cast<std::size_t>(id - 1)].mask[p] = 1;
    ++area[static_cast<std::size_t>(id - 1)];
  }
  std::vector<InstancePrediction> nonempty;
  for (std::size_t i = 0; i < k; ++i) {
    if (area[i] > 0) nonempty.push_back(std::move(out[i]));
  }
  return nonempty;
}

std::vector<double> map_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

double EvalResult::ap_at(double threshold) const {
  for (const auto& [t, ap] : ap_per_threshold) {
    if (same_threshold(t, threshold)) return ap;
  }
  throw InvalidArgument("AP was not evaluated at threshold " + std::to_string(threshold));
}

nlohmann::json EvalResult::to_json() const {
  nlohmann::json j;
  j["mAP"] = mAP;
  j["AP50"] = AP50;
  j["AP25"] = AP25;
  j["ap_per_threshold"] = nlohmann::json::array();
  for (const auto& [t, ap] : ap_per_threshold) {
    j["ap_per_threshold"].push_back({{"threshold", t}, {"ap", ap}});
  }
  j["per_class"] = nlohmann::json::object();
  for (const auto& [c, v] : per_class) {
    j["per_class"][std::to_string(c)] = {{"mAP", v[0]}, {"AP50", v[1]}, {"AP25", v[2]}};
  }
  return j;
}

double all_point_ap(std::span<const std::uint8_t> ranked_tp, std::size_t gt_count) {
  if (gt_count == 0) return 0.0;
  const std::size_t m = ranked_tp.size();
  std::vector<double> precision(m);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < m; ++k) {
    tp += ranked_tp[k] ? 1 : 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  for (std::size_t k = m; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  // Recall only moves at true positives, by 1/gt_count each; summing the
  // precisions first keeps a perfect ranking at exactly 1.
  double sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (ranked_tp[k]) sum += precision[k];
  }
  return sum / static_cast<double>(gt_count);
}

EvalResult average_precision(std::span<const SceneInstances> scenes,
                             std::span<const double> thresholds) {
  if (thresholds.empty()) throw InvalidArgument("average_precision: empty threshold list");
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw InvalidArgument("IoU thresholds must lie in (0, 1)");
  }
  std::vector<double> all(thresholds.begin(), thresholds.end());
  for (double t : map_thresholds()) all.push_back(t);
  all.push_back(0.25);

  std::vector<std::vector<std::vector<double>>> ious;
  std::set<std::int32_t> categories;
  for (const auto& s : scenes) {
    s.gt.validate();
    if (s.gt.inst_category.size() != static_cast<std::size_t>(s.gt.num_instances)) {
      throw InvalidArgument("average_precision: ground truth needs instance categories");
    }
    for (auto c : s.gt.inst_category) categories.insert(c);
    ious.push_back(iou_table(s));
  }

  // ap[c][t]
  std::map<std::int32_t, std::vector<double>> class_ap;
  for (const auto c : categories) {
    std::vector<RankedPrediction> ranked;
    std::size_t gt_count = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
      for (std::size_t i = 0; i < scenes[s].predictions.size(); ++i) {
        if (scenes[s].predictions[i].category == c) {
          ranked.push_back({scenes[s].predictions[i].confidence, s, i});
        }
      }
      for (auto gc : scenes[s].gt.inst_category) gt_count += gc == c;
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedPrediction& a, const RankedPrediction& b) {
                       return a.confidence > b.confidence;
                     });
    auto& row = class_ap[c];
    for (double t : all) {
      std::vector<std::vector<char>> taken(scenes.size());
      for (std::size_t s = 0; s < scenes.size(); ++s) {
        taken[s].assign(static_cast<std::size_t>(scenes[s].gt.num_instances) + 1, 0);
      }
      std::vector<std::uint8_t> tp(ranked.size(), 0);
      for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& [conf, s, i] = ranked[r];
        const auto& gt = scenes[s].gt;
        double best = -1.0;
        std::size_t best_j = 0;
        for (std::size_t j = 1; j <= static_cast<std::size_t>(gt.num_instances); ++j) {
          if (taken[s][j] || gt.inst_category[j - 1] != c) continue;
          const double iou = ious[s][i][j];
          if (iou >= t && iou > best) {
            best = iou;
            best_j = j;
          }
        }
        if (best_j) {
          taken[s][best_j] = 1;
          tp[r] = 1;
        }
      }
      row.push_back(all_point_ap(tp, gt_count));
    }
  }

  const auto mean_over_classes = [&](std::size_t ti) {
    if (class_ap.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [c, row] : class_ap) sum += row[ti];
    return sum / static_cast<double>(class_ap.size());
  };
  EvalResult out;
  const std::size_t base = thresholds.size();
  for (std::size_t ti = 0; ti < base; ++ti) {
    out.ap_per_threshold.emplace_back(thresholds[ti], mean_over_classes(ti));
  }
  for (std::size_t k = 0; k < 10; ++k) out.mAP += mean_over_classes(base + k);
  out.mAP /= 10.0;
  out.AP50 = mean_over_classes(base);
  out.AP25 = mean_over_classes(base + 10);
  for (const auto& [c, row] : class_ap) {
    double m = 0.0;
    for (std::size_t k = 0; k < 10; ++k) m += row[base + k];
    out.per_class[c] = {m / 10.0, row[base], row[base + 10]};
  }
  return out;
}

EvalResult average_precision(const std::vector<InstancePrediction>& predictions,
                             const HardLabeling& gt, std::span<const double> thresholds) {
  const SceneInstances scene{predictions, gt};
  return average_precision(std::span<const SceneInstances>(&scene, 1), thresholds);
}

double mean_iou(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt,
                int num_categories) {
  if (pred.size() != gt.size()) throw ShapeError("mean_iou: prediction and GT lengths differ");
  const auto c_count = static_cast<std::size_t>(std::max(0, num_categories));
  std::vector<std::size_t> tp(c_count + 1, 0), fp(c_count + 1, 0), fn(c_count + 1, 0);
  std::vector<char> present(c_count + 1, 0);
  std::size_t valid = 0;
  for (std::size_t p = 0; p < gt.size(); ++p) {
    const auto g = gt[p];
    if (g == kBackground) continue;
    if (g < 1 || static_cast<std::size_t>(g) > c_count) {
      throw InvalidArgument("mean_iou: GT label " + std::to_string(g) + " out of range");
    }
    ++valid;
    present[static_cast<std::size_t>(g)] = 1;
    const auto q = pred[p];
    if (q == g) {
      ++tp[static_cast<std::size_t>(g)];
      continue;
    }
    ++fn[static_cast<std::size_t>(g)];
    if (q >= 1 && static_cast<std::size_t>(q) <= c_count) ++fp[static_cast<std::size_t>(q)];
  }
  if (valid == 0) throw InvalidArgument("mean_iou: no labeled points");
  double sum = 0.0;
  std::size_t classes = 0;
  for (std::size_t c = 1; c <= c_count; ++c) {
    if (!present[c]) continue;
    sum += static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c] + fn[c]);
    ++classes;
  }
  return sum / static_cast<double>(classes);
}

nlohmann::json AmbiguityStats::to_json() const {
  return {{"mAcc", mAcc},
          {"sem_ambiguity_rate", sem_ambiguity_rate},
          {"mIoU_inst", mIoU_inst},
          {"inst_ambiguity_rate", inst_ambiguity_rate},
          {"instances", instance_accuracy.size()}};
}

AmbiguityStats ambiguity_stats(std::span<const std::int32_t> sem_pred,
                               const std::vector<InstancePrediction>& predictions,
                               const HardLabeling& gt_instances,
                               std::span<const std::int32_t> sem_gt,
                               const AmbiguityOptions& options) {
  const std::size_t n = gt_instances.size();
  if (sem_pred.size() != n || sem_gt.size() != n) {
    throw ShapeError("ambiguity_stats: inputs differ in point count");
  }
  const auto g = static_cast<std::size_t>(gt_instances.num_instances);
  if (g == 0) throw InvalidArgument("ambiguity_stats: no ground-truth instances");

  std::vector<InstancePrediction> kept;
  for (const auto& p : predictions) {
    if (p.confidence >= options.min_confidence) kept.push_back(p);
  }
  HardLabeling gt = gt_instances;
  gt.inst_category.assign(g, 1);
  const SceneInstances scene{std::move(kept), gt};
  const auto ious = iou_table(scene);

  AmbiguityStats s;
  s.instance_accuracy.assign(g, 0.0);
  s.instance_best_iou.assign(g, 0.0);
  std::vector<std::size_t> correct(g, 0), size(g, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto id = gt.inst_id[p];
    if (id < 1) continue;
    const auto i = static_cast<std::size_t>(id - 1);
    ++size[i];
    correct[i] += sem_pred[p] == sem_gt[p];
  }
  for (std::size_t i = 0; i < g; ++i) {
    s.instance_accuracy[i] = size[i] ? static_cast<double>(correct[i]) / static_cast<double>(size[i]) : 0.0;
    for (const auto& row : ious) s.instance_best_iou[i] = std::max(s.instance_best_iou[i], row[i + 1]);
  }
  s.sem_ambiguous.resize(g);
  s.inst_ambiguous.resize(g);
  for (std::size_t i = 0; i < g; ++i) {
    s.sem_ambiguous[i] = s.instance_accuracy[i] < options.threshold;
    s.inst_ambiguous[i] = s.instance_best_iou[i] < options.threshold;
    s.mAcc += s.instance_accuracy[i];
    s.mIoU_inst += s.instance_best_iou[i];
    s.sem_ambiguity_rate += s.sem_ambiguous[i];
    s.inst_ambiguity_rate += s.inst_ambiguous[i];
  }
  const double scale = 100.0 / static_cast<double>(g);
  s.mAcc *= scale;
  s.mIoU_inst *= scale;
  s.sem_ambiguity_rate *= scale;
  s.inst_ambiguity_rate *= scale;
  return s;
}

double rand_index(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
  if (a.size() != b.size()) throw ShapeError("rand_index: labelings differ in length");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<std::int32_t, std::int32_t>, double> joint;
  std::map<std::int32_t, double> ca, cb;
  for (std::size_t p = 0; p < a.size(); ++p) {
    joint[{a[p], b[p]}] += 1.0;
    ca[a[p]] += 1.0;
    cb[b[p]] += 1.0;
  }
  const auto pairs = [](double k) { return k * (k - 1.0) / 2.0; };
  double sj = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, v] : joint) sj += pairs(v);
  for (const auto& [k, v] : ca) sa += pairs(v);
  for (const auto& [k, v] : cb) sb += pairs(v);
  const double total = pairs(n);
  return (total - sa - sb + 2.0 * sj) / total;
}

}  // namespace icr
