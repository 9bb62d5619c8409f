#include "icr/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icr/hungarian.hpp"

namespace icr {
namespace {

double clamp_prob(double p) { return std::clamp(p, kLossEpsilon, 1.0 - kLossEpsilon); }

double bce(double p, double target) {
  const double q = clamp_prob(p);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

}  // namespace

SupervisionTargets make_targets(const Scene& scene, const HardLabeling& labeling,
                                std::span<const std::int32_t> candidates) {
  const std::size_t n = scene.size();
  if (labeling.size() != n) {
    throw ShapeError("labeling covers " + std::to_string(labeling.size()) + " of " +
                     std::to_string(n) + " points");
  }
  labeling.validate();
  const auto k = static_cast<std::size_t>(labeling.num_instances);
  SupervisionTargets t;
  t.offsets = MatrixD(n, 3, 0.0);
  t.heatmap.assign(n, 0.0);
  t.centroids = MatrixD(k, 3, 0.0);
  t.size_coeff.assign(k, kMinSizeCoeff);
  t.masks = MatrixF(n, k, 0.0f);
  t.fg_mask.assign(n, 0);

  std::vector<std::size_t> count(k, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto id = labeling.inst_id[p];
    if (id < 1) continue;
    const auto i = static_cast<std::size_t>(id - 1);
    ++count[i];
    for (std::size_t d = 0; d < 3; ++d) t.centroids(i, d) += scene.coords(p, d);
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (count[i] == 0) {
      throw InvalidArgument("instance " + std::to_string(i + 1) + " has no points");
    }
    for (std::size_t d = 0; d < 3; ++d) t.centroids(i, d) /= static_cast<double>(count[i]);
  }
  for (std::size_t p = 0; p < n; ++p) {
    const auto id = labeling.inst_id[p];
    if (id < 1) continue;
    const auto i = static_cast<std::size_t>(id - 1);
    double d2 = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      t.offsets(p, d) = t.centroids(i, d) - scene.coords(p, d);
      d2 += t.offsets(p, d) * t.offsets(p, d);
    }
    t.size_coeff[i] = std::max(t.size_coeff[i], std::sqrt(d2));
    t.fg_mask[p] = 1;
    t.masks(p, i) = 1.0f;
    ++t.fg_count;
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (!t.fg_mask[p]) continue;
    const auto i = static_cast<std::size_t>(labeling.inst_id[p] - 1);
    double d2 = 0.0;
    for (std::size_t d = 0; d < 3; ++d) d2 += t.offsets(p, d) * t.offsets(p, d);
    t.heatmap[p] = std::exp(-d2 / (t.size_coeff[i] * t.size_coeff[i]));
  }

  const std::size_t q = candidates.size();
  t.affinity = MatrixD(q, q, 0.0);
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = 0; b < q; ++b) {
      const auto pa = static_cast<std::size_t>(candidates[a]);
      const auto pb = static_cast<std::size_t>(candidates[b]);
      if (pa >= n || pb >= n) throw InvalidArgument("candidate index out of range");
      t.affinity(a, b) = labeling.inst_id[pa] == labeling.inst_id[pb] ? 1.0 : 0.0;
    }
  }
  return t;
}

double semantic_loss(const SemanticScores& pred, std::span<const std::int32_t> sem_gt,
                     int num_categories) {
  if (pred.points() != sem_gt.size()) {
    throw ShapeError("semantic scores and labels differ in point count");
  }
  if (static_cast<int>(pred.categories()) != num_categories) {
    throw ShapeError("semantic scores have " + std::to_string(pred.categories()) +
                     " classes, expected " + std::to_string(num_categories));
  }
  const MatrixD probs = pred.probs();
  const auto c_count = static_cast<std::size_t>(num_categories);
  std::vector<double> inter(c_count, 0.0), pred_sq(c_count, 0.0), gt_sq(c_count, 0.0);
  double ce = 0.0;
  std::size_t valid = 0;
  for (std::size_t p = 0; p < sem_gt.size(); ++p) {
    const auto label = sem_gt[p];
    if (label < 1) continue;
    if (label > num_categories) throw InvalidArgument("semantic label exceeds category count");
    const auto g = static_cast<std::size_t>(label - 1);
    ++valid;
    ce -= std::log(clamp_prob(probs(p, g)));
    for (std::size_t c = 0; c < c_count; ++c) pred_sq[c] += probs(p, c) * probs(p, c);
    inter[g] += probs(p, g);
    gt_sq[g] += 1.0;
  }
  if (valid == 0) throw InvalidArgument("semantic_loss: no labeled points");
  double dice = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) {
    const double denom = pred_sq[c] + gt_sq[c];
    if (denom < kLossEpsilon) continue;
    dice += 1.0 - 2.0 * inter[c] / denom;
  }
  return ce / static_cast<double>(valid) + dice / static_cast<double>(c_count);
}

double localization_loss(const MatrixF& offsets, const Heatmap& heat,
                         const SupervisionTargets& targets) {
  const std::size_t n = targets.points();
  if (offsets.rows() != n || offsets.cols() != 3 || heat.size() != n) {
    throw ShapeError("localization_loss: predictions do not match the targets");
  }
  if (targets.fg_count == 0) throw InvalidArgument("localization_loss: no foreground points");
  double sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    if (!targets.fg_mask[p]) continue;
    double diff2 = 0.0, dot = 0.0, o2 = 0.0, t2 = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      const double o = offsets(p, d);
      const double t = targets.offsets(p, d);
      diff2 += (o - t) * (o - t);
      dot += o * t;
      o2 += o * o;
      t2 += t * t;
    }
    const double no = std::sqrt(o2), nt = std::sqrt(t2);
    const double direction = (no < 1e-8 || nt < 1e-8) ? 0.0 : 1.0 - dot / (no * nt);
    sum += std::sqrt(diff2) + direction +
           std::abs(static_cast<double>(heat.values[p]) - targets.heatmap[p]);
  }
  return sum / static_cast<double>(targets.fg_count);
}

double representation_loss(const AffinityMatrix& affinity, const SupervisionTargets& targets) {
  const std::size_t q = targets.affinity.rows();
  if (affinity.values.rows() != q || affinity.values.cols() != q) {
    throw ShapeError("representation_loss: affinity is " +
                     std::to_string(affinity.values.rows()) + "x" +
                     std::to_string(affinity.values.cols()) + ", targets are " +
                     std::to_string(q) + "x" + std::to_string(q));
  }
  if (q == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = 0; b < q; ++b) sum += bce(affinity.values(a, b), targets.affinity(a, b));
  }
  return sum / static_cast<double>(q * q);
}

Matching match_instances(const MatrixD& pred_centroids, const MatrixD& gt_centroids) {
  const std::size_t ip = pred_centroids.rows();
  const std::size_t ig = gt_centroids.rows();
  MatrixD cost(ip, ig, 0.0);
  for (std::size_t a = 0; a < ip; ++a) {
    for (std::size_t b = 0; b < ig; ++b) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < 3; ++d) {
        const double diff = pred_centroids(a, d) - gt_centroids(b, d);
        d2 += diff * diff;
      }
      cost(a, b) = std::sqrt(d2);
    }
  }
  const Assignment a = solve_assignment(cost);
  return Matching{a.row_to_col, a.col_to_row, a.total_cost};
}

double reconstruction_loss(const SoftMaskSet& masks, const SupervisionTargets& targets,
                           const Matching& matching) {
  const std::size_t n = targets.points();
  if (masks.points() != n) throw ShapeError("reconstruction_loss: point counts differ");
  if (matching.pred_to_gt.size() != masks.instances()) {
    throw ShapeError("reconstruction_loss: matching does not cover the predicted masks");
  }
  double sum = 0.0;
  std::size_t passed = 0;
  for (std::size_t i = 0; i < masks.instances(); ++i) {
    const int g = matching.pred_to_gt[i];
    if (g < 0) continue;
    if (static_cast<std::size_t>(g) >= targets.instances()) {
      throw InvalidArgument("reconstruction_loss: matched GT index out of range");
    }
    const auto gi = static_cast<std::size_t>(g);
    std::size_t inter = 0, uni = 0;
    double bce_sum = 0.0, dot = 0.0, l1_pred = 0.0, l1_gt = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double r = masks.scores(p, i);
      const double t = targets.masks(p, gi);
      const bool pb = r > 0.5;
      const bool tb = t > 0.5;
      inter += pb && tb;
      uni += pb || tb;
      bce_sum += bce(r, t);
      dot += r * t;
      l1_pred += r;
      l1_gt += t;
    }
    const double iou = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
    if (!(iou > 0.5)) continue;
    const double denom = l1_pred + l1_gt;
    const double dice = denom > 0.0 ? 1.0 - 2.0 * dot / denom : 0.0;
    sum += bce_sum / static_cast<double>(n) + dice;
    ++passed;
  }
  return passed ? sum / static_cast<double>(passed) : 0.0;
}

nlohmann::json LossBreakdown::to_json() const {
  return {{"sem", sem}, {"loc", loc}, {"rep", rep}, {"rec", rec}, {"ins", ins}, {"total", total}};
}

LossBreakdown total_loss(const LossComponents& parts, bool labeled) {
  const auto need = [](const std::optional<double>& v, const char* name) {
    if (!v) throw InvalidArgument(std::string("total_loss: missing component '") + name + "'");
    return *v;
  };
  LossBreakdown out;
  out.loc = need(parts.loc, "loc");
  out.rep = need(parts.rep, "rep");
  out.rec = need(parts.rec, "rec");
  out.ins = out.loc + out.rep + out.rec;
  if (labeled) {
    out.sem = need(parts.sem, "sem");
    out.total = out.sem + out.ins;
  } else {
    out.total = out.ins;
  }
  return out;
}

}  // namespace icr
