// Acceptance run: one PASS/FAIL line per criterion, exit code 1 on any FAIL.
// Tolerances and budgets are pinned here, not read from anywhere.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "icr/container.hpp"
#include "icr/dmg.hpp"
#include "icr/ema.hpp"
#include "icr/metrics.hpp"
#include "icr/rng.hpp"
#include "icr/supervision.hpp"
#include "icr/synthgen.hpp"
#include "icr_cli/commands.hpp"
#include "oracles.hpp"

namespace {

using namespace icr;
namespace fs = std::filesystem;

constexpr double kOtsuTolerance = 1.0 / 256.0;
constexpr double kOtsuBudget = 5.0;
constexpr double kHungarianRelTol = 1e-9;
constexpr double kHungarianBudget = 10.0;
constexpr double kLossZero = 1e-5;
constexpr double kHeatmapTol = 1e-6;
constexpr double kEmaRelTol = 1e-6;
constexpr double kEnhanceBudget = 2.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome otsu_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  int agree = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = oracle::random_scores(static_cast<std::uint64_t>(trial));
    const double got = otsu_threshold(v, 256);
    const double want = oracle::otsu_midpoint_scan(v);
    const double err = std::abs(got - want);
    worst = std::max(worst, err);
    agree += err <= kOtsuTolerance;
  }
  const double dt = seconds_since(t0);
  return {agree == 1000 && dt < kOtsuBudget,
          fmt("%.0f/1000 within 1/256, worst %.5f, %.2f s", agree, worst, dt)};
}

Outcome hungarian_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng(static_cast<std::uint64_t>(trial), "acceptance.hungarian");
    const auto ip = static_cast<std::size_t>(rng.between(1, 8));
    const auto ig = static_cast<std::size_t>(rng.between(1, 8));
    MatrixD pred(ip, 3), gt(ig, 3);
    for (auto& x : pred.data()) x = rng.uniform(0.0, 5.0);
    for (auto& x : gt.data()) x = rng.uniform(0.0, 5.0);
    const double got = match_instances(pred, gt).total_cost;
    const double want = oracle::brute_force_matching_cost(pred, gt);
    agree += std::abs(got - want) <= kHungarianRelTol * std::max(1.0, std::abs(want));
  }
  const double dt = seconds_since(t0);
  return {agree == 1000 && dt < kHungarianBudget,
          fmt("%.0f/1000 equal to brute force, %.2f s", agree, dt)};
}

double ap50_of(const HardLabeling& labels, const HardLabeling& gt) {
  const std::vector<double> t{0.5};
  return average_precision(predictions_from_labeling(labels), gt, t).AP50;
}

HardLabeling gt_of(const Scene& s) {
  auto gt = labeling_from_ids(*s.inst_gt);
  gt.inst_category = vote_categories(gt, *s.sem_gt);
  return gt;
}

Outcome pseudo_label_recovery() {
  int better = 0, exact = 0;
  CorruptionConfig cc;
  cc.duplicate_rate = 0.3;
  cc.attenuation = 0.5;
  cc.boundary_noise = 0.02;
  const EnhanceConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GenConfig g;
    g.seed = seed;
    const auto ideal = generate_scene(g);
    const auto gt = gt_of(ideal.scene);

    const auto bad = corrupt_predictions(ideal, cc, seed);
    const auto enhanced = generate_pseudo_labels(bad.masks, ideal.scene, cfg, &bad.semantics);
    const auto naive = naive_pseudo_labels(bad.masks, cfg.fg_threshold, &bad.semantics);
    better += ap50_of(enhanced.labels, gt) > ap50_of(naive, gt);

    const auto clean = generate_pseudo_labels(ideal.masks, ideal.scene, cfg, &ideal.semantics);
    exact += rand_index(clean.labels.inst_id, *ideal.scene.inst_gt) == 1.0;
  }
  return {better >= 95 && exact == 100,
          fmt("enhanced AP50 > naive on %.0f/100, Rand index 1.0 at zero corruption on %.0f/100",
              better, exact)};
}

Outcome weak_instance_preservation() {
  int ok = 0;
  double worst_recovery = 1.0;
  CorruptionConfig cc;
  cc.attenuation = 0.6;           // 0.9 * 0.4 = 0.36
  cc.attenuated_fraction = 1e-9;  // exactly one column
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GenConfig g;
    g.seed = seed;
    const auto ideal = generate_scene(g);
    const auto bad = corrupt_predictions(ideal, cc, seed);
    const int weak_id = bad.attenuated.at(0) + 1;
    float peak = 0.0f;
    for (std::size_t p = 0; p < bad.masks.points(); ++p) {
      peak = std::max(peak, bad.masks.scores(p, static_cast<std::size_t>(weak_id - 1)));
    }

    const auto naive = naive_pseudo_labels(bad.masks, 0.5);
    const auto enhanced = generate_pseudo_labels(bad.masks, ideal.scene, EnhanceConfig{});
    const auto& gt = *ideal.scene.inst_gt;
    std::size_t naive_fg = 0, size = 0;
    std::map<std::int32_t, std::size_t> overlap;
    for (std::size_t p = 0; p < gt.size(); ++p) {
      if (gt[p] != weak_id) continue;
      ++size;
      naive_fg += naive.inst_id[p] == weak_id;
      if (enhanced.labels.inst_id[p] >= 1) ++overlap[enhanced.labels.inst_id[p]];
    }
    std::size_t best = 0;
    for (const auto& [id, n] : overlap) best = std::max(best, n);
    const double recovery = static_cast<double>(best) / static_cast<double>(size);
    worst_recovery = std::min(worst_recovery, recovery);
    ok += std::abs(peak - 0.36f) < 1e-6f && naive_fg == 0 && recovery >= 0.9;
  }
  return {ok >= 95, fmt("%.0f/100 seeds, worst recovery %.3f", ok, worst_recovery)};
}

Outcome loss_zero_at_perfect() {
  int zero_ok = 0, perturb_ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    GenConfig g;
    g.seed = 1000 + seed;
    const auto ideal = generate_scene(g);
    const auto perfect = oracle::perfect_predictions(ideal, seed);
    const auto terms = oracle::loss_terms(perfect);
    bool all = true;
    for (double v : terms) {
      worst = std::max(worst, v);
      all = all && v < kLossZero;
    }
    zero_ok += all;

    // Two sampled perturbations per scene, cycling through the four terms.
    for (int k = 0; k < 2; ++k) {
      const int term = static_cast<int>((seed * 2 + static_cast<std::uint64_t>(k)) % 4);
      auto bent = perfect;
      oracle::perturb(bent, term, seed * 7 + static_cast<std::uint64_t>(k));
      perturb_ok += oracle::loss_terms(bent)[static_cast<std::size_t>(term)] >
                    terms[static_cast<std::size_t>(term)];
    }
  }
  return {zero_ok == 50 && perturb_ok == 100,
          fmt("%.0f/50 scenes below 1e-5 (worst %.2e), %.0f/100 perturbations increase their term",
              zero_ok, worst, perturb_ok)};
}

Outcome target_consistency() {
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GenConfig g;
    g.seed = 2000 + seed;
    const auto ideal = generate_scene(g);
    const auto gt = labeling_from_ids(*ideal.scene.inst_gt);
    const auto t = make_targets(ideal.scene, gt);
    double err = 0.0;
    for (std::size_t p = 0; p < t.heatmap.size(); ++p) {
      err = std::max(err, std::abs(t.heatmap[p] - static_cast<double>(ideal.heatmap.values[p])));
    }
    worst = std::max(worst, err);
    ok += err <= kHeatmapTol && oracle::near_beats_far(ideal.scene, t.heatmap);
  }
  return {ok == 100, fmt("%.0f/100 seeds, worst heatmap error %.2e", ok, worst)};
}

Outcome ema_closed_form_check() {
  double worst = 0.0;
  for (double alpha : {0.99, 0.999, 0.9999}) {
    Rng rng(static_cast<std::uint64_t>(alpha * 1e4), "acceptance.ema");
    ParamVector teacher, student;
    for (int i = 0; i < 64; ++i) {
      teacher.values.push_back(rng.normal());
      student.values.push_back(rng.normal());
    }
    ParamVector t = teacher;
    for (int k = 0; k < 100; ++k) t = ema_update(t, student, alpha);
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      const double ak = std::pow(alpha, 100.0);
      const double want = teacher.values[i] * ak + student.values[i] * (1.0 - ak);
      worst = std::max(worst, std::abs(t.values[i] - want) / std::abs(want));
    }
  }
  return {worst <= kEmaRelTol, fmt("worst relative error %.2e over 3 alphas x 64 params", worst)};
}

Outcome ap_oracle() {
  int agree = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto c = oracle::random_ap_case(static_cast<std::uint64_t>(trial));
    const auto got = average_precision(c.predictions, c.gt, map_thresholds());
    const auto want = oracle::brute_force_ap(c.predictions, c.gt);
    agree += got.mAP == want.mAP && got.AP50 == want.AP50 && got.AP25 == want.AP25;
  }
  return {agree == 500, fmt("%.0f/500 cases identical", agree)};
}

Outcome ambiguity_reproduction() {
  int ok = 0;
  const std::vector<double> levels{0.0, 0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 1.0};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    GenConfig g;
    g.seed = 3000 + seed;
    const auto ideal = generate_scene(g);
    const auto planted = plant_ambiguity(ideal, levels, seed);
    const auto gt = labeling_from_ids(*ideal.scene.inst_gt);
    const auto stats =
        ambiguity_stats(planted.sem_pred, planted.predictions, gt, *ideal.scene.sem_gt);
    bool same = stats.sem_ambiguous.size() == planted.planted_accuracy.size();
    for (std::size_t i = 0; same && i < planted.planted_accuracy.size(); ++i) {
      same = (stats.sem_ambiguous[i] != 0) == (planted.planted_accuracy[i] < 0.25) &&
             (stats.inst_ambiguous[i] != 0) == (planted.planted_iou[i] < 0.25);
    }
    ok += same;
  }
  return {ok == 100, fmt("%.0f/100 scenes flag exactly the planted instances", ok)};
}

Outcome enhance_throughput() {
  GenConfig g;
  g.seed = 7;
  g.instance_count_min = g.instance_count_max = 50;
  g.points_per_instance_min = g.points_per_instance_max = 1820;
  g.room_extent = 20.0;
  g.feature_dim = 64;
  const auto ideal = generate_scene(g);
  CorruptionConfig cc;
  cc.duplicate_rate = 0.3;
  cc.attenuation = 0.5;
  cc.boundary_noise = 0.02;
  const auto bad = corrupt_predictions(ideal, cc, 7);

  const fs::path dir = fs::temp_directory_path() / "icr_acceptance_throughput";
  fs::remove_all(dir);
  Container c;
  put_scene(c, ideal.scene);
  c.put("soft_masks", bad.masks.scores);
  c.put("sem_scores", bad.semantics.logits);
  c.save(dir / "scene");

  std::ostringstream sink;
  cli::Logger log(sink, "enhance", true);
  cli::EnhanceOptions o;
  o.scenes = dir / "scene";
  o.out = dir / "out";
  cli::CommonOptions common;
  common.jobs = 1;
  const auto t0 = std::chrono::steady_clock::now();
  cli::cmd_enhance(o, common, log);
  const double dt = seconds_since(t0);
  const auto n = static_cast<double>(ideal.scene.size());
  const auto k = static_cast<double>(bad.masks.instances());
  fs::remove_all(dir);
  return {dt < kEnhanceBudget, fmt("%.0f points x %.0f columns in %.3f s", n, k, dt)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1 otsu oracle equivalence", otsu_oracle},
      {"AC2 hungarian oracle equivalence", hungarian_oracle},
      {"AC3 pseudo-label recovery", pseudo_label_recovery},
      {"AC4 weak-instance preservation", weak_instance_preservation},
      {"AC5 loss zero at perfect predictions", loss_zero_at_perfect},
      {"AC6 target consistency", target_consistency},
      {"AC7 ema closed form", ema_closed_form_check},
      {"AC8 AP evaluator oracle", ap_oracle},
      {"AC9 ambiguity reproduction", ambiguity_reproduction},
      {"AC10 enhance throughput", enhance_throughput},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-4s %-40s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
