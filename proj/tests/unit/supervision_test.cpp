#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icr/error.hpp"
#include "icr/hungarian.hpp"
#include "icr/rng.hpp"
#include "icr/supervision.hpp"
#include "icr/synthgen.hpp"
#include "oracles.hpp"

namespace {

using namespace icr;

// Instance 1 on the x axis at -1, 0, 1; instance 2 as a tight pair; one
// background point.
Scene toy() {
  Scene s;
  s.scene_id = "toy";
  s.num_categories = 2;
  s.labeled = true;
  const float xyz[6][3] = {{-1, 0, 0}, {0, 0, 0}, {1, 0, 0}, {5, 5, 0}, {5.02f, 5, 0}, {9, 9, 9}};
  s.coords = MatrixF(6, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t d = 0; d < 3; ++d) s.coords(i, d) = xyz[i][d];
  }
  s.inst_gt = std::vector<std::int32_t>{1, 1, 1, 2, 2, -1};
  s.sem_gt = std::vector<std::int32_t>{1, 1, 1, 2, 2, -1};
  return s;
}

TEST(Targets, CentroidAndScaleExamples) {
  const Scene s = toy();
  const auto t = make_targets(s, labeling_from_ids(*s.inst_gt));
  EXPECT_EQ(t.offsets(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(t.heatmap[1], 1.0);
  EXPECT_DOUBLE_EQ(t.size_coeff[0], 1.0);
  EXPECT_NEAR(t.heatmap[0], std::exp(-1.0), 1e-15);
  EXPECT_NEAR(t.heatmap[0], 0.367879, 1e-6);
  EXPECT_DOUBLE_EQ(t.size_coeff[1], kMinSizeCoeff);
  EXPECT_EQ(t.fg_count, 5u);
  EXPECT_EQ(t.heatmap[5], 0.0);
}

TEST(Targets, CentroidsMatchTwoPassMean) {
  const Scene s = toy();
  const auto t = make_targets(s, labeling_from_ids(*s.inst_gt));
  for (int inst = 1; inst <= 2; ++inst) {
    for (std::size_t d = 0; d < 3; ++d) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t p = 0; p < s.size(); ++p) {
        if ((*s.inst_gt)[p] == inst) sum += s.coords(p, d), ++n;
      }
      EXPECT_NEAR(t.centroids(static_cast<std::size_t>(inst - 1), d), sum / n, 1e-12);
    }
  }
}

TEST(Targets, HeatmapFormulaPointwise) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenConfig g;
    g.seed = seed;
    const auto ideal = generate_scene(g);
    const auto t = make_targets(ideal.scene, labeling_from_ids(*ideal.scene.inst_gt));
    for (std::size_t p = 0; p < t.points(); ++p) {
      if (!t.fg_mask[p]) continue;
      const auto i = static_cast<std::size_t>((*ideal.scene.inst_gt)[p] - 1);
      double o2 = 0.0;
      for (std::size_t d = 0; d < 3; ++d) o2 += t.offsets(p, d) * t.offsets(p, d);
      ASSERT_NEAR(t.heatmap[p], std::exp(-o2 / (t.size_coeff[i] * t.size_coeff[i])), 1e-15);
    }
  }
}

TEST(Targets, AffinityIsSameIdIncludingBackground) {
  const Scene s = toy();
  const std::vector<std::int32_t> cands{0, 2, 3, 5};
  const auto t = make_targets(s, labeling_from_ids(*s.inst_gt), cands);
  EXPECT_EQ(t.affinity(0, 1), 1.0);
  EXPECT_EQ(t.affinity(0, 2), 0.0);
  EXPECT_EQ(t.affinity(3, 3), 1.0);
}

SemanticScores logits(std::initializer_list<std::vector<float>> rows) {
  SemanticScores s{MatrixF(rows.size(), rows.begin()->size())};
  std::size_t r = 0;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) s.logits(r, c) = row[c];
    ++r;
  }
  return s;
}

TEST(SemanticLoss, UniformBinaryClosedForm) {
  const auto pred = logits({{0, 0}, {0, 0}, {0, 0}, {0, 0}});
  const std::vector<std::int32_t> gt{1, 1, 2, 2};
  // CE ln 2; per-class dice 1 - 2 * (0.5 * 2) / (0.25 * 4 + 2) = 1/3.
  EXPECT_NEAR(semantic_loss(pred, gt, 2), std::log(2.0) + 1.0 / 3.0, 1e-12);
}

TEST(SemanticLoss, NearOneHotIsZero) {
  const auto pred = logits({{30, 0}, {0, 30}, {30, 0}});
  EXPECT_LT(semantic_loss(pred, std::vector<std::int32_t>{1, 2, 1}, 2), 10 * kLossEpsilon);
}

TEST(SemanticLoss, AbsentClassDiceIsZero) {
  const auto pred = logits({{30, 0, -200}, {0, 30, -200}});
  EXPECT_LT(semantic_loss(pred, std::vector<std::int32_t>{1, 2}, 3), 10 * kLossEpsilon);
}

TEST(SemanticLoss, IgnoresBackgroundAndChecksShape) {
  const auto pred = logits({{30, 0}, {0, 0}});
  EXPECT_LT(semantic_loss(pred, std::vector<std::int32_t>{1, -1}, 2), 10 * kLossEpsilon);
  EXPECT_THROW(semantic_loss(pred, std::vector<std::int32_t>{1, -1}, 3), ShapeError);
}

TEST(LocalizationLoss, PerfectAndAntipodal) {
  const Scene s = toy();
  const auto t = make_targets(s, labeling_from_ids(*s.inst_gt));
  MatrixF o(6, 3, 0.0f), neg(6, 3, 0.0f);
  Heatmap h;
  for (std::size_t p = 0; p < 6; ++p) {
    for (std::size_t d = 0; d < 3; ++d) {
      o(p, d) = static_cast<float>(t.offsets(p, d));
      neg(p, d) = -o(p, d);
    }
    h.values.push_back(static_cast<float>(t.heatmap[p]));
  }
  EXPECT_LT(localization_loss(o, h, t), 1e-7);
  double want = 0.0;
  for (std::size_t p = 0; p < 5; ++p) {
    double n2 = 0.0;
    for (std::size_t d = 0; d < 3; ++d) n2 += t.offsets(p, d) * t.offsets(p, d);
    const double norm = std::sqrt(n2);
    want += 2.0 * norm + (norm > 0.0 ? 2.0 : 0.0);  // the centroid point has no direction
  }
  EXPECT_NEAR(localization_loss(neg, h, t), want / 5.0, 1e-6);
}

TEST(LocalizationLoss, MatchesScalarReference) {
  const Scene s = toy();
  const auto t = make_targets(s, labeling_from_ids(*s.inst_gt));
  Rng rng(4, "test.loc");
  MatrixF o(6, 3);
  Heatmap h;
  for (auto& v : o.data()) v = static_cast<float>(rng.normal());
  for (int p = 0; p < 6; ++p) h.values.push_back(static_cast<float>(rng.uniform()));
  double want = 0.0;
  for (std::size_t p = 0; p < 5; ++p) {
    const double ox = o(p, 0), oy = o(p, 1), oz = o(p, 2);
    const double tx = t.offsets(p, 0), ty = t.offsets(p, 1), tz = t.offsets(p, 2);
    const double l1 = std::sqrt((ox - tx) * (ox - tx) + (oy - ty) * (oy - ty) + (oz - tz) * (oz - tz));
    const double no = std::sqrt(ox * ox + oy * oy + oz * oz), nt = std::sqrt(tx * tx + ty * ty + tz * tz);
    const double cosine = nt < 1e-8 ? 1.0 : (ox * tx + oy * ty + oz * tz) / (no * nt);
    want += l1 + (1.0 - cosine) + std::abs(h.values[p] - t.heatmap[p]);
  }
  EXPECT_NEAR(localization_loss(o, h, t), want / 5.0, 1e-12);
}

TEST(RepresentationLoss, Examples) {
  const Scene s = toy();
  const std::vector<std::int32_t> cands{0, 1, 3};
  const auto t = make_targets(s, labeling_from_ids(*s.inst_gt), cands);
  AffinityMatrix half{MatrixF(3, 3, 0.5f)};
  EXPECT_NEAR(representation_loss(half, t), std::log(2.0), 1e-12);

  AffinityMatrix exact{MatrixF(3, 3, 0.0f)};
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) exact.values(a, b) = static_cast<float>(t.affinity(a, b));
  }
  EXPECT_LT(representation_loss(exact, t), 10 * kLossEpsilon);

  AffinityMatrix given{MatrixF(3, 3, 1.0f)};
  given.values(0, 1) = given.values(1, 0) = 0.8f;
  given.values(0, 2) = given.values(2, 0) = 0.1f;
  given.values(1, 2) = given.values(2, 1) = 0.3f;
  const double e = kLossEpsilon;
  const double hand = 3 * -std::log(1 - e) + 2 * -std::log(double(0.8f)) +
                      2 * -std::log(1 - double(0.1f)) + 2 * -std::log(1 - double(0.3f));
  EXPECT_NEAR(representation_loss(given, t), hand / 9.0, 1e-12);
}

TEST(Matching, PermutationInvertsWithZeroCost) {
  Rng rng(6, "test.match");
  MatrixD gt(5, 3), pred(5, 3);
  for (auto& v : gt.data()) v = rng.uniform(0.0, 4.0);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t d = 0; d < 3; ++d) pred(i, d) = gt(static_cast<std::size_t>(perm[i]), d);
  }
  const auto m = match_instances(pred, gt);
  EXPECT_EQ(m.pred_to_gt, perm);
  EXPECT_EQ(m.total_cost, 0.0);
}

TEST(Matching, SinglePredictionTakesNearest) {
  MatrixD pred(1, 3, 0.0), gt(3, 3, 0.0);
  gt(0, 0) = 3.0;
  gt(1, 0) = 1.0;
  gt(2, 0) = -2.0;
  const auto m = match_instances(pred, gt);
  EXPECT_EQ(m.pred_to_gt[0], 1);
  EXPECT_EQ(m.gt_to_pred, (std::vector<int>{-1, 0, -1}));
  EXPECT_DOUBLE_EQ(m.total_cost, 1.0);
}

TEST(Hungarian, SquareSixMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed, "test.hungarian");
    MatrixD cost(6, 6);
    for (auto& v : cost.data()) v = rng.uniform(0.0, 10.0);
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < 6; ++i) c += cost(i, static_cast<std::size_t>(perm[i]));
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_NEAR(solve_assignment(cost).total_cost, best, 1e-9 * best) << "seed " << seed;
  }
}

TEST(Hungarian, RectangularAndEmpty) {
  MatrixD cost(2, 3, 0.0);
  cost(0, 0) = 5, cost(0, 1) = 1, cost(0, 2) = 7;
  cost(1, 0) = 2, cost(1, 1) = 1, cost(1, 2) = 9;
  const auto a = solve_assignment(cost);
  EXPECT_EQ(a.row_to_col, (std::vector<int>{1, 0}));
  EXPECT_EQ(a.col_to_row, (std::vector<int>{1, 0, -1}));
  EXPECT_DOUBLE_EQ(a.total_cost, 3.0);
  EXPECT_DOUBLE_EQ(solve_assignment(MatrixD(0, 0)).total_cost, 0.0);
}

TEST(Hungarian, MatchingMatchesBruteForceUpToEight) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed, "test.match8");
    MatrixD pred(static_cast<std::size_t>(rng.between(1, 8)), 3);
    MatrixD gt(static_cast<std::size_t>(rng.between(1, 8)), 3);
    for (auto& v : pred.data()) v = rng.uniform(0.0, 3.0);
    for (auto& v : gt.data()) v = rng.uniform(0.0, 3.0);
    const double want = oracle::brute_force_matching_cost(pred, gt);
    ASSERT_NEAR(match_instances(pred, gt).total_cost, want, 1e-9 * std::max(1.0, want));
  }
}

TEST(ReconstructionLoss, GateAndNormalization) {
  const Scene s = toy();
  const auto t = make_targets(s, labeling_from_ids(*s.inst_gt));
  Matching identity{{0, 1}, {0, 1}, 0.0};
  SoftMaskSet exact(t.masks);
  EXPECT_LT(reconstruction_loss(exact, t, identity), 10 * kLossEpsilon);

  // Column 2 predicts only one of its two points plus the background point
  // and a point of instance 1: IoU 1/4, gated out.
  SoftMaskSet partial(t.masks);
  partial.scores(4, 1) = 0.0f;
  partial.scores(5, 1) = 1.0f;
  partial.scores(0, 1) = 1.0f;
  partial.scores(0, 0) = 0.8f;
  const double loss = reconstruction_loss(partial, t, identity);
  // Surviving summand: BCE of one 0.8 entry over N = 6, plus dice.
  const double bce = -std::log(double(0.8f)) / 6.0 + 5 * -std::log(1 - kLossEpsilon) / 6.0;
  const double dice = 1.0 - 2.0 * (2 + double(0.8f)) / ((2 + double(0.8f)) + 3);
  EXPECT_NEAR(loss, bce + dice, 1e-9);

  Matching none{{-1, -1}, {-1, -1}, 0.0};
  EXPECT_EQ(reconstruction_loss(exact, t, none), 0.0);
}

TEST(TotalLoss, Composition) {
  const auto b = total_loss({0.1, 0.2, 0.3, 0.4}, true);
  EXPECT_NEAR(b.ins, 0.9, 1e-12);
  EXPECT_NEAR(b.total, 1.0, 1e-12);
  const auto u = total_loss({std::nullopt, 0.2, 0.3, 0.4}, false);
  EXPECT_EQ(u.sem, 0.0);
  EXPECT_EQ(u.total, u.ins);
  EXPECT_THROW(total_loss({std::nullopt, 0.2, 0.3, 0.4}, true), InvalidArgument);
}

TEST(Losses, NonNegativeOnRandomPredictions) {
  GenConfig g;
  g.seed = 9;
  const auto ideal = generate_scene(g);
  auto p = oracle::perfect_predictions(ideal, 1);
  Rng rng(2, "test.random_pred");
  for (auto& v : p.sem.logits.data()) v = static_cast<float>(rng.normal(0.0, 3.0));
  for (auto& v : p.offsets.data()) v = static_cast<float>(rng.normal());
  for (auto& v : p.heat.values) v = static_cast<float>(rng.uniform());
  for (auto& v : p.affinity.values.data()) v = static_cast<float>(rng.uniform());
  for (auto& v : p.masks.scores.data()) v = static_cast<float>(rng.uniform());
  for (double v : oracle::loss_terms(p)) EXPECT_GE(v, 0.0);
}

TEST(Losses, InvariantToJointPointPermutation) {
  GenConfig g;
  g.seed = 10;
  const auto ideal = generate_scene(g);
  auto p = oracle::perfect_predictions(ideal, 3);
  Rng rng(3, "test.bend");
  for (auto& v : p.offsets.data()) v += static_cast<float>(rng.normal(0.0, 0.1));
  for (auto& v : p.masks.scores.data()) v = std::clamp(v + static_cast<float>(rng.normal(0.0, 0.2)), 0.0f, 1.0f);
  for (auto& v : p.sem.logits.data()) v += static_cast<float>(rng.normal());
  const auto before = oracle::loss_terms(p);

  const std::size_t n = p.scene.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.below(k)]);
  oracle::Perfect q = p;
  const auto move_rows = [&](const auto& src, auto& dst) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < src.cols(); ++c) dst(i, c) = src(perm[i], c);
    }
  };
  move_rows(p.scene.coords, q.scene.coords);
  move_rows(p.offsets, q.offsets);
  move_rows(p.sem.logits, q.sem.logits);
  move_rows(p.masks.scores, q.masks.scores);
  for (std::size_t i = 0; i < n; ++i) {
    (*q.scene.sem_gt)[i] = (*p.scene.sem_gt)[perm[i]];
    (*q.scene.inst_gt)[i] = (*p.scene.inst_gt)[perm[i]];
    q.heat.values[i] = p.heat.values[perm[i]];
  }
  q.scene.colors.reset();
  q.scene.superpoint_id.reset();
  // Candidates follow their points.
  std::vector<std::size_t> inverse(n);
  for (std::size_t i = 0; i < n; ++i) inverse[perm[i]] = i;
  std::vector<std::int32_t> cands;
  Rng cand_rng(3, "oracle.candidates");
  for (int k = 0; k < 16; ++k) cands.push_back(static_cast<std::int32_t>(inverse[cand_rng.below(n)]));
  q.targets = make_targets(q.scene, labeling_from_ids(*q.scene.inst_gt), cands);
  const auto after = oracle::loss_terms(q);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(after[k], before[k], 1e-9 * std::max(1.0, before[k]));
}

}  // namespace
