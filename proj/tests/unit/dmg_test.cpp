#include <gtest/gtest.h>

#include <cmath>

#include "icr/dmg.hpp"
#include "icr/error.hpp"
#include "icr/metrics.hpp"
#include "icr/rng.hpp"
#include "icr/synthgen.hpp"
#include "oracles.hpp"

namespace {

using namespace icr;

SoftMaskSet columns(std::initializer_list<std::vector<float>> cols) {
  const std::size_t n = cols.begin()->size();
  SoftMaskSet m(n, cols.size());
  std::size_t i = 0;
  for (const auto& c : cols) {
    for (std::size_t p = 0; p < n; ++p) m.scores(p, i) = c[p];
    ++i;
  }
  return m;
}

std::vector<float> column(const SoftMaskSet& m, std::size_t i) {
  std::vector<float> v(m.points());
  for (std::size_t p = 0; p < m.points(); ++p) v[p] = m.scores(p, i);
  return v;
}

TEST(Otsu, TwoClustersSplitNearHalf) {
  const std::vector<float> v{0.1f, 0.1f, 0.9f, 0.9f};
  EXPECT_NEAR(otsu_threshold(v), 0.5, 1.0 / 256);
}

TEST(Otsu, ExactMidpointWhenGapSpansBins) {
  const std::vector<float> v{0.1f, 0.1f, 0.4f, 0.4f};
  EXPECT_DOUBLE_EQ(otsu_threshold(v), 0.25);
}

TEST(Otsu, ConstantInputGivesSmallestBoundary) {
  const std::vector<float> v(10, 0.4f);
  EXPECT_DOUBLE_EQ(otsu_threshold(v), 1.0 / 256);
}

TEST(Otsu, MatchesMidpointScanOnRandomVectors) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto v = oracle::random_scores(10000 + s);
    EXPECT_NEAR(otsu_threshold(v), oracle::otsu_midpoint_scan(v), 1.0 / 256) << "seed " << s;
  }
}

TEST(Otsu, RejectsBadInput) {
  EXPECT_THROW(otsu_threshold(std::vector<float>{}), InvalidArgument);
  EXPECT_THROW(otsu_threshold(std::vector<float>{0.5f}, 1), InvalidArgument);
}

TEST(IntraEnhance, RescalesByTwiceThreshold) {
  const auto r = intra_enhance(columns({{0.1f, 0.1f, 0.4f, 0.4f}}), EnhanceConfig{});
  EXPECT_DOUBLE_EQ(r.thresholds[0], 0.25);
  EXPECT_EQ(r.rescaled[0], 1);
  const auto c = column(r.masks, 0);
  EXPECT_FLOAT_EQ(c[0], 0.2f);
  EXPECT_FLOAT_EQ(c[2], 0.8f);
}

TEST(IntraEnhance, HighThresholdColumnsUntouched) {
  const auto in = columns({{0.3f, 0.3f, 0.9f}, {0.6f, 0.6f, 0.95f}});
  const auto r = intra_enhance(in, EnhanceConfig{});
  EXPECT_GE(r.thresholds[0], 0.5);
  EXPECT_EQ(r.masks, in);
  EXPECT_EQ(r.rescaled, (std::vector<std::uint8_t>{0, 0}));
}

TEST(IntraEnhance, ClampsAtOne) {
  const auto r = intra_enhance(columns({{0.05f, 0.05f, 0.05f, 0.3f, 0.45f}}), EnhanceConfig{});
  ASSERT_EQ(r.rescaled[0], 1);
  for (float v : column(r.masks, 0)) EXPECT_LE(v, 1.0f);
  const double t = r.thresholds[0];
  EXPECT_FLOAT_EQ(r.masks.scores(0, 0), static_cast<float>(0.05 / (2 * t)));
}

TEST(IntraEnhance, PreservesWithinColumnRanking) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto v = oracle::random_scores(s);
    SoftMaskSet m(v.size(), 1);
    for (std::size_t p = 0; p < v.size(); ++p) m.scores(p, 0) = v[p];
    const auto out = column(intra_enhance(m, EnhanceConfig{}).masks, 0);
    for (std::size_t a = 0; a < v.size(); ++a) {
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (v[a] < v[b]) ASSERT_LE(out[a], out[b]);
      }
    }
  }
}

TEST(Project, ArgmaxThresholdAndTies) {
  const auto m = columns({{0.9f, 0.3f, 0.7f}, {0.2f, 0.4f, 0.7f}});
  const auto h = project(m);
  EXPECT_EQ(h.inst_id, (std::vector<std::int32_t>{1, -1, 1}));
  EXPECT_EQ(h.num_instances, 2);
}

TEST(Project, ExactlyHalfIsBackground) {
  EXPECT_EQ(project(columns({{0.5f}})).inst_id[0], kBackground);
}

TEST(Project, ForegroundOnlyNeedsPrior) {
  EXPECT_THROW(project(columns({{0.9f}}), 0.5, true, nullptr), InvalidArgument);
}

TEST(Purity, Examples) {
  const auto m = columns({{0.8f, 0.6f, 0.9f}});
  EXPECT_NEAR(purity_score(m, HardLabeling({1, 2, 1}, 2), 1), 1.7 / 2.3, 1e-6);
  EXPECT_DOUBLE_EQ(purity_score(m, HardLabeling({1, 1, 1}, 1), 1), 1.0);
  EXPECT_DOUBLE_EQ(purity_score(m, HardLabeling({2, 2, 2}, 2), 1), 0.0);
  EXPECT_DOUBLE_EQ(purity_score(columns({{0.1f, 0.2f}}), HardLabeling({1, 1}, 1), 1), 0.0);
}

TEST(Purity, BoundedAfterProjection) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    GenConfig g;
    g.seed = s;
    const auto ideal = generate_scene(g);
    CorruptionConfig cc;
    cc.duplicate_rate = 0.5;
    cc.attenuation = 0.3;
    cc.boundary_noise = 0.05;
    const auto bad = corrupt_predictions(ideal, cc, s);
    const auto hard = project(bad.masks);
    for (std::size_t i = 1; i <= bad.masks.instances(); ++i) {
      const double p = purity_score(bad.masks, hard, static_cast<int>(i));
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(InterEnhance, PureLabelingUnchangedShadowedZeroed) {
  const auto m = columns({{0.9f, 0.9f, 0.1f}, {0.8f, 0.8f, 0.1f}});
  const auto hard = project(m);
  const auto r = inter_enhance(m, hard);
  EXPECT_EQ(column(r.masks, 0), column(m, 0));
  for (float v : column(r.masks, 1)) EXPECT_EQ(v, 0.0f);
}

// Two columns contest points 6 and 7; the contester (column 2) mostly
// overlaps column 3, so its purity collapses and the points return to 1.
TEST(InterEnhance, ContestedPointsGoToWinnerTrace) {
  std::vector<float> a(12, 0.05f), b(12, 0.05f), d(12, 0.05f);
  for (int p = 0; p < 6; ++p) a[p] = 0.9f;
  a[6] = a[7] = 0.85f;
  b[6] = b[7] = 0.9f;
  for (int p = 8; p < 12; ++p) b[p] = 0.8f, d[p] = 0.9f;
  const auto m = columns({a, b, d});
  const auto initial = project(m);
  EXPECT_EQ(initial.inst_id, (std::vector<std::int32_t>{1, 1, 1, 1, 1, 1, 2, 2, 3, 3, 3, 3}));
  const auto inter = inter_enhance(m, initial);
  EXPECT_NEAR(inter.purities[0], 5.4 / 7.1, 1e-6);
  EXPECT_NEAR(inter.purities[1], 1.8 / 5.0, 1e-6);
  EXPECT_NEAR(inter.purities[2], 1.0, 1e-6);
  EXPECT_NEAR(inter.masks.scores(6, 0), 0.85 * 5.4 / 7.1, 1e-6);
  EXPECT_NEAR(inter.masks.scores(6, 1), 0.9 * 0.36, 1e-6);
  const auto final_labels = project(inter.masks, 0.5, true, &initial);
  EXPECT_EQ(final_labels.inst_id, (std::vector<std::int32_t>{1, 1, 1, 1, 1, 1, 1, 1, 3, 3, 3, 3}));
}

TEST(InterEnhance, NeverIncreasesScoresAndSecondPassKeepsPurity) {
  CorruptionConfig cc;
  cc.duplicate_rate = 0.3;
  cc.attenuation = 0.5;
  cc.boundary_noise = 0.02;
  for (std::uint64_t s = 0; s < 100; ++s) {
    GenConfig g;
    g.seed = s;
    const auto ideal = generate_scene(g);
    const auto bad = corrupt_predictions(ideal, cc, s);
    const auto intra = intra_enhance(bad.masks, EnhanceConfig{});
    const auto h1 = project(intra.masks);
    const auto first = inter_enhance(intra.masks, h1);
    for (std::size_t k = 0; k < first.masks.scores.size(); ++k) {
      ASSERT_LE(first.masks.scores.data()[k], intra.masks.scores.data()[k]);
    }
    const auto h2 = project(first.masks, 0.5, true, &h1);
    const auto second = inter_enhance(first.masks, h2);
    for (std::size_t i = 0; i < first.purities.size(); ++i) {
      // A column scaled entirely below 0.5 has an empty purity denominator
      // and scores 0 by definition; the property covers the others.
      bool above = false;
      for (std::size_t p = 0; p < first.masks.points() && !above; ++p) {
        above = first.masks.scores(p, i) > 0.5f;
      }
      if (!above) continue;
      EXPECT_GE(second.purities[i], first.purities[i] - 1e-9) << "seed " << s << " column " << i;
    }
  }
}

TEST(SuperpointRefine, ModesAndTies) {
  const HardLabeling h({1, 1, 2, -1, -1, 3, 2, 5}, 5);
  const std::vector<std::int32_t> sp{0, 0, 0, 1, 1, 1, 2, 2};
  EXPECT_EQ(superpoint_refine(h, sp).inst_id, (std::vector<std::int32_t>{1, 1, 1, -1, -1, -1, 2, 2}));
}

TEST(SuperpointRefine, BackgroundTieGoesToInstance) {
  const HardLabeling h({-1, 4}, 4);
  EXPECT_EQ(superpoint_refine(h, std::vector<std::int32_t>{0, 0}).inst_id,
            (std::vector<std::int32_t>{4, 4}));
}

TEST(SuperpointRefine, Idempotent) {
  Rng rng(3, "test.sp");
  for (int t = 0; t < 50; ++t) {
    std::vector<std::int32_t> ids(100), sp(100);
    for (auto& x : ids) {
      x = static_cast<std::int32_t>(rng.between(0, 4));
      if (x == 0) x = kBackground;
    }
    for (auto& x : sp) x = static_cast<std::int32_t>(rng.below(15));
    const auto once = superpoint_refine(HardLabeling(ids, 4), sp);
    EXPECT_EQ(superpoint_refine(once, sp), once);
  }
}

HardLabeling sized(std::initializer_list<int> sizes, std::vector<float> conf) {
  std::vector<std::int32_t> ids;
  int id = 1;
  for (int s : sizes) {
    ids.insert(ids.end(), static_cast<std::size_t>(s), id);
    ++id;
  }
  HardLabeling h(ids, id - 1);
  h.inst_confidence = std::move(conf);
  h.inst_category.assign(static_cast<std::size_t>(id - 1), 1);
  return h;
}

TEST(Filter, BoundariesAreStrict) {
  EXPECT_EQ(filter_instances(sized({99}, {0.9f}), 100, 0.5).num_instances, 0);
  EXPECT_EQ(filter_instances(sized({100}, {0.5f}), 100, 0.5).num_instances, 1);
}

TEST(Filter, BothRulesThenRenumber) {
  const auto out = filter_instances(sized({50, 150, 300}, {0.9f, 0.4f, 0.9f}), 100, 0.5);
  EXPECT_EQ(out.num_instances, 1);
  EXPECT_EQ(out.point_counts(), (std::vector<std::size_t>{0, 300}));
  EXPECT_EQ(out.inst_id[0], kBackground);
  EXPECT_EQ(out.inst_id[499], 1);
}

TEST(Filter, NoSmallSurvivors) {
  Rng rng(8, "test.filter");
  for (int t = 0; t < 30; ++t) {
    std::vector<std::int32_t> ids(2000);
    for (auto& x : ids) x = static_cast<std::int32_t>(rng.between(1, 30));
    const auto out = filter_instances(HardLabeling(ids, 30), 70, 0.0);
    const auto counts = out.point_counts();
    for (std::size_t i = 1; i < counts.size(); ++i) EXPECT_GE(counts[i], 70u);
  }
}

TEST(Pipeline, IdealMasksRecoverGtOnAllSeeds) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    GenConfig g;
    g.seed = s;
    g.inside_score = 0.95;
    const auto ideal = generate_scene(g);
    const auto r = generate_pseudo_labels(ideal.masks, ideal.scene, EnhanceConfig{}, &ideal.semantics);
    EXPECT_EQ(rand_index(r.labels.inst_id, *ideal.scene.inst_gt), 1.0) << "seed " << s;
  }
}

TEST(Pipeline, EmptyMaskSetGivesBackground) {
  GenConfig g;
  const auto ideal = generate_scene(g);
  const auto r = generate_pseudo_labels(SoftMaskSet(ideal.scene.size(), 0), ideal.scene, EnhanceConfig{});
  EXPECT_EQ(r.labels.num_instances, 0);
  for (auto id : r.labels.inst_id) EXPECT_EQ(id, kBackground);
  EXPECT_TRUE(r.report.thresholds.empty());
}

TEST(Pipeline, SuperpointSwitch) {
  GenConfig g;
  g.seed = 4;
  const auto ideal = generate_scene(g);
  EnhanceConfig cfg;
  EXPECT_TRUE(generate_pseudo_labels(ideal.masks, ideal.scene, cfg).report.superpoints_applied);
  cfg.use_superpoints = false;
  EXPECT_FALSE(generate_pseudo_labels(ideal.masks, ideal.scene, cfg).report.superpoints_applied);
}

TEST(Pipeline, CategoriesFromSemanticVote) {
  GenConfig g;
  g.seed = 5;
  const auto ideal = generate_scene(g);
  const auto r = generate_pseudo_labels(ideal.masks, ideal.scene, EnhanceConfig{}, &ideal.semantics);
  for (std::size_t p = 0; p < ideal.scene.size(); ++p) {
    const auto id = r.labels.inst_id[p];
    if (id >= 1) {
      EXPECT_EQ(r.labels.inst_category[static_cast<std::size_t>(id - 1)], (*ideal.scene.sem_gt)[p]);
    }
  }
}

TEST(Pipeline, ConfigJsonRoundTrip) {
  EnhanceConfig c;
  c.min_points = 7;
  c.use_superpoints = false;
  nlohmann::json j = c;
  const auto back = j.get<EnhanceConfig>();
  EXPECT_EQ(back.min_points, 7);
  EXPECT_FALSE(back.use_superpoints);
  EXPECT_EQ(nlohmann::json::object().get<EnhanceConfig>().min_points, 100);
}

}  // namespace
