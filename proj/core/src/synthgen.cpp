#include "icr/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>

#include "icr/rng.hpp"

namespace icr {
namespace {

using Vec3 = std::array<double, 3>;

constexpr double kKernelGain = 8.0;
constexpr double kKernelMargin = 2.0;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Orthonormal codes via Gram-Schmidt on Gaussian draws.
MatrixD orthonormal_codes(std::size_t count, std::size_t dim, Rng& rng) {
  MatrixD codes(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (int attempt = 0;; ++attempt) {
      auto row = codes.row(i);
      for (auto& v : row) v = rng.normal();
      for (std::size_t j = 0; j < i; ++j) {
        const double proj = dot(row, codes.row(j));
        for (std::size_t d = 0; d < dim; ++d) row[d] -= proj * codes(j, d);
      }
      const double norm = std::sqrt(dot(row, row));
      if (norm > 1e-6) {
        for (auto& v : row) v /= norm;
        break;
      }
      if (attempt > 16) throw InvalidArgument("failed to draw instance feature codes");
    }
  }
  return codes;
}

InstanceShape parse_shape(const std::string& s) {
  if (s == "gaussian-blob" || s == "gaussian_blob") return InstanceShape::kGaussianBlob;
  if (s == "box") return InstanceShape::kBox;
  throw InvalidArgument("unknown instance shape '" + s + "'");
}

std::string shape_name(InstanceShape s) {
  return s == InstanceShape::kBox ? "box" : "gaussian-blob";
}

struct GridHash {
  std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
    return static_cast<std::size_t>(k[0] * 73856093LL ^ k[1] * 19349663LL ^ k[2] * 83492791LL);
  }
};

std::array<std::int64_t, 3> cell_of(const MatrixF& coords, std::size_t p, double cell) {
  return {static_cast<std::int64_t>(std::floor(coords(p, 0) / cell)),
          static_cast<std::int64_t>(std::floor(coords(p, 1) / cell)),
          static_cast<std::int64_t>(std::floor(coords(p, 2) / cell))};
}

}  // namespace

void GenConfig::validate() const {
  if (instance_count_min < 1 || instance_count_max < instance_count_min) {
    throw InvalidArgument("instance_count range is empty");
  }
  if (points_per_instance_min < 1 || points_per_instance_max < points_per_instance_min) {
    throw InvalidArgument("points_per_instance range is empty");
  }
  if (!(instance_radius_min > 0.0) || instance_radius_max < instance_radius_min) {
    throw InvalidArgument("instance_radius range is empty");
  }
  if (!(gap >= 0.0)) throw InvalidArgument("gap must be non-negative");
  if (!(room_extent > 2.0 * instance_radius_max)) {
    throw InvalidArgument("room_extent too small for the instance radius");
  }
  if (!(superpoint_grid > 0.0)) throw InvalidArgument("superpoint_grid must be positive");
  if (num_categories < 2) throw InvalidArgument("num_categories must be at least 2");
  if (feature_dim < instance_count_max + 1) {
    throw InvalidArgument("feature_dim must exceed instance_count_max");
  }
  if (!(background_ratio >= 0.0)) throw InvalidArgument("background_ratio must be non-negative");
  if (!(inside_score > 0.5 && inside_score <= 1.0 && outside_score >= 0.0 &&
        outside_score < inside_score)) {
    throw InvalidArgument("ideal scores must satisfy 0 <= outside < inside, inside in (0.5, 1]");
  }
  if (!(feature_noise >= 0.0)) throw InvalidArgument("feature_noise must be non-negative");
  if (max_retries < 1) throw InvalidArgument("max_retries must be positive");
}

void from_json(const nlohmann::json& j, GenConfig& c) {
  c.seed = j.value("seed", c.seed);
  if (j.contains("instance_count")) {
    c.instance_count_min = j["instance_count"].at(0).get<int>();
    c.instance_count_max = j["instance_count"].at(1).get<int>();
  }
  if (j.contains("points_per_instance")) {
    c.points_per_instance_min = j["points_per_instance"].at(0).get<int>();
    c.points_per_instance_max = j["points_per_instance"].at(1).get<int>();
  }
  if (j.contains("instance_radius")) {
    c.instance_radius_min = j["instance_radius"].at(0).get<double>();
    c.instance_radius_max = j["instance_radius"].at(1).get<double>();
  }
  c.room_extent = j.value("room_extent", c.room_extent);
  if (j.contains("shape")) c.shape = parse_shape(j["shape"].get<std::string>());
  c.gap = j.value("gap", c.gap);
  c.superpoint_grid = j.value("superpoint_grid", c.superpoint_grid);
  c.num_categories = j.value("num_categories", c.num_categories);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.background_ratio = j.value("background_ratio", c.background_ratio);
  c.inside_score = j.value("inside_score", c.inside_score);
  c.outside_score = j.value("outside_score", c.outside_score);
  c.semantic_margin = j.value("semantic_margin", c.semantic_margin);
  c.feature_noise = j.value("feature_noise", c.feature_noise);
  c.max_retries = j.value("max_retries", c.max_retries);
}

void to_json(nlohmann::json& j, const GenConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"instance_count", {c.instance_count_min, c.instance_count_max}},
                     {"points_per_instance", {c.points_per_instance_min, c.points_per_instance_max}},
                     {"instance_radius", {c.instance_radius_min, c.instance_radius_max}},
                     {"room_extent", c.room_extent},
                     {"shape", shape_name(c.shape)},
                     {"gap", c.gap},
                     {"superpoint_grid", c.superpoint_grid},
                     {"num_categories", c.num_categories},
                     {"feature_dim", c.feature_dim},
                     {"background_ratio", c.background_ratio},
                     {"inside_score", c.inside_score},
                     {"outside_score", c.outside_score},
                     {"semantic_margin", c.semantic_margin},
                     {"feature_noise", c.feature_noise},
                     {"max_retries", c.max_retries}};
}

SyntheticScene generate_scene(const GenConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.seed;
  Rng count_rng(seed, "instances");
  const auto instances =
      static_cast<std::size_t>(count_rng.between(cfg.instance_count_min, cfg.instance_count_max));

  // Bounding spheres separated by gap keep every cross-instance point pair
  // at least gap apart; lifting by gap keeps instances off the floor.
  Rng place_rng(seed, "placement");
  std::vector<Vec3> centers;
  std::vector<double> radii;
  for (std::size_t i = 0; i < instances; ++i) {
    const double r = place_rng.uniform(cfg.instance_radius_min, cfg.instance_radius_max);
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      const Vec3 c{place_rng.uniform(r, cfg.room_extent - r),
                   place_rng.uniform(r, cfg.room_extent - r), r + cfg.gap};
      placed = true;
      for (std::size_t j = 0; j < centers.size() && placed; ++j) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < 3; ++d) d2 += (c[d] - centers[j][d]) * (c[d] - centers[j][d]);
        placed = std::sqrt(d2) >= r + radii[j] + cfg.gap;
      }
      if (placed) {
        centers.push_back(c);
        radii.push_back(r);
      }
    }
    if (!placed) {
      throw InvalidArgument("infeasible packing: could not place instance " +
                            std::to_string(i + 1) + " after " +
                            std::to_string(cfg.max_retries) + " attempts");
    }
  }

  Rng size_rng(seed, "sizes");
  std::vector<std::size_t> sizes(instances);
  std::size_t instance_points = 0;
  for (auto& s : sizes) {
    s = static_cast<std::size_t>(size_rng.between(cfg.points_per_instance_min, cfg.points_per_instance_max));
    instance_points += s;
  }
  const auto floor_points =
      static_cast<std::size_t>(std::llround(cfg.background_ratio * static_cast<double>(instance_points)));
  const std::size_t n = instance_points + floor_points;

  SyntheticScene out;
  Scene& scene = out.scene;
  scene.scene_id = "synth_" + std::to_string(seed);
  scene.num_categories = cfg.num_categories;
  scene.labeled = true;
  scene.coords = MatrixF(n, 3);
  scene.colors = MatrixF(n, 3);
  std::vector<std::int32_t> sem(n, kBackground), inst(n, kBackground);

  Rng cat_rng(seed, "categories");
  std::vector<std::int32_t> category(instances);
  for (auto& c : category) c = static_cast<std::int32_t>(cat_rng.between(1, cfg.num_categories));

  Rng color_rng(seed, "colors");
  std::size_t p = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    Rng point_rng(seed, "points", i);
    const double r = radii[i];
    Vec3 half{};
    if (cfg.shape == InstanceShape::kBox) {
      for (auto& h : half) h = r / std::sqrt(3.0) * point_rng.uniform(0.6, 1.0);
    }
    const Vec3 base{color_rng.uniform(0.2, 0.9), color_rng.uniform(0.2, 0.9),
                    color_rng.uniform(0.2, 0.9)};
    for (std::size_t k = 0; k < sizes[i]; ++k, ++p) {
      Vec3 x{};
      if (cfg.shape == InstanceShape::kBox) {
        for (std::size_t d = 0; d < 3; ++d) x[d] = centers[i][d] + point_rng.uniform(-half[d], half[d]);
      } else {
        // Truncated isotropic Gaussian, std r / 2.5.
        for (;;) {
          double d2 = 0.0;
          for (std::size_t d = 0; d < 3; ++d) {
            x[d] = point_rng.normal(0.0, r / 2.5);
            d2 += x[d] * x[d];
          }
          if (std::sqrt(d2) < r) break;
        }
        for (std::size_t d = 0; d < 3; ++d) x[d] += centers[i][d];
      }
      for (std::size_t d = 0; d < 3; ++d) {
        scene.coords(p, d) = static_cast<float>(x[d]);
        (*scene.colors)(p, d) =
            static_cast<float>(std::clamp(base[d] + color_rng.normal(0.0, 0.03), 0.0, 1.0));
      }
      sem[p] = category[i];
      inst[p] = static_cast<std::int32_t>(i + 1);
    }
  }
  Rng floor_rng(seed, "floor");
  for (; p < n; ++p) {
    scene.coords(p, 0) = static_cast<float>(floor_rng.uniform(0.0, cfg.room_extent));
    scene.coords(p, 1) = static_cast<float>(floor_rng.uniform(0.0, cfg.room_extent));
    scene.coords(p, 2) = 0.0f;
    const double g = std::clamp(0.5 + floor_rng.normal(0.0, 0.03), 0.0, 1.0);
    for (std::size_t d = 0; d < 3; ++d) (*scene.colors)(p, d) = static_cast<float>(g);
  }

  // Superpoints: grid cells split by GT label, so no superpoint straddles
  // two instances.
  std::map<std::tuple<std::int32_t, std::int64_t, std::int64_t, std::int64_t>, std::int32_t> sp_ids;
  std::vector<std::int32_t> superpoint(n);
  for (std::size_t q = 0; q < n; ++q) {
    const auto c = cell_of(scene.coords, q, cfg.superpoint_grid);
    const auto key = std::make_tuple(inst[q], c[0], c[1], c[2]);
    superpoint[q] = sp_ids.try_emplace(key, static_cast<std::int32_t>(sp_ids.size())).first->second;
  }
  scene.superpoint_id = std::move(superpoint);
  scene.sem_gt = std::move(sem);
  scene.inst_gt = std::move(inst);
  scene.validate();

  // Features: code of the point's instance (row 0 = background) plus noise,
  // redrawn until every planted kernel separates it with the required margin.
  const auto dim = static_cast<std::size_t>(cfg.feature_dim);
  Rng code_rng(seed, "codes");
  const MatrixD codes = orthonormal_codes(instances + 1, dim, code_rng);
  Rng feat_rng(seed, "features");
  out.features = MatrixF(n, dim);
  std::vector<double> f(dim);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t own = static_cast<std::size_t>(std::max(0, (*scene.inst_gt)[q]));
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      for (std::size_t d = 0; d < dim; ++d) {
        f[d] = static_cast<float>(codes(own, d) + feat_rng.normal(0.0, cfg.feature_noise));
      }
      ok = true;
      for (std::size_t i = 1; i <= instances && ok; ++i) {
        const double logit = kKernelGain * (dot(codes.row(i), f) - 0.5);
        ok = (i == own) ? logit >= kKernelMargin : logit <= -kKernelMargin;
      }
    }
    if (!ok) throw InvalidArgument("feature_noise too large to plant separable kernels");
    for (std::size_t d = 0; d < dim; ++d) out.features(q, d) = static_cast<float>(f[d]);
  }

  // Heatmap from the GT partition; also locates each instance's hottest point.
  out.heatmap.values.assign(n, 0.0f);
  std::vector<Vec3> mean(instances, Vec3{});
  for (std::size_t q = 0; q < instance_points; ++q) {
    const auto i = static_cast<std::size_t>((*scene.inst_gt)[q] - 1);
    for (std::size_t d = 0; d < 3; ++d) mean[i][d] += scene.coords(q, d);
  }
  for (std::size_t i = 0; i < instances; ++i) {
    for (auto& m : mean[i]) m /= static_cast<double>(sizes[i]);
  }
  std::vector<double> dist2(n, 0.0), scale2(instances, 0.0);
  for (std::size_t q = 0; q < instance_points; ++q) {
    const auto i = static_cast<std::size_t>((*scene.inst_gt)[q] - 1);
    for (std::size_t d = 0; d < 3; ++d) {
      const double diff = mean[i][d] - scene.coords(q, d);
      dist2[q] += diff * diff;
    }
    scale2[i] = std::max(scale2[i], dist2[q]);
  }
  std::vector<std::size_t> hottest(instances, 0);
  std::vector<double> hottest_d2(instances, std::numeric_limits<double>::infinity());
  for (std::size_t q = 0; q < instance_points; ++q) {
    const auto i = static_cast<std::size_t>((*scene.inst_gt)[q] - 1);
    const double l = std::max(0.1, std::sqrt(scale2[i]));
    out.heatmap.values[q] = static_cast<float>(std::exp(-dist2[q] / (l * l)));
    if (dist2[q] < hottest_d2[i]) {
      hottest_d2[i] = dist2[q];
      hottest[i] = q;
    }
  }

  KernelSet& ks = out.kernels;
  ks.weights = MatrixF(instances, dim + 3, 0.0f);
  ks.bias.assign(instances, static_cast<float>(-kKernelGain / 2.0));
  ks.centroid_coords = MatrixF(instances, 3);
  ks.centroid_heat.resize(instances);
  for (std::size_t i = 0; i < instances; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      ks.weights(i, d) = static_cast<float>(kKernelGain * codes(i + 1, d));
    }
    for (std::size_t d = 0; d < 3; ++d) ks.centroid_coords(i, d) = scene.coords(hottest[i], d);
    ks.centroid_heat[i] = out.heatmap.values[hottest[i]];
  }

  out.masks = SoftMaskSet(n, instances);
  out.semantics.logits = MatrixF(n, static_cast<std::size_t>(cfg.num_categories), 0.0f);
  for (std::size_t q = 0; q < n; ++q) {
    const auto id = (*scene.inst_gt)[q];
    for (std::size_t i = 0; i < instances; ++i) {
      out.masks.scores(q, i) = static_cast<float>(
          static_cast<std::int32_t>(i + 1) == id ? cfg.inside_score : cfg.outside_score);
    }
    const auto c = (*scene.sem_gt)[q];
    if (c >= 1) {
      out.semantics.logits(q, static_cast<std::size_t>(c - 1)) =
          static_cast<float>(cfg.semantic_margin);
    }
  }
  return out;
}

void CorruptionConfig::validate() const {
  const auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0, 1]");
  };
  unit(duplicate_rate, "duplicate_rate");
  unit(attenuation, "attenuation");
  unit(sem_flip_rate, "sem_flip_rate");
  unit(attenuated_fraction, "attenuated_fraction");
  if (!(boundary_noise >= 0.0)) throw InvalidArgument("boundary_noise must be non-negative");
}

void from_json(const nlohmann::json& j, CorruptionConfig& c) {
  c.duplicate_rate = j.value("duplicate_rate", c.duplicate_rate);
  c.attenuation = j.value("attenuation", c.attenuation);
  c.boundary_noise = j.value("boundary_noise", c.boundary_noise);
  c.sem_flip_rate = j.value("sem_flip_rate", c.sem_flip_rate);
  c.attenuated_fraction = j.value("attenuated_fraction", c.attenuated_fraction);
}

void to_json(nlohmann::json& j, const CorruptionConfig& c) {
  j = nlohmann::json{{"duplicate_rate", c.duplicate_rate},
                     {"attenuation", c.attenuation},
                     {"boundary_noise", c.boundary_noise},
                     {"sem_flip_rate", c.sem_flip_rate},
                     {"attenuated_fraction", c.attenuated_fraction}};
}

CorruptedPredictions corrupt_predictions(const SyntheticScene& ideal,
                                         const CorruptionConfig& cc, std::uint64_t seed) {
  cc.validate();
  const Scene& scene = ideal.scene;
  const std::size_t n = scene.size();
  const std::size_t k = ideal.masks.instances();
  CorruptedPredictions out{ideal.masks, ideal.heatmap, ideal.semantics, {}, {}};

  if (cc.attenuation > 0.0 && k > 0) {
    Rng rng(seed, "corrupt.attenuate");
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = k; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto count = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cc.attenuated_fraction * static_cast<double>(k))), 1, k);
    out.attenuated.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(out.attenuated.begin(), out.attenuated.end());
    const double factor = 1.0 - cc.attenuation;
    for (int col : out.attenuated) {
      for (std::size_t q = 0; q < n; ++q) {
        auto& v = out.masks.scores(q, static_cast<std::size_t>(col));
        v = static_cast<float>(static_cast<double>(v) * factor);
      }
    }
  }

  if (cc.duplicate_rate > 0.0 && k > 0) {
    const auto& inst = *scene.inst_gt;
    std::vector<std::vector<float>> extra;
    for (std::size_t i = 0; i < k; ++i) {
      Rng rng(seed, "corrupt.duplicate", i);
      if (!rng.bernoulli(cc.duplicate_rate)) continue;
      const double strength = rng.uniform(0.8, 0.95);
      Vec3 u{rng.normal(), rng.normal(), rng.normal()};
      const double un = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
      for (auto& c : u) c /= un;

      const auto id = static_cast<std::int32_t>(i + 1);
      std::vector<std::size_t> members;
      Vec3 c{};
      double inside_sum = 0.0, outside_sum = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        if (inst[q] == id) {
          members.push_back(q);
          for (std::size_t d = 0; d < 3; ++d) c[d] += scene.coords(q, d);
          inside_sum += out.masks.scores(q, i);
        } else {
          outside_sum += out.masks.scores(q, i);
        }
      }
      if (members.empty()) continue;
      for (auto& v : c) v /= static_cast<double>(members.size());
      const double inside_level = inside_sum / static_cast<double>(members.size());
      const double outside_level =
          members.size() < n ? outside_sum / static_cast<double>(n - members.size()) : 0.0;
      const auto along = [&](std::size_t q) {
        double s = 0.0;
        for (std::size_t d = 0; d < 3; ++d) s += (scene.coords(q, d) - c[d]) * u[d];
        return s;
      };

      std::vector<float> column(n);
      for (std::size_t q = 0; q < n; ++q) {
        column[q] = static_cast<float>(strength * out.masks.scores(q, i));
      }
      const double delta = cc.boundary_noise;
      if (delta > 0.0) {
        double lowest = std::numeric_limits<double>::infinity();
        for (auto q : members) lowest = std::min(lowest, along(q));
        for (auto q : members) {
          if (along(q) < lowest + delta) column[q] = static_cast<float>(strength * outside_level);
        }
        std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, GridHash> grid;
        for (auto q : members) grid[cell_of(scene.coords, q, delta)].push_back(q);
        for (std::size_t q = 0; q < n; ++q) {
          if (inst[q] == id || along(q) <= 0.0) continue;
          const auto cq = cell_of(scene.coords, q, delta);
          bool near = false;
          for (std::int64_t dx = -1; dx <= 1 && !near; ++dx) {
            for (std::int64_t dy = -1; dy <= 1 && !near; ++dy) {
              for (std::int64_t dz = -1; dz <= 1 && !near; ++dz) {
                const auto it = grid.find({cq[0] + dx, cq[1] + dy, cq[2] + dz});
                if (it == grid.end()) continue;
                for (auto m : it->second) {
                  double d2 = 0.0;
                  for (std::size_t d = 0; d < 3; ++d) {
                    const double diff = static_cast<double>(scene.coords(q, d)) - scene.coords(m, d);
                    d2 += diff * diff;
                  }
                  if (d2 <= delta * delta) {
                    near = true;
                    break;
                  }
                }
              }
            }
          }
          if (near) column[q] = static_cast<float>(strength * inside_level);
        }
      }
      extra.push_back(std::move(column));
      out.duplicate_of.push_back(static_cast<int>(i));
    }
    if (!extra.empty()) {
      MatrixF scores(n, k + extra.size());
      for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t i = 0; i < k; ++i) scores(q, i) = out.masks.scores(q, i);
        for (std::size_t e = 0; e < extra.size(); ++e) scores(q, k + e) = extra[e][q];
      }
      out.masks = SoftMaskSet(std::move(scores));
    }
  }

  if (cc.sem_flip_rate > 0.0 && out.semantics.categories() >= 2) {
    Rng rng(seed, "corrupt.semantic");
    const std::size_t c_count = out.semantics.categories();
    for (std::size_t q = 0; q < n; ++q) {
      if (!rng.bernoulli(cc.sem_flip_rate)) continue;
      auto row = out.semantics.logits.row(q);
      const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      std::size_t other = static_cast<std::size_t>(rng.below(c_count - 1));
      if (other >= top) ++other;
      std::swap(row[top], row[other]);
      if (row[other] <= row[top]) row[other] = row[top] + 1.0f;
    }
  }
  return out;
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  c.jitter_sigma = j.value("jitter_sigma", c.jitter_sigma);
  c.elastic_spacing = j.value("elastic_spacing", c.elastic_spacing);
  c.elastic_magnitude = j.value("elastic_magnitude", c.elastic_magnitude);
  c.color_scale = j.value("color_scale", c.color_scale);
  c.color_shift = j.value("color_shift", c.color_shift);
}

Scene augment(const Scene& scene, AugmentStrength strength, std::uint64_t seed,
              const AugmentConfig& cfg) {
  scene.validate();
  Scene out = scene;
  const std::size_t n = scene.size();

  std::array<double, 2> lo{scene.coords(0, 0), scene.coords(0, 1)};
  std::array<double, 2> hi = lo;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t d = 0; d < 2; ++d) {
      lo[d] = std::min<double>(lo[d], scene.coords(p, d));
      hi[d] = std::max<double>(hi[d], scene.coords(p, d));
    }
  }
  const double cx = 0.5 * (lo[0] + hi[0]);
  const double cy = 0.5 * (lo[1] + hi[1]);

  Rng flip_rng(seed, "augment.flip");
  const double fx = flip_rng.bernoulli(0.5) ? -1.0 : 1.0;
  const double fy = flip_rng.bernoulli(0.5) ? -1.0 : 1.0;
  Rng rot_rng(seed, "augment.rotate");
  const double theta = rot_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double cs = std::cos(theta), sn = std::sin(theta);
  for (std::size_t p = 0; p < n; ++p) {
    const double x = fx * (scene.coords(p, 0) - cx);
    const double y = fy * (scene.coords(p, 1) - cy);
    out.coords(p, 0) = static_cast<float>(cs * x - sn * y + cx);
    out.coords(p, 1) = static_cast<float>(sn * x + cs * y + cy);
  }
  if (strength == AugmentStrength::kWeak) return out;

  if (cfg.jitter_sigma > 0.0) {
    Rng rng(seed, "augment.jitter");
    for (auto& v : out.coords.data()) {
      v = static_cast<float>(static_cast<double>(v) + rng.normal(0.0, cfg.jitter_sigma));
    }
  }

  if (cfg.elastic_magnitude > 0.0 && cfg.elastic_spacing > 0.0) {
    std::array<double, 3> origin{}, extent{};
    for (std::size_t d = 0; d < 3; ++d) {
      origin[d] = out.coords(0, d);
      double top = origin[d];
      for (std::size_t p = 0; p < n; ++p) {
        origin[d] = std::min<double>(origin[d], out.coords(p, d));
        top = std::max<double>(top, out.coords(p, d));
      }
      extent[d] = top - origin[d];
    }
    std::array<std::size_t, 3> nodes{};
    for (std::size_t d = 0; d < 3; ++d) {
      nodes[d] = static_cast<std::size_t>(std::ceil(extent[d] / cfg.elastic_spacing)) + 2;
    }
    Rng rng(seed, "augment.elastic");
    std::vector<double> field(nodes[0] * nodes[1] * nodes[2] * 3);
    for (auto& v : field) v = rng.normal(0.0, cfg.elastic_magnitude);
    const auto node = [&](std::size_t i, std::size_t j, std::size_t k, std::size_t d) {
      return field[((i * nodes[1] + j) * nodes[2] + k) * 3 + d];
    };
    for (std::size_t p = 0; p < n; ++p) {
      std::array<std::size_t, 3> base{};
      std::array<double, 3> frac{};
      for (std::size_t d = 0; d < 3; ++d) {
        const double g = (out.coords(p, d) - origin[d]) / cfg.elastic_spacing;
        base[d] = std::min(static_cast<std::size_t>(std::floor(g)), nodes[d] - 2);
        frac[d] = g - static_cast<double>(base[d]);
      }
      for (std::size_t d = 0; d < 3; ++d) {
        double disp = 0.0;
        for (std::size_t corner = 0; corner < 8; ++corner) {
          const std::size_t a = corner & 1, b = (corner >> 1) & 1, c = (corner >> 2) & 1;
          const double w = (a ? frac[0] : 1.0 - frac[0]) * (b ? frac[1] : 1.0 - frac[1]) *
                           (c ? frac[2] : 1.0 - frac[2]);
          disp += w * node(base[0] + a, base[1] + b, base[2] + c, d);
        }
        out.coords(p, d) = static_cast<float>(out.coords(p, d) + disp);
      }
    }
  }

  if (out.colors && (cfg.color_scale > 0.0 || cfg.color_shift > 0.0)) {
    Rng rng(seed, "augment.color");
    std::array<double, 3> gain{}, shift{};
    for (std::size_t d = 0; d < 3; ++d) {
      gain[d] = 1.0 + rng.uniform(-cfg.color_scale, cfg.color_scale);
      shift[d] = rng.uniform(-cfg.color_shift, cfg.color_shift);
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t d = 0; d < 3; ++d) {
        auto& v = (*out.colors)(p, d);
        v = static_cast<float>(std::clamp(gain[d] * v + shift[d], 0.0, 1.0));
      }
    }
  }
  return out;
}

PlantedAmbiguity plant_ambiguity(const SyntheticScene& ideal, std::span<const double> levels,
                                 std::uint64_t seed) {
  if (levels.empty()) throw InvalidArgument("plant_ambiguity: no corruption levels");
  for (double l : levels) {
    if (!(l >= 0.0 && l <= 1.0)) throw InvalidArgument("corruption levels must lie in [0, 1]");
  }
  const Scene& scene = ideal.scene;
  const auto& inst = *scene.inst_gt;
  const auto& sem = *scene.sem_gt;
  const int c_count = scene.num_categories;
  const auto g = static_cast<std::size_t>(scene.instance_count());
  std::vector<std::vector<std::size_t>> members(g);
  for (std::size_t p = 0; p < scene.size(); ++p) {
    if (inst[p] >= 1) members[static_cast<std::size_t>(inst[p] - 1)].push_back(p);
  }

  PlantedAmbiguity out;
  out.sem_pred = sem;
  Rng level_rng(seed, "ambiguity.level");
  for (std::size_t i = 0; i < g; ++i) {
    const double level = levels[level_rng.below(levels.size())];
    const std::size_t size = members[i].size();
    const auto m = static_cast<std::size_t>(std::llround(level * static_cast<double>(size)));

    auto shuffled = [&](const char* tag) {
      std::vector<std::size_t> v = members[i];
      Rng rng(seed, tag, i);
      for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.below(k)]);
      return v;
    };
    const auto flip = shuffled("ambiguity.semantic");
    for (std::size_t k = 0; k < m; ++k) {
      const auto p = flip[k];
      out.sem_pred[p] = sem[p] % c_count + 1;
    }
    out.planted_accuracy.push_back(static_cast<double>(size - m) / static_cast<double>(size));

    const auto drop = shuffled("ambiguity.mask");
    InstancePrediction pred;
    pred.mask.assign(scene.size(), 0);
    for (std::size_t k = m; k < size; ++k) pred.mask[drop[k]] = 1;
    pred.category = sem[members[i].front()];
    pred.confidence = 1.0;
    out.planted_iou.push_back(static_cast<double>(size - m) / static_cast<double>(size));
    if (m < size) out.predictions.push_back(std::move(pred));
  }
  return out;
}

}  // namespace icr
