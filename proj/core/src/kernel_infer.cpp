#include "icr/kernel_infer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace icr {
namespace {

struct GridKeyHash {
  std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
    std::size_t h = static_cast<std::size_t>(k[0]) * 73856093u;
    h ^= static_cast<std::size_t>(k[1]) * 19349663u;
    h ^= static_cast<std::size_t>(k[2]) * 83492791u;
    return h;
  }
};

// Uniform hash grid for fixed-radius neighbour queries.
class RadiusGrid {
 public:
  RadiusGrid(const MatrixF& coords, double cell, const std::vector<std::size_t>& members)
      : coords_(coords), cell_(cell) {
    for (auto p : members) cells_[key_of(p)].push_back(p);
  }

  template <typename F>
  void for_each_within(std::size_t center, double radius, F&& f) const {
    const auto k = key_of(center);
    const double r2 = radius * radius;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == cells_.end()) continue;
          for (auto p : it->second) {
            double d2 = 0.0;
            for (std::size_t d = 0; d < 3; ++d) {
              const double diff = static_cast<double>(coords_(p, d)) - coords_(center, d);
              d2 += diff * diff;
            }
            if (d2 <= r2) f(p);
          }
        }
      }
    }
  }

 private:
  std::array<std::int64_t, 3> key_of(std::size_t p) const {
    return {static_cast<std::int64_t>(std::floor(coords_(p, 0) / cell_)),
            static_cast<std::int64_t>(std::floor(coords_(p, 1) / cell_)),
            static_cast<std::int64_t>(std::floor(coords_(p, 2) / cell_))};
  }

  const MatrixF& coords_;
  double cell_;
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, GridKeyHash> cells_;
};

}  // namespace

void Heatmap::validate() const {
  for (float v : values) {
    if (!(v >= 0.0f && v <= 1.0f)) throw InvalidArgument("heatmap entries must lie in [0,1]");
  }
}

void AffinityMatrix::validate(double tolerance) const {
  if (values.rows() != values.cols()) throw ShapeError("affinity matrix must be square");
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = i + 1; j < values.cols(); ++j) {
      if (std::abs(static_cast<double>(values(i, j)) - values(j, i)) > tolerance) {
        throw InvalidArgument("affinity matrix is not symmetric at (" + std::to_string(i) +
                              ", " + std::to_string(j) + ")");
      }
    }
  }
}

void KernelSet::validate() const {
  const std::size_t k = bias.size();
  if (weights.rows() != k || centroid_coords.rows() != k || centroid_heat.size() != k) {
    throw ShapeError("kernel arrays disagree on the instance count");
  }
  if (k > 0 && weights.cols() < 3) throw ShapeError("kernel weights need at least 3 columns");
  if (k > 0 && centroid_coords.cols() != 3) throw ShapeError("kernel centroids must be I x 3");
}

void put_kernels(Container& c, const KernelSet& k) {
  k.validate();
  c.put("kernel_w", k.weights);
  c.put_vector("kernel_b", k.bias);
  c.put("kernel_c", k.centroid_coords);
  c.put_vector("kernel_h", k.centroid_heat);
}

KernelSet kernels_from_container(const Container& c) {
  KernelSet k;
  k.weights = c.matrix_f32("kernel_w");
  k.bias = c.vector_f32("kernel_b");
  k.centroid_coords = c.matrix_f32("kernel_c");
  k.centroid_heat = c.vector_f32("kernel_h");
  k.validate();
  return k;
}

void LocalizeConfig::validate() const {
  if (!(suppression_radius > 0.0)) throw InvalidArgument("suppression_radius must be positive");
  if (!(heat_floor >= 0.0 && heat_floor < 1.0)) {
    throw InvalidArgument("heat_floor must lie in [0, 1)");
  }
  if (max_candidates < 0) throw InvalidArgument("max_candidates must be non-negative");
}

void from_json(const nlohmann::json& j, LocalizeConfig& c) {
  c.suppression_radius = j.value("suppression_radius", c.suppression_radius);
  c.heat_floor = j.value("heat_floor", c.heat_floor);
  c.max_candidates = j.value("max_candidates", c.max_candidates);
  c.pool_features = j.value("pool_features", c.pool_features);
}

void to_json(nlohmann::json& j, const LocalizeConfig& c) {
  j = nlohmann::json{{"suppression_radius", c.suppression_radius},
                     {"heat_floor", c.heat_floor},
                     {"max_candidates", c.max_candidates},
                     {"pool_features", c.pool_features}};
}

CandidateSet find_candidates(const Heatmap& heat, const MatrixF& coords,
                             const MatrixF& features, const LocalizeConfig& cfg) {
  cfg.validate();
  const std::size_t n = heat.size();
  if (coords.rows() != n || coords.cols() != 3) {
    throw ShapeError("heatmap and coords disagree on the point count");
  }
  if (features.rows() != n && !(features.rows() == 0 && features.cols() == 0)) {
    throw ShapeError("features and heatmap disagree on the point count");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t p = 0; p < n; ++p) {
    if (static_cast<double>(heat.values[p]) >= cfg.heat_floor) eligible.push_back(p);
  }
  std::sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
    if (heat.values[a] != heat.values[b]) return heat.values[a] > heat.values[b];
    return a < b;
  });

  const RadiusGrid grid(coords, cfg.suppression_radius, eligible);
  std::vector<char> suppressed(n, 0);
  CandidateSet out;
  std::vector<float> feats;
  const std::size_t dim = features.rows() == n ? features.cols() : 0;

  std::vector<std::size_t> all_points;
  if (cfg.pool_features && dim > 0) {
    all_points.resize(n);
    std::iota(all_points.begin(), all_points.end(), 0);
  }
  const RadiusGrid pool_grid(coords, cfg.suppression_radius, all_points);

  for (auto p : eligible) {
    if (static_cast<int>(out.size()) >= cfg.max_candidates) break;
    if (suppressed[p]) continue;
    out.point_index.push_back(static_cast<std::int32_t>(p));
    out.heat.push_back(heat.values[p]);
    if (cfg.pool_features && dim > 0) {
      std::vector<double> acc(dim, 0.0);
      double count = 0.0;
      pool_grid.for_each_within(p, cfg.suppression_radius, [&](std::size_t q) {
        for (std::size_t d = 0; d < dim; ++d) acc[d] += features(q, d);
        count += 1.0;
      });
      for (std::size_t d = 0; d < dim; ++d) feats.push_back(static_cast<float>(acc[d] / count));
    } else {
      for (std::size_t d = 0; d < dim; ++d) feats.push_back(features(p, d));
    }
    grid.for_each_within(p, cfg.suppression_radius, [&](std::size_t q) { suppressed[q] = 1; });
  }
  out.features = MatrixF(out.size(), dim, std::move(feats));
  return out;
}

AffinityMatrix feature_affinity(const CandidateSet& candidates) {
  const std::size_t q = candidates.size();
  const std::size_t dim = candidates.features.cols();
  std::vector<double> norm(q, 0.0);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      norm[i] += static_cast<double>(candidates.features(i, d)) * candidates.features(i, d);
    }
    norm[i] = std::sqrt(norm[i]);
  }
  AffinityMatrix a{MatrixF(q, q, 0.0f)};
  for (std::size_t i = 0; i < q; ++i) {
    a.values(i, i) = 1.0f;
    for (std::size_t j = i + 1; j < q; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        dot += static_cast<double>(candidates.features(i, d)) * candidates.features(j, d);
      }
      const double denom = norm[i] * norm[j];
      const double cos = denom > 1e-12 ? dot / denom : 0.0;
      a.values(i, j) = a.values(j, i) = static_cast<float>(std::clamp(cos, 0.0, 1.0));
    }
  }
  return a;
}

Aggregation aggregate_candidates(const CandidateSet& candidates,
                                 const AffinityMatrix& affinity,
                                 const MatrixF& coords, const AggregateConfig& cfg) {
  const std::size_t q = candidates.size();
  if (affinity.values.rows() != q || affinity.values.cols() != q) {
    throw ShapeError("affinity is " + std::to_string(affinity.values.rows()) + "x" +
                     std::to_string(affinity.values.cols()) + " but there are " +
                     std::to_string(q) + " candidates");
  }
  affinity.validate();

  std::vector<std::vector<std::size_t>> groups(q);
  for (std::size_t i = 0; i < q; ++i) groups[i] = {i};
  // cross[a][b]: sum of affinities between members of groups a and b.
  std::vector<std::vector<double>> cross(q, std::vector<double>(q, 0.0));
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) cross[i][j] = affinity.values(i, j);
  }

  while (groups.size() > 1) {
    double best = cfg.merge_threshold;
    std::size_t ba = 0, bb = 0;
    bool found = false;
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        const double mean =
            cross[a][b] / static_cast<double>(groups[a].size() * groups[b].size());
        if (mean > best) {
          best = mean;
          ba = a;
          bb = b;
          found = true;
        }
      }
    }
    if (!found) break;
    groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
    std::sort(groups[ba].begin(), groups[ba].end());
    for (std::size_t x = 0; x < groups.size(); ++x) {
      cross[ba][x] += cross[bb][x];
      cross[x][ba] = cross[ba][x];
    }
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bb));
    cross.erase(cross.begin() + static_cast<std::ptrdiff_t>(bb));
    for (auto& row : cross) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bb));
  }

  const std::size_t dim = candidates.features.cols();
  const std::size_t k = groups.size();
  Aggregation out;
  out.group_of.assign(q, 0);
  KernelSet& ks = out.kernels;
  ks.weights = MatrixF(k, dim + 3, 0.0f);
  ks.bias.assign(k, static_cast<float>(-cfg.kernel_gain / 2.0));
  ks.centroid_coords = MatrixF(k, 3, 0.0f);
  ks.centroid_heat.assign(k, 0.0f);
  for (std::size_t g = 0; g < k; ++g) {
    std::vector<double> mean(dim, 0.0);
    std::size_t hottest = groups[g].front();
    for (auto c : groups[g]) {
      out.group_of[c] = static_cast<std::int32_t>(g);
      for (std::size_t d = 0; d < dim; ++d) mean[d] += candidates.features(c, d);
      if (candidates.heat[c] > candidates.heat[hottest]) hottest = c;
    }
    double norm2 = 0.0;
    for (auto& m : mean) {
      m /= static_cast<double>(groups[g].size());
      norm2 += m * m;
    }
    if (norm2 > 1e-12) {
      for (std::size_t d = 0; d < dim; ++d) {
        ks.weights(g, d) = static_cast<float>(cfg.kernel_gain * mean[d] / norm2);
      }
    }
    const auto p = static_cast<std::size_t>(candidates.point_index[hottest]);
    for (std::size_t d = 0; d < 3; ++d) ks.centroid_coords(g, d) = coords(p, d);
    ks.centroid_heat[g] = candidates.heat[hottest];
  }
  return out;
}

SoftMaskSet reconstruct_masks(const KernelSet& kernels, const MatrixF& features,
                              const MatrixF& coords) {
  kernels.validate();
  const std::size_t n = coords.rows();
  const std::size_t k = kernels.size();
  if (coords.cols() != 3) throw ShapeError("coords must be N x 3");
  const std::size_t dim = features.cols();
  if (k > 0 && kernels.feature_dim() != dim) {
    throw ShapeError("kernel width " + std::to_string(kernels.weights.cols()) +
                     " does not match feature width " + std::to_string(dim) + " + 3");
  }
  if (features.rows() != n && dim > 0) throw ShapeError("features and coords disagree on N");
  SoftMaskSet out(n, k);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto w = kernels.weights.row(i);
      double logit = kernels.bias[i];
      for (std::size_t d = 0; d < dim; ++d) logit += static_cast<double>(w[d]) * features(p, d);
      for (std::size_t d = 0; d < 3; ++d) {
        logit += static_cast<double>(w[dim + d]) *
                 (static_cast<double>(coords(p, d)) - kernels.centroid_coords(i, d));
      }
      out.scores(p, i) = static_cast<float>(1.0 / (1.0 + std::exp(-logit)));
    }
  }
  return out;
}

}  // namespace icr
