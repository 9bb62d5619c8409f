#include "icr/voxel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "icr/rng.hpp"

namespace icr {
namespace {

using Key = std::array<std::int64_t, 3>;

std::int32_t majority(const std::vector<std::int32_t>& values) {
  std::map<std::int32_t, std::size_t> counts;
  for (auto v : values) ++counts[v];
  std::int32_t best = values.front();
  std::size_t best_count = 0;
  for (const auto& [v, c] : counts) {  // ascending: strict > keeps the smallest
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  }
  return best;
}

// Renumbers instance IDs to 1..K in order of first appearance of the old ID
// value, i.e. ascending old ID.
void compact_instances(std::vector<std::int32_t>& ids) {
  std::int32_t max_id = 0;
  for (auto id : ids) max_id = std::max(max_id, id);
  std::vector<std::int32_t> remap(static_cast<std::size_t>(max_id) + 1, 0);
  for (auto id : ids) {
    if (id >= 1) remap[static_cast<std::size_t>(id)] = 1;
  }
  std::int32_t next = 0;
  for (auto& r : remap) {
    if (r) r = ++next;
  }
  for (auto& id : ids) {
    if (id >= 1) id = remap[static_cast<std::size_t>(id)];
  }
}

Scene select_points(const Scene& scene, const std::vector<std::size_t>& keep) {
  Scene out;
  out.scene_id = scene.scene_id;
  out.num_categories = scene.num_categories;
  out.labeled = scene.labeled;
  out.coords = MatrixF(keep.size(), 3);
  if (scene.colors) out.colors = MatrixF(keep.size(), 3);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (std::size_t d = 0; d < 3; ++d) {
      out.coords(k, d) = scene.coords(keep[k], d);
      if (scene.colors) (*out.colors)(k, d) = (*scene.colors)(keep[k], d);
    }
  }
  const auto pick = [&](const std::optional<std::vector<std::int32_t>>& src) {
    std::optional<std::vector<std::int32_t>> dst;
    if (src) {
      dst.emplace(keep.size());
      for (std::size_t k = 0; k < keep.size(); ++k) (*dst)[k] = (*src)[keep[k]];
    }
    return dst;
  };
  out.superpoint_id = pick(scene.superpoint_id);
  out.sem_gt = pick(scene.sem_gt);
  out.inst_gt = pick(scene.inst_gt);
  if (out.inst_gt) compact_instances(*out.inst_gt);
  return out;
}

}  // namespace

DownsampleResult voxel_downsample(const Scene& scene, double voxel_size) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw InvalidArgument("voxel_size must be positive");
  }
  scene.validate();
  const std::size_t n = scene.size();

  std::array<double, 3> lo{};
  for (std::size_t d = 0; d < 3; ++d) {
    lo[d] = scene.coords(0, d);
    for (std::size_t p = 1; p < n; ++p) lo[d] = std::min<double>(lo[d], scene.coords(p, d));
  }
  std::vector<Key> keys(n);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t d = 0; d < 3; ++d) {
      keys[p][d] = static_cast<std::int64_t>(
          std::floor((static_cast<double>(scene.coords(p, d)) - lo[d]) / voxel_size));
    }
  }

  // Canonical order: voxel key, then the point's full payload. Summation
  // inside a voxel then happens in the same order for any input permutation.
  const auto payload = [&](std::size_t p) {
    std::array<float, 6> v{scene.coords(p, 0), scene.coords(p, 1), scene.coords(p, 2), 0, 0, 0};
    if (scene.colors) {
      for (std::size_t d = 0; d < 3; ++d) v[3 + d] = (*scene.colors)(p, d);
    }
    return v;
  };
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return payload(a) < payload(b);
  });

  DownsampleResult result;
  result.index_map.assign(n, 0);
  Scene& out = result.scene;
  out.scene_id = scene.scene_id;
  out.num_categories = scene.num_categories;
  out.labeled = scene.labeled;

  std::vector<float> coords;
  std::vector<float> colors;
  std::optional<std::vector<std::int32_t>> sp, sem, inst;
  if (scene.superpoint_id) sp.emplace();
  if (scene.sem_gt) sem.emplace();
  if (scene.inst_gt) inst.emplace();

  std::vector<std::int32_t> buf;
  std::size_t begin = 0;
  while (begin < n) {
    std::size_t end = begin + 1;
    while (end < n && keys[order[end]] == keys[order[begin]]) ++end;
    const auto out_index = static_cast<std::int32_t>(coords.size() / 3);
    const double count = static_cast<double>(end - begin);
    for (std::size_t d = 0; d < 3; ++d) {
      double s = 0.0;
      for (std::size_t k = begin; k < end; ++k) s += scene.coords(order[k], d);
      coords.push_back(static_cast<float>(s / count));
    }
    if (scene.colors) {
      for (std::size_t d = 0; d < 3; ++d) {
        double s = 0.0;
        for (std::size_t k = begin; k < end; ++k) s += (*scene.colors)(order[k], d);
        colors.push_back(static_cast<float>(s / count));
      }
    }
    const auto vote = [&](const std::vector<std::int32_t>& src, auto keep) {
      buf.clear();
      for (std::size_t k = begin; k < end; ++k) {
        if (keep(order[k])) buf.push_back(src[order[k]]);
      }
      return majority(buf);
    };
    const auto all = [](std::size_t) { return true; };
    std::int32_t inst_label = kBackground;
    if (inst) {
      inst_label = vote(*scene.inst_gt, all);
      inst->push_back(inst_label);
    }
    if (sem) {
      if (inst && inst_label >= 1) {
        sem->push_back(vote(*scene.sem_gt, [&](std::size_t p) {
          return (*scene.inst_gt)[p] == inst_label;
        }));
      } else {
        sem->push_back(vote(*scene.sem_gt, all));
      }
    }
    if (sp) sp->push_back(vote(*scene.superpoint_id, all));
    for (std::size_t k = begin; k < end; ++k) result.index_map[order[k]] = out_index;
    begin = end;
  }

  const std::size_t m = coords.size() / 3;
  out.coords = MatrixF(m, 3, std::move(coords));
  if (scene.colors) out.colors = MatrixF(m, 3, std::move(colors));
  out.superpoint_id = std::move(sp);
  out.sem_gt = std::move(sem);
  out.inst_gt = std::move(inst);
  if (out.inst_gt) compact_instances(*out.inst_gt);
  out.validate();
  return result;
}

Scene random_subsample(const Scene& scene, double keep_ratio, std::uint64_t seed) {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
    throw InvalidArgument("keep_ratio must lie in (0, 1]");
  }
  Rng rng(seed, "random_subsample");
  std::vector<std::size_t> keep;
  for (std::size_t p = 0; p < scene.size(); ++p) {
    if (rng.uniform() < keep_ratio) keep.push_back(p);
  }
  if (keep.empty()) keep.push_back(0);
  Scene out = select_points(scene, keep);
  out.validate();
  return out;
}

}  // namespace icr
