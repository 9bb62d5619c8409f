#include "icr_cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "icr/dmg.hpp"
#include "icr/ema.hpp"
#include "icr/error.hpp"
#include "icr/kernel_infer.hpp"
#include "icr/metrics.hpp"
#include "icr/synthgen.hpp"

namespace icr::cli {
namespace {

// Guarantees a manifest for failed runs too.
template <typename Body>
RunManifest with_manifest(RunManifest m, const fs::path& file, Body&& body) {
  const Stopwatch clock;
  try {
    body(m);
  } catch (const std::exception& e) {
    m.ok = false;
    m.error = e.what();
    m.duration_s = clock.seconds();
    try {
      m.write(file);
    } catch (...) {
    }
    throw;
  }
  m.duration_s = clock.seconds();
  m.write(file);
  return m;
}

// Named per command so an in-place step keeps the earlier steps' manifests.
fs::path manifest_file(const CommonOptions& common, const fs::path& dir, const std::string& command) {
  return common.manifest ? *common.manifest : dir / ("run_manifest." + command + ".json");
}

void write_json(const fs::path& file, const nlohmann::json& j) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

SoftMaskSet masks_of(const Container& c) { return SoftMaskSet(c.matrix_f32("soft_masks")); }

std::optional<SemanticScores> semantics_of(const Container& c) {
  if (!c.has("sem_scores")) return std::nullopt;
  return SemanticScores{c.matrix_f32("sem_scores")};
}

HardLabeling gt_labeling(const Scene& s) {
  if (!s.inst_gt || !s.sem_gt) {
    throw InvalidArgument("scene '" + s.scene_id + "' has no inst_gt/sem_gt");
  }
  auto gt = labeling_from_ids(*s.inst_gt);
  gt.inst_category = vote_categories(gt, *s.sem_gt);
  return gt;
}

std::string fixed(double v, int width, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << std::setw(width) << v;
  return os.str();
}

}  // namespace

int default_jobs() {
  if (const char* env = std::getenv("ICR_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return 1;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const auto i = next.fetch_add(1);
        if (i >= count) return;
        {
          const std::lock_guard lock(mu);
          if (failure) return;
        }
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<fs::path> list_containers(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("no such directory '" + dir.string() + "'");
  if (Container::is_container(dir)) return {dir};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && Container::is_container(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no ICRS containers under '" + dir.string() + "'");
  return out;
}

nlohmann::json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed JSON in " + file.string() + ": " + e.what());
  }
}

// gen ------------------------------------------------------------------------

RunManifest cmd_gen(const GenOptions& o, const CommonOptions& common, Logger& log) {
  RunManifest m;
  m.command = "gen";
  m.outputs = {o.out.string()};
  if (o.config) m.config_paths.push_back(o.config->string());
  if (o.corruption) m.config_paths.push_back(o.corruption->string());
  if (o.seeds.size() == 1) m.seed = o.seeds.front();
  fs::create_directories(o.out);

  const auto manifest_path = manifest_file(common, o.out, m.command);
  return with_manifest(std::move(m), manifest_path, [&](RunManifest&) {
    GenConfig base;
    std::optional<CorruptionConfig> corruption;
    if (o.config) {
      const auto j = read_json_file(*o.config);
      from_json(j, base);
      if (j.contains("corruption")) corruption = j["corruption"].get<CorruptionConfig>();
    }
    if (o.corruption) corruption = read_json_file(*o.corruption).get<CorruptionConfig>();
    if (o.num_categories) base.num_categories = *o.num_categories;
    if (o.feature_dim) base.feature_dim = *o.feature_dim;
    if (o.shape) from_json(nlohmann::json{{"shape", *o.shape}}, base);
    base.validate();
    if (corruption) corruption->validate();

    parallel_for(o.seeds.size(), common.jobs, [&](std::size_t k) {
      GenConfig cfg = base;
      cfg.seed = o.seeds[k];
      const auto ideal = generate_scene(cfg);
      Container c;
      put_scene(c, ideal.scene);
      nlohmann::json gen_json = cfg;
      c.attrs["generator"] = gen_json;
      c.put("features", ideal.features);
      put_kernels(c, ideal.kernels);
      if (corruption) {
        const auto bad = corrupt_predictions(ideal, *corruption, o.corruption_seed.value_or(cfg.seed));
        c.put("soft_masks", bad.masks.scores);
        c.put_vector("heatmap", bad.heatmap.values);
        c.put("sem_scores", bad.semantics.logits);
        nlohmann::json cj = *corruption;
        c.attrs["corruption"] = cj;
        c.attrs["attenuated"] = bad.attenuated;
        c.attrs["duplicate_of"] = bad.duplicate_of;
      } else {
        c.put("soft_masks", ideal.masks.scores);
        c.put_vector("heatmap", ideal.heatmap.values);
        c.put("sem_scores", ideal.semantics.logits);
      }
      const auto dir = o.out / ("scene_" + std::to_string(cfg.seed));
      c.save(dir);
      log.info("wrote scene", {{"scene", c.scene_id},
                               {"points", ideal.scene.size()},
                               {"instances", ideal.scene.instance_count()},
                               {"dir", dir.string()}});
    });
  });
}

// enhance --------------------------------------------------------------------

RunManifest cmd_enhance(const EnhanceOptions& o, const CommonOptions& common, Logger& log) {
  RunManifest m;
  m.command = "enhance";
  m.inputs = {o.scenes.string()};
  if (o.masks) m.inputs.push_back(o.masks->string());
  if (o.config) m.config_paths.push_back(o.config->string());
  const fs::path out_root = o.out.value_or(o.scenes);
  m.outputs = {out_root.string()};
  if (o.report) m.outputs.push_back(o.report->string());
  if (o.out) fs::create_directories(*o.out);

  const auto manifest_path = manifest_file(common, out_root, m.command);
  return with_manifest(std::move(m), manifest_path, [&](RunManifest&) {
    EnhanceConfig cfg;
    if (o.config) cfg = read_json_file(*o.config).get<EnhanceConfig>();
    if (o.no_superpoint) cfg.use_superpoints = false;
    if (o.min_points) cfg.min_points = *o.min_points;
    if (o.min_confidence) cfg.min_confidence = *o.min_confidence;
    if (o.fg_threshold) cfg.fg_threshold = *o.fg_threshold;
    cfg.validate();

    const auto dirs = list_containers(o.scenes);
    const bool single = Container::is_container(o.scenes);
    std::vector<nlohmann::json> reports(dirs.size());
    parallel_for(dirs.size(), common.jobs, [&](std::size_t k) {
      Container c = Container::load(dirs[k]);
      const Scene scene = scene_from_container(c);
      SoftMaskSet masks;
      if (o.masks) {
        const auto src = Container::is_container(*o.masks) ? *o.masks : *o.masks / dirs[k].filename();
        masks = masks_of(Container::load(src));
      } else {
        masks = masks_of(c);
      }
      const auto sem = semantics_of(c);
      const auto pseudo = generate_pseudo_labels(masks, scene, cfg, sem ? &*sem : nullptr);
      const auto naive = naive_pseudo_labels(masks, cfg.fg_threshold, sem ? &*sem : nullptr);

      const auto& labels = pseudo.labels;
      c.put_vector("pseudo_inst", labels.inst_id);
      c.put_vector("pseudo_category", labels.inst_category);
      c.put_vector("pseudo_confidence", labels.inst_confidence);
      c.put_vector("naive_inst", naive.inst_id);
      c.attrs["pseudo_instances"] = labels.num_instances;

      nlohmann::json report;
      report["scene"] = c.scene_id;
      report["config"] = cfg;
      report["report"] = pseudo.report.to_json();
      report["instances"] = labels.num_instances;
      if (scene.inst_gt) {
        report["rand_index"] = rand_index(labels.inst_id, *scene.inst_gt);
        report["naive_rand_index"] = rand_index(naive.inst_id, *scene.inst_gt);
      }
      const auto dir = o.out ? (single ? *o.out : *o.out / dirs[k].filename()) : dirs[k];
      c.save(dir);
      write_json(dir / "enhance_report.json", report);
      log.info("enhanced scene", {{"scene", c.scene_id},
                                  {"instances_in", pseudo.report.instances_in},
                                  {"instances_out", pseudo.report.instances_out},
                                  {"dir", dir.string()}});
      reports[k] = std::move(report);
    });
    if (o.report) write_json(*o.report, reports);
  });
}

// infer ----------------------------------------------------------------------

RunManifest cmd_infer(const InferOptions& o, const CommonOptions& common, Logger& log) {
  RunManifest m;
  m.command = "infer";
  m.inputs = {o.scenes.string()};
  if (o.config) m.config_paths.push_back(o.config->string());
  const fs::path out_root = o.out.value_or(o.scenes);
  m.outputs = {out_root.string()};
  if (o.out) fs::create_directories(*o.out);

  const auto manifest_path = manifest_file(common, out_root, m.command);
  return with_manifest(std::move(m), manifest_path, [&](RunManifest&) {
    LocalizeConfig loc;
    AggregateConfig agg;
    if (o.config) {
      const auto j = read_json_file(*o.config);
      if (j.contains("localize")) loc = j["localize"].get<LocalizeConfig>();
      if (j.contains("aggregate")) {
        agg.merge_threshold = j["aggregate"].value("merge_threshold", agg.merge_threshold);
        agg.kernel_gain = j["aggregate"].value("kernel_gain", agg.kernel_gain);
      }
    }
    if (o.suppression_radius) loc.suppression_radius = *o.suppression_radius;
    if (o.merge_threshold) agg.merge_threshold = *o.merge_threshold;
    loc.validate();

    const auto dirs = list_containers(o.scenes);
    const bool single = Container::is_container(o.scenes);
    parallel_for(dirs.size(), common.jobs, [&](std::size_t k) {
      Container c = Container::load(dirs[k]);
      const Scene scene = scene_from_container(c);
      const Heatmap heat{c.vector_f32("heatmap")};
      const MatrixF features = c.matrix_f32("features");
      if (heat.size() != scene.size() || features.rows() != scene.size()) {
        throw ShapeError("scene '" + c.scene_id + "': heatmap/features do not match coords");
      }
      const auto cands = find_candidates(heat, scene.coords, features, loc);
      const auto aff = feature_affinity(cands);
      const auto result = aggregate_candidates(cands, aff, scene.coords, agg);
      const auto masks = reconstruct_masks(result.kernels, features, scene.coords);
      c.put("soft_masks", masks.scores);
      put_kernels(c, result.kernels);
      c.attrs["candidates"] = cands.size();
      const auto dir = o.out ? (single ? *o.out : *o.out / dirs[k].filename()) : dirs[k];
      c.save(dir);
      log.info("inferred scene", {{"scene", c.scene_id},
                                  {"candidates", cands.size()},
                                  {"instances", result.kernels.size()},
                                  {"dir", dir.string()}});
    });
  });
}

// eval -----------------------------------------------------------------------

namespace {

struct EvalScene {
  std::string name;
  SceneInstances instances;
  std::vector<std::int32_t> sem_pred;
  std::vector<std::int32_t> sem_gt;
  std::vector<InstancePrediction> all_predictions;
  int num_categories = 0;
};

EvalScene load_eval_scene(const fs::path& pred_dir, const fs::path& gt_dir) {
  const Container pc = Container::load(pred_dir);
  const Scene gt_scene = load_scene(gt_dir);
  EvalScene s;
  s.name = pred_dir.filename().string();
  s.num_categories = gt_scene.num_categories;
  s.instances.gt = gt_labeling(gt_scene);
  s.sem_gt = *gt_scene.sem_gt;

  HardLabeling pred;
  if (pc.has("pseudo_inst")) {
    pred = HardLabeling(pc.vector_i32("pseudo_inst"), 0);
    pred.inst_category = pc.vector_i32("pseudo_category");
    pred.inst_confidence = pc.vector_f32("pseudo_confidence");
    pred.num_instances = static_cast<int>(pred.inst_category.size());
  } else {
    const Scene ps = scene_from_container(pc);
    pred = gt_labeling(ps);
  }
  if (pred.size() != gt_scene.size()) {
    throw ShapeError("scene '" + s.name + "': prediction and GT point counts differ");
  }
  s.instances.predictions = predictions_from_labeling(pred);
  s.all_predictions = s.instances.predictions;

  if (pc.has("sem_scores")) {
    s.sem_pred = SemanticScores{pc.matrix_f32("sem_scores")}.argmax();
  } else {
    s.sem_pred.assign(pred.size(), kBackground);
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const auto id = pred.inst_id[p];
      if (id >= 1) {
        s.sem_pred[p] = pred.inst_category.empty() ? 1 : pred.inst_category[static_cast<std::size_t>(id - 1)];
      }
    }
  }
  if (s.sem_pred.size() != s.sem_gt.size()) {
    throw ShapeError("scene '" + s.name + "': semantic prediction length differs from GT");
  }
  return s;
}

nlohmann::json ambiguity_summary(const std::vector<double>& acc, const std::vector<double>& iou,
                                 double threshold) {
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  const auto rate = [&](const std::vector<double>& v) {
    std::size_t k = 0;
    for (double x : v) k += x < threshold ? 1 : 0;
    return v.empty() ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(v.size());
  };
  return {{"mAcc", 100.0 * mean(acc)},
          {"sem_ambiguity_rate", rate(acc)},
          {"mIoU_inst", 100.0 * mean(iou)},
          {"inst_ambiguity_rate", rate(iou)},
          {"instances", acc.size()}};
}

}  // namespace

RunManifest cmd_eval(const EvalOptions& o, const CommonOptions& common, Logger& log,
                     EvalOutput* output) {
  RunManifest m;
  m.command = "eval";
  m.inputs = {o.pred.string(), o.gt.string()};
  const fs::path out_root = o.out.value_or(fs::current_path());
  if (o.out) {
    m.outputs = {(*o.out / "eval.json").string()};
    fs::create_directories(*o.out);
  }

  const auto manifest_path = manifest_file(common, out_root, m.command);
  return with_manifest(std::move(m), manifest_path, [&](RunManifest&) {
    const auto pred_dirs = list_containers(o.pred);
    const auto gt_dirs = list_containers(o.gt);
    std::vector<std::pair<fs::path, fs::path>> pairs;
    if (pred_dirs.size() == 1 && gt_dirs.size() == 1 && Container::is_container(o.pred)) {
      pairs.emplace_back(pred_dirs[0], gt_dirs[0]);
    } else {
      std::map<std::string, fs::path> gt_by_name;
      for (const auto& d : gt_dirs) gt_by_name[d.filename().string()] = d;
      std::set<std::string> pred_names;
      for (const auto& d : pred_dirs) {
        const auto name = d.filename().string();
        pred_names.insert(name);
        const auto it = gt_by_name.find(name);
        if (it == gt_by_name.end()) {
          throw InvalidArgument("scene-set mismatch: '" + name + "' has no ground truth");
        }
        pairs.emplace_back(d, it->second);
      }
      for (const auto& [name, dir] : gt_by_name) {
        if (!pred_names.count(name)) {
          throw InvalidArgument("scene-set mismatch: '" + name + "' has no prediction");
        }
      }
    }

    std::vector<EvalScene> scenes(pairs.size());
    parallel_for(pairs.size(), common.jobs,
                 [&](std::size_t k) { scenes[k] = load_eval_scene(pairs[k].first, pairs[k].second); });

    const auto thresholds = map_thresholds();
    const AmbiguityOptions amb_opts{o.ambiguity_threshold, o.min_confidence};
    nlohmann::json result;
    result["scenes"] = nlohmann::json::array();
    std::vector<SceneInstances> pooled;
    std::vector<std::int32_t> sem_pred_all, sem_gt_all;
    std::vector<double> acc_all, iou_all;
    int num_categories = 0;
    std::ostringstream table;
    table << std::left << std::setw(20) << "scene" << std::right << std::setw(8) << "mAP"
          << std::setw(8) << "AP50" << std::setw(8) << "AP25" << std::setw(8) << "mIoU" << '\n';
    table << std::string(52, '-') << '\n';
    const auto row = [&](const std::string& name, double map, double ap50, double ap25, double miou) {
      table << std::left << std::setw(20) << name.substr(0, 19) << std::right << fixed(100 * map, 8, 1)
            << fixed(100 * ap50, 8, 1) << fixed(100 * ap25, 8, 1) << fixed(100 * miou, 8, 1) << '\n';
    };

    for (const auto& s : scenes) {
      const auto r = average_precision(s.instances.predictions, s.instances.gt, thresholds);
      const double miou = mean_iou(s.sem_pred, s.sem_gt, s.num_categories);
      auto j = r.to_json();
      j["scene"] = s.name;
      j["mIoU"] = miou;
      if (o.ambiguity) {
        const auto a = ambiguity_stats(s.sem_pred, s.all_predictions, s.instances.gt, s.sem_gt, amb_opts);
        j["ambiguity"] = a.to_json();
        acc_all.insert(acc_all.end(), a.instance_accuracy.begin(), a.instance_accuracy.end());
        iou_all.insert(iou_all.end(), a.instance_best_iou.begin(), a.instance_best_iou.end());
      }
      result["scenes"].push_back(j);
      row(s.name, r.mAP, r.AP50, r.AP25, miou);
      pooled.push_back(s.instances);
      sem_pred_all.insert(sem_pred_all.end(), s.sem_pred.begin(), s.sem_pred.end());
      sem_gt_all.insert(sem_gt_all.end(), s.sem_gt.begin(), s.sem_gt.end());
      num_categories = std::max(num_categories, s.num_categories);
    }
    const auto total = average_precision(pooled, thresholds);
    const double miou = mean_iou(sem_pred_all, sem_gt_all, num_categories);
    auto agg = total.to_json();
    agg["mIoU"] = miou;
    agg["scenes"] = scenes.size();
    if (o.ambiguity) agg["ambiguity"] = ambiguity_summary(acc_all, iou_all, o.ambiguity_threshold);
    result["aggregate"] = agg;
    table << std::string(52, '-') << '\n';
    row("all", total.mAP, total.AP50, total.AP25, miou);
    if (!total.per_class.empty()) {
      table << '\n';
      for (const auto& [c, v] : total.per_class) {
        const auto idx = static_cast<std::size_t>(c - 1);
        const std::string name =
            idx < o.class_names.size() ? o.class_names[idx] : "class " + std::to_string(c);
        table << std::left << std::setw(20) << name.substr(0, 19) << std::right
              << fixed(100 * v[0], 8, 1) << fixed(100 * v[1], 8, 1) << fixed(100 * v[2], 8, 1) << '\n';
      }
    }
    if (o.ambiguity) {
      const auto& a = agg["ambiguity"];
      table << '\n'
            << "mAcc " << fixed(a["mAcc"].get<double>(), 6, 1) << "  sem ambiguity "
            << fixed(a["sem_ambiguity_rate"].get<double>(), 6, 1) << "%  mIoU(inst) "
            << fixed(a["mIoU_inst"].get<double>(), 6, 1) << "  inst ambiguity "
            << fixed(a["inst_ambiguity_rate"].get<double>(), 6, 1) << "%\n";
    }
    if (o.out) write_json(*o.out / "eval.json", result);
    log.info("evaluated", {{"scenes", scenes.size()}, {"mAP", total.mAP}, {"AP50", total.AP50}});
    if (output) *output = EvalOutput{result, table.str()};
  });
}

// ema ------------------------------------------------------------------------

namespace {

ParamVector read_params(const fs::path& p) {
  if (fs::is_directory(p)) return params_from_container(Container::load(p));
  const auto j = read_json_file(p);
  ParamVector v;
  v.values = j.at("values").get<std::vector<double>>();
  v.step = j.value("step", std::uint64_t{0});
  return v;
}

}  // namespace

RunManifest cmd_ema(const EmaOptions& o, const CommonOptions& common, Logger& log) {
  RunManifest m;
  m.command = "ema";
  m.inputs = {o.teacher.string(), o.student.string()};
  m.outputs = {o.out.string()};
  const fs::path dir = o.out.has_parent_path() ? o.out.parent_path() : fs::current_path();

  const auto manifest_path = manifest_file(common, dir, m.command);
  return with_manifest(std::move(m), manifest_path, [&](RunManifest&) {
    const auto teacher = read_params(o.teacher);
    const auto student = read_params(o.student);
    if (teacher.values.size() != student.values.size()) {
      throw ShapeError("ema: teacher has " + std::to_string(teacher.values.size()) +
                       " parameters, student has " + std::to_string(student.values.size()));
    }
    ParamVector t = teacher;
    for (std::uint64_t k = 0; k < o.steps; ++k) t = ema_update(t, student, o.alpha);

    std::vector<double> closed(t.values.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < closed.size(); ++i) {
      closed[i] = ema_closed_form(teacher.values[i], student.values[i], o.alpha, o.steps);
      const double scale = std::max(std::abs(closed[i]), 1e-300);
      worst = std::max(worst, std::abs(t.values[i] - closed[i]) / scale);
    }
    nlohmann::ordered_json j;
    j["values"] = t.values;
    j["step"] = t.step;
    j["alpha"] = o.alpha;
    j["steps"] = o.steps;
    j["closed_form"] = closed;
    j["max_rel_error"] = worst;
    if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
    std::ofstream out(o.out);
    if (!out) throw IoError("cannot write " + o.out.string());
    out << j.dump(2) << '\n';
    log.info("blended", {{"steps", o.steps}, {"alpha", o.alpha}, {"max_rel_error", worst}});
  });
}

// augment --------------------------------------------------------------------

RunManifest cmd_augment(const AugmentOptions& o, const CommonOptions& common, Logger& log) {
  RunManifest m;
  m.command = "augment";
  m.inputs = {o.scenes.string()};
  m.outputs = {o.out.string()};
  m.seed = o.seed;
  if (o.config) m.config_paths.push_back(o.config->string());
  fs::create_directories(o.out);

  const auto manifest_path = manifest_file(common, o.out, m.command);
  return with_manifest(std::move(m), manifest_path, [&](RunManifest&) {
    AugmentStrength strength;
    if (o.strength == "weak") {
      strength = AugmentStrength::kWeak;
    } else if (o.strength == "strong") {
      strength = AugmentStrength::kStrong;
    } else {
      throw InvalidArgument("strength must be 'weak' or 'strong', got '" + o.strength + "'");
    }
    AugmentConfig cfg;
    if (o.config) cfg = read_json_file(*o.config).get<AugmentConfig>();

    const auto dirs = list_containers(o.scenes);
    const bool single = Container::is_container(o.scenes);
    parallel_for(dirs.size(), common.jobs, [&](std::size_t k) {
      Container c = Container::load(dirs[k]);
      const Scene scene = scene_from_container(c);
      put_scene(c, augment(scene, strength, o.seed, cfg));
      c.attrs["augment"] = {{"strength", o.strength}, {"seed", o.seed}};
      const auto dir = single ? o.out : o.out / dirs[k].filename();
      c.save(dir);
      log.info("augmented scene", {{"scene", c.scene_id}, {"dir", dir.string()}});
    });
  });
}

}  // namespace icr::cli
