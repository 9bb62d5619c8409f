#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "icr/error.hpp"
#include "icr_cli/commands.hpp"
#include "icr_cli/seeds.hpp"

namespace {

using icr::cli::fs::path;

// CLI11 has no optional<path> binding that keeps "unset" distinct from "".
template <typename T>
void opt(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo-label enhancement toolkit for 3D instance segmentation"};
  app.set_version_flag("--version", icr::cli::tool_version());
  app.require_subcommand(1);

  icr::cli::CommonOptions common;
  common.jobs = icr::cli::default_jobs();
  std::string manifest;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--jobs", common.jobs, "Worker threads (default: $ICR_JOBS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", common.quiet, "Only log errors");
    sub->add_option("--manifest", manifest, "Run manifest path (default: <out>/run_manifest.<command>.json)");
  };

  icr::cli::GenOptions gen;
  std::string seeds = "0";
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic scenes with planted predictions");
  opt(gen_cmd, "--config", gen.config, "Generator JSON config");
  opt(gen_cmd, "--corruption", gen.corruption, "Corruption JSON config (overrides the config's)");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seeds", seeds, "Seeds, e.g. 0-99 or 1,3,5");
  opt(gen_cmd, "--corruption-seed", gen.corruption_seed, "Corruption seed (default: scene seed)");
  opt(gen_cmd, "--num-categories", gen.num_categories, "Semantic classes");
  opt(gen_cmd, "--shape", gen.shape, "gaussian-blob or box");
  opt(gen_cmd, "--feature-dim", gen.feature_dim, "Point feature width");
  add_common(gen_cmd);

  icr::cli::EnhanceOptions enh;
  auto* enh_cmd = app.add_subcommand("enhance", "Turn soft masks into filtered pseudo labels");
  enh_cmd->add_option("--scenes", enh.scenes, "Container or directory of containers")->required();
  opt(enh_cmd, "--masks", enh.masks, "Containers holding soft_masks (default: the scenes)");
  opt(enh_cmd, "--config", enh.config, "Enhancement JSON config");
  opt(enh_cmd, "--out", enh.out, "Output directory (default: update in place)");
  opt(enh_cmd, "--report", enh.report, "Combined report JSON file");
  enh_cmd->add_flag("--no-superpoint", enh.no_superpoint, "Skip superpoint refinement");
  opt(enh_cmd, "--min-points", enh.min_points, "Drop instances with fewer points");
  opt(enh_cmd, "--min-confidence", enh.min_confidence, "Drop instances below this confidence");
  opt(enh_cmd, "--fg-threshold", enh.fg_threshold, "Projection foreground bar");
  add_common(enh_cmd);

  icr::cli::InferOptions inf;
  auto* inf_cmd = app.add_subcommand("infer", "Candidates, aggregation and mask reconstruction");
  inf_cmd->add_option("--scenes", inf.scenes, "Container or directory of containers")->required();
  opt(inf_cmd, "--config", inf.config, "JSON with localize/aggregate sections");
  opt(inf_cmd, "--out", inf.out, "Output directory (default: update in place)");
  opt(inf_cmd, "--suppression-radius", inf.suppression_radius, "Candidate suppression radius");
  opt(inf_cmd, "--merge-threshold", inf.merge_threshold, "Mean-linkage merge bar");
  add_common(inf_cmd);

  icr::cli::EvalOptions ev;
  bool json_stdout = false;
  auto* ev_cmd = app.add_subcommand("eval", "mAP/AP50/AP25/mIoU and ambiguity statistics");
  ev_cmd->add_option("--pred", ev.pred, "Predicted containers")->required();
  ev_cmd->add_option("--gt", ev.gt, "Ground-truth containers")->required();
  opt(ev_cmd, "--out", ev.out, "Directory for eval.json");
  ev_cmd->add_flag("--ambiguity", ev.ambiguity, "Add semantic/instance ambiguity statistics");
  ev_cmd->add_option("--ambiguity-threshold", ev.ambiguity_threshold, "Ambiguity bar (fraction)");
  ev_cmd->add_option("--min-confidence", ev.min_confidence, "Prediction filter for ambiguity IoU");
  ev_cmd->add_option("--class-names", ev.class_names, "Names for classes 1..C")->delimiter(',');
  ev_cmd->add_flag("--json", json_stdout, "Print the JSON result instead of the table");
  add_common(ev_cmd);

  icr::cli::EmaOptions ema;
  auto* ema_cmd = app.add_subcommand("ema", "Blend teacher toward student parameters");
  ema_cmd->add_option("--teacher", ema.teacher, "Teacher parameters")->required();
  ema_cmd->add_option("--student", ema.student, "Student parameters")->required();
  ema_cmd->add_option("--alpha", ema.alpha, "Blend factor")->check(CLI::Range(0.0, 1.0));
  ema_cmd->add_option("--steps", ema.steps, "Number of updates");
  ema_cmd->add_option("--out", ema.out, "Output JSON file")->required();
  add_common(ema_cmd);

  icr::cli::AugmentOptions aug;
  auto* aug_cmd = app.add_subcommand("augment", "Weak or strong scene augmentation");
  aug_cmd->add_option("--scenes", aug.scenes, "Container or directory of containers")->required();
  aug_cmd->add_option("--strength", aug.strength, "weak or strong");
  aug_cmd->add_option("--seed", aug.seed, "Augmentation seed");
  opt(aug_cmd, "--config", aug.config, "Augmentation JSON config");
  aug_cmd->add_option("--out", aug.out, "Output directory")->required();
  add_common(aug_cmd);

  CLI11_PARSE(app, argc, argv);
  if (!manifest.empty()) common.manifest = path(manifest);

  const std::string name = app.get_subcommands().front()->get_name();
  icr::cli::Logger log(std::cerr, name, common.quiet);
  try {
    if (gen_cmd->parsed()) {
      gen.seeds = icr::cli::parse_seeds(seeds);
      icr::cli::cmd_gen(gen, common, log);
    } else if (enh_cmd->parsed()) {
      icr::cli::cmd_enhance(enh, common, log);
    } else if (inf_cmd->parsed()) {
      icr::cli::cmd_infer(inf, common, log);
    } else if (ev_cmd->parsed()) {
      icr::cli::EvalOutput out;
      icr::cli::cmd_eval(ev, common, log, &out);
      std::cout << (json_stdout ? out.result.dump(2) + "\n" : out.table);
    } else if (ema_cmd->parsed()) {
      icr::cli::cmd_ema(ema, common, log);
    } else if (aug_cmd->parsed()) {
      icr::cli::cmd_augment(aug, common, log);
    }
  } catch (const std::exception& e) {
    log.error(e.what());
    return 1;
  }
  return 0;
}
