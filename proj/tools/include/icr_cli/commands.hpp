#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icr/container.hpp"
#include "icr_cli/log.hpp"
#include "icr_cli/manifest.hpp"

namespace icr::cli {

namespace fs = std::filesystem;

/// Shared by every subcommand.
struct CommonOptions {
  int jobs = 1;
  bool quiet = false;
  std::optional<fs::path> manifest;  // default: <out>/run_manifest.<command>.json
};

/// Worker count from ICR_JOBS, else 1.
int default_jobs();

/// Runs fn(0..count-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

/// `dir` itself when it is a container, else its container subdirectories
/// in name order.
std::vector<fs::path> list_containers(const fs::path& dir);

nlohmann::json read_json_file(const fs::path& file);

struct GenOptions {
  std::optional<fs::path> config;      // GenConfig keys, optional "corruption" object
  std::optional<fs::path> corruption;  // CorruptionConfig keys; overrides the config's
  fs::path out;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::uint64_t> corruption_seed;  // default: the scene seed
  std::optional<int> num_categories;
  std::optional<std::string> shape;
  std::optional<int> feature_dim;
};

struct EnhanceOptions {
  fs::path scenes;
  std::optional<fs::path> masks;  // containers holding soft_masks, matched by name
  std::optional<fs::path> config;
  std::optional<fs::path> out;    // default: update the input containers
  std::optional<fs::path> report;  // combined report for all scenes
  bool no_superpoint = false;
  std::optional<int> min_points;
  std::optional<double> min_confidence;
  std::optional<double> fg_threshold;
};

struct InferOptions {
  fs::path scenes;
  std::optional<fs::path> config;  // {"localize": {...}, "aggregate": {...}}
  std::optional<fs::path> out;
  std::optional<double> suppression_radius;
  std::optional<double> merge_threshold;
};

struct EvalOptions {
  fs::path pred;
  fs::path gt;
  std::optional<fs::path> out;  // eval.json and run_manifest.eval.json
  bool ambiguity = false;
  double ambiguity_threshold = 0.25;
  double min_confidence = 0.5;
  std::vector<std::string> class_names;
};

struct EvalOutput {
  nlohmann::json result;
  std::string table;
};

struct EmaOptions {
  fs::path teacher;  // JSON {"values": [...], "step": k} or a container with "params"
  fs::path student;
  double alpha = 0.999;
  std::uint64_t steps = 1;
  fs::path out;      // JSON file
};

struct AugmentOptions {
  fs::path scenes;
  std::string strength = "weak";
  std::uint64_t seed = 0;
  std::optional<fs::path> config;  // AugmentConfig keys
  fs::path out;
};

RunManifest cmd_gen(const GenOptions& o, const CommonOptions& common, Logger& log);
RunManifest cmd_enhance(const EnhanceOptions& o, const CommonOptions& common, Logger& log);
RunManifest cmd_infer(const InferOptions& o, const CommonOptions& common, Logger& log);
RunManifest cmd_eval(const EvalOptions& o, const CommonOptions& common, Logger& log,
                     EvalOutput* output = nullptr);
RunManifest cmd_ema(const EmaOptions& o, const CommonOptions& common, Logger& log);
RunManifest cmd_augment(const AugmentOptions& o, const CommonOptions& common, Logger& log);

}  // namespace icr::cli
