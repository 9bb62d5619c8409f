#include "icr_cli/manifest.hpp"

#include <fstream>

#include "icr/error.hpp"

#ifndef ICR_VERSION
#define ICR_VERSION "0.0.0"
#endif

namespace icr::cli {

std::string tool_version() { return ICR_VERSION; }

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_paths"] = config_paths;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  j["version"] = version;
  j["duration_s"] = duration_s;
  j["ok"] = ok;
  if (!ok) j["error"] = error;
  return j;
}

void RunManifest::write(const std::filesystem::path& file) const {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace icr::cli
