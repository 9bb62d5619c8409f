#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace icr::cli {

std::string tool_version();

/// Record of one CLI invocation, written as run_manifest.<command>.json.
struct RunManifest {
  std::string command;
  std::vector<std::string> config_paths;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<std::uint64_t> seed;
  std::string version = tool_version();
  double duration_s = 0.0;
  bool ok = true;
  std::string error;

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& file) const;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace icr::cli
