#pragma once

#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace icr::cli {

/// JSON-lines event log. One object per line; `--quiet` drops everything
/// below error level.
class Logger {
 public:
  Logger(std::ostream& out, std::string command, bool quiet);

  void info(std::string_view msg, nlohmann::json fields = nlohmann::json::object());
  void error(std::string_view msg, nlohmann::json fields = nlohmann::json::object());

 private:
  void write(std::string_view level, std::string_view msg, nlohmann::json fields);

  std::ostream* out_;
  std::string command_;
  bool quiet_;
  std::mutex mu_;
};

}  // namespace icr::cli
