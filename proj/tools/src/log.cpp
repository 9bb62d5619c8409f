#include "icr_cli/log.hpp"

#include <chrono>
#include <ostream>

namespace icr::cli {

Logger::Logger(std::ostream& out, std::string command, bool quiet)
    : out_(&out), command_(std::move(command)), quiet_(quiet) {}

void Logger::info(std::string_view msg, nlohmann::json fields) {
  if (!quiet_) write("info", msg, std::move(fields));
}

void Logger::error(std::string_view msg, nlohmann::json fields) {
  write("error", msg, std::move(fields));
}

void Logger::write(std::string_view level, std::string_view msg, nlohmann::json fields) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  nlohmann::ordered_json line;
  line["ts"] = std::chrono::duration<double>(now).count();
  line["level"] = level;
  line["cmd"] = command_;
  line["msg"] = msg;
  for (auto& [k, v] : fields.items()) line[k] = v;
  const std::lock_guard lock(mu_);
  *out_ << line.dump() << '\n';
  out_->flush();
}

}  // namespace icr::cli
