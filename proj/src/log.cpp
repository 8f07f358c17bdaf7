#include "riccati/log.hpp"

#include <cstdlib>
#include <memory>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace riccati {

namespace {

spdlog::level::level_enum level_from_env() {
  const char* env = std::getenv("RICCATI_LOG");
  if (env == nullptr) return spdlog::level::warn;
  const std::string_view value(env);
  if (value == "error") return spdlog::level::err;
  if (value == "info") return spdlog::level::info;
  if (value == "debug") return spdlog::level::debug;
  return spdlog::level::warn;
}

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = spdlog::get("riccati");
  if (!logger) logger = spdlog::stderr_color_mt("riccati");
  logger->set_level(level_from_env());
  logger->set_pattern("[%l] %v");
  return logger;
}

}  // namespace

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = make_logger();
  return *logger;
}

}  // namespace riccati
