#include "pgagent/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "pgagent/error.hpp"
#include "pgagent/text.hpp"

namespace pgagent::log {

namespace {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = std::make_shared<spdlog::logger>("pgagent", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("%v");
    l->set_level(spdlog::level::warn);
    l->flush_on(spdlog::level::trace);
    return l;
  }();
  return *instance;
}

spdlog::level::level_enum to_spd(Level level) {
  switch (level) {
    case Level::debug:
      return spdlog::level::debug;
    case Level::info:
      return spdlog::level::info;
    case Level::warn:
      return spdlog::level::warn;
    case Level::error:
      return spdlog::level::err;
    case Level::off:
      break;
  }
  return spdlog::level::off;
}

bool needs_quotes(std::string_view v) {
  if (v.empty()) return true;
  for (char c : v) {
    if (c == ' ' || c == '"' || c == '=' || c == '\t' || c == '\n' || c == '\\') return true;
  }
  return false;
}

}  // namespace

Level parse_level(std::string_view s) {
  const auto l = text::lower(s);
  if (l == "debug") return Level::debug;
  if (l == "info") return Level::info;
  if (l == "warn" || l == "warning") return Level::warn;
  if (l == "error") return Level::error;
  if (l == "off") return Level::off;
  fail(ErrorKind::invalid_argument, fmt::format("unknown log level '{}' (debug|info|warn|error|off)", s));
}

std::string_view to_string(Level level) {
  switch (level) {
    case Level::debug:
      return "debug";
    case Level::info:
      return "info";
    case Level::warn:
      return "warn";
    case Level::error:
      return "error";
    case Level::off:
      break;
  }
  return "off";
}

void set_level(Level level) { logger().set_level(to_spd(level)); }

Level level() {
  switch (logger().level()) {
    case spdlog::level::trace:
    case spdlog::level::debug:
      return Level::debug;
    case spdlog::level::info:
      return Level::info;
    case spdlog::level::warn:
      return Level::warn;
    case spdlog::level::err:
    case spdlog::level::critical:
      return Level::error;
    default:
      return Level::off;
  }
}

std::string render(Level level, std::string_view event, const Fields& fields) {
  std::string line = fmt::format("level={} event={}", to_string(level), event);
  for (const auto& [k, v] : fields) {
    line += fmt::format(" {}={}", k, needs_quotes(v) ? text::quote(v) : v);
  }
  return line;
}

void emit(Level level, std::string_view event, const Fields& fields) {
  auto& l = logger();
  const auto spd = to_spd(level);
  if (level == Level::off || !l.should_log(spd)) return;
  l.log(spd, render(level, event, fields));
}

}  // namespace pgagent::log
