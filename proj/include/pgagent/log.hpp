#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

// Structured key=value diagnostics on standard error.
namespace pgagent::log {

enum class Level { debug, info, warn, error, off };

Level parse_level(std::string_view s);
std::string_view to_string(Level level);
void set_level(Level level);
Level level();

using Fields = std::vector<std::pair<std::string, std::string>>;

template <class T>
std::pair<std::string, std::string> kv(std::string key, const T& value) {
  return {std::move(key), fmt::format("{}", value)};
}

/// Renders "level=<l> event=<e> k=v ..." with values quoted when they contain spaces,
/// quotes or '='.
std::string render(Level level, std::string_view event, const Fields& fields);

void emit(Level level, std::string_view event, const Fields& fields = {});
inline void debug(std::string_view event, const Fields& fields = {}) { emit(Level::debug, event, fields); }
inline void info(std::string_view event, const Fields& fields = {}) { emit(Level::info, event, fields); }
inline void warn(std::string_view event, const Fields& fields = {}) { emit(Level::warn, event, fields); }
inline void error(std::string_view event, const Fields& fields = {}) { emit(Level::error, event, fields); }

}  // namespace pgagent::log
