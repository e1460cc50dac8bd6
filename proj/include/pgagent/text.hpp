#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the parsers and renderers.
namespace pgagent::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
/// Collapses every whitespace run to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, std::string_view sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Double-quoted rendering with backslash escapes for `"`, `\` and control characters.
std::string quote(std::string_view s);

/// Splits on whitespace, honoring double-quoted tokens produced by quote().
/// Throws Error(format) on an unterminated quote.
std::vector<std::string> tokenize(std::string_view s);

std::string truncate(std::string_view s, std::size_t max_chars, std::string_view ellipsis = "...");

}  // namespace pgagent::text
