#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace pgagent {

/// Point in normalized screen coordinates, both axes in [0,1].
struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Axis-aligned rectangle in normalized coordinates, half-open on the far edges.
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  [[nodiscard]] bool contains(Point p) const noexcept {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  [[nodiscard]] Point center() const noexcept { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
  bool operator==(const Rect&) const = default;
};

enum class SwipeDirection { up, down, left, right };
enum class Key { back, home, enter };

namespace act {

struct Tap {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Tap&) const = default;
};
struct Swipe {
  SwipeDirection direction = SwipeDirection::up;
  bool operator==(const Swipe&) const = default;
};
struct TypeText {
  std::string text;
  bool operator==(const TypeText&) const = default;
};
struct PressKey {
  Key key = Key::back;
  bool operator==(const PressKey&) const = default;
};
struct ClickElement {
  std::string element_id;
  std::optional<Rect> bbox;
  bool operator==(const ClickElement&) const = default;
};
struct SelectOption {
  std::string element_id;
  std::string value;
  bool operator==(const SelectOption&) const = default;
};
struct TypeInElement {
  std::string element_id;
  std::string text;
  bool operator==(const TypeInElement&) const = default;
};
struct OpenApp {
  std::string name;
  bool operator==(const OpenApp&) const = default;
};
struct StatusComplete {
  bool operator==(const StatusComplete&) const = default;
};
struct StatusImpossible {
  bool operator==(const StatusImpossible&) const = default;
};

}  // namespace act

/// Unified action space covering mobile (tap/swipe/type/key) and web (element) benchmarks.
using Action = std::variant<act::Tap, act::Swipe, act::TypeText, act::PressKey, act::ClickElement,
                            act::SelectOption, act::TypeInElement, act::OpenApp, act::StatusComplete,
                            act::StatusImpossible>;

std::string_view to_string(SwipeDirection d);
std::string_view to_string(Key k);
std::optional<SwipeDirection> parse_direction(std::string_view s);
std::optional<Key> parse_key(std::string_view s);

/// Upper-case verb of the decision grammar ("TAP", "SWIPE", ...).
std::string_view action_verb(const Action& action);

/// Throws Error(invalid_argument) when coordinates leave [0,1] or an element id is empty.
void validate_action(const Action& action);

/// Renders the argument part of an `ACTION:` line, e.g. `TAP 0.5 0.25` or `TYPE "hello"`.
/// Numbers use the shortest representation that round-trips.
std::string format_action(const Action& action);

/// Inverse of format_action. Verbs are case-insensitive. Throws Error(format).
Action parse_action(std::string_view text);

/// Finds the last line of a free-form response that starts with `ACTION:` (ignoring leading
/// whitespace and markdown emphasis) and returns the text after the colon.
std::optional<std::string> find_action_line(std::string_view response);

inline bool is_status(const Action& a) {
  return std::holds_alternative<act::StatusComplete>(a) ||
         std::holds_alternative<act::StatusImpossible>(a);
}

}  // namespace pgagent
