#include "pgagent/action.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/text.hpp"

namespace pgagent {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string num(double v) { return fmt::format("{}", v); }

double parse_number(const std::string& token, std::string_view context) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
    fail(ErrorKind::format, fmt::format("bad number '{}' in action '{}'", token, context));
  }
  return value;
}

// Element ids are bare tokens unless they need quoting.
std::string element_token(const std::string& id) {
  bool bare = !id.empty() && id.front() != '"' &&
              id.find_first_of(" \t\r\n\"\\") == std::string::npos;
  return bare ? id : text::quote(id);
}

bool unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(SwipeDirection d) {
  switch (d) {
    case SwipeDirection::up: return "up";
    case SwipeDirection::down: return "down";
    case SwipeDirection::left: return "left";
    case SwipeDirection::right: return "right";
  }
  return "up";
}

std::string_view to_string(Key k) {
  switch (k) {
    case Key::back: return "back";
    case Key::home: return "home";
    case Key::enter: return "enter";
  }
  return "back";
}

std::optional<SwipeDirection> parse_direction(std::string_view s) {
  auto l = text::lower(s);
  if (l == "up") return SwipeDirection::up;
  if (l == "down") return SwipeDirection::down;
  if (l == "left") return SwipeDirection::left;
  if (l == "right") return SwipeDirection::right;
  return std::nullopt;
}

std::optional<Key> parse_key(std::string_view s) {
  auto l = text::lower(s);
  if (l == "back") return Key::back;
  if (l == "home") return Key::home;
  if (l == "enter") return Key::enter;
  return std::nullopt;
}

std::string_view action_verb(const Action& action) {
  return std::visit(overloaded{
                        [](const act::Tap&) -> std::string_view { return "TAP"; },
                        [](const act::Swipe&) -> std::string_view { return "SWIPE"; },
                        [](const act::TypeText&) -> std::string_view { return "TYPE"; },
                        [](const act::PressKey&) -> std::string_view { return "PRESS"; },
                        [](const act::ClickElement&) -> std::string_view { return "CLICK"; },
                        [](const act::SelectOption&) -> std::string_view { return "SELECT"; },
                        [](const act::TypeInElement&) -> std::string_view { return "TYPE_IN"; },
                        [](const act::OpenApp&) -> std::string_view { return "OPEN_APP"; },
                        [](const act::StatusComplete&) -> std::string_view { return "COMPLETE"; },
                        [](const act::StatusImpossible&) -> std::string_view { return "IMPOSSIBLE"; },
                    },
                    action);
}

void validate_action(const Action& action) {
  auto check_rect = [](const Rect& r) {
    if (!unit_interval(r.x0) || !unit_interval(r.y0) || !unit_interval(r.x1) ||
        !unit_interval(r.y1) || r.x0 > r.x1 || r.y0 > r.y1) {
      fail(ErrorKind::invalid_argument, "bounding box outside the unit square");
    }
  };
  auto check_id = [](const std::string& id) {
    if (id.empty()) fail(ErrorKind::invalid_argument, "empty element id");
  };
  std::visit(overloaded{
                 [](const act::Tap& a) {
                   if (!unit_interval(a.x) || !unit_interval(a.y)) {
                     fail(ErrorKind::invalid_argument,
                          fmt::format("tap ({}, {}) outside [0,1]", a.x, a.y));
                   }
                 },
                 [&](const act::ClickElement& a) {
                   check_id(a.element_id);
                   if (a.bbox) check_rect(*a.bbox);
                 },
                 [&](const act::SelectOption& a) { check_id(a.element_id); },
                 [&](const act::TypeInElement& a) { check_id(a.element_id); },
                 [](const act::OpenApp& a) {
                   if (a.name.empty()) fail(ErrorKind::invalid_argument, "empty app name");
                 },
                 [](const auto&) {},
             },
             action);
}

std::string format_action(const Action& action) {
  return std::visit(
      overloaded{
          [](const act::Tap& a) { return fmt::format("TAP {} {}", num(a.x), num(a.y)); },
          [](const act::Swipe& a) { return fmt::format("SWIPE {}", to_string(a.direction)); },
          [](const act::TypeText& a) { return "TYPE " + text::quote(a.text); },
          [](const act::PressKey& a) { return fmt::format("PRESS {}", to_string(a.key)); },
          [](const act::ClickElement& a) {
            std::string out = "CLICK " + element_token(a.element_id);
            if (a.bbox) {
              out += fmt::format(" {} {} {} {}", num(a.bbox->x0), num(a.bbox->y0), num(a.bbox->x1),
                                 num(a.bbox->y1));
            }
            return out;
          },
          [](const act::SelectOption& a) {
            return "SELECT " + element_token(a.element_id) + " " + text::quote(a.value);
          },
          [](const act::TypeInElement& a) {
            return "TYPE_IN " + element_token(a.element_id) + " " + text::quote(a.text);
          },
          [](const act::OpenApp& a) { return "OPEN_APP " + text::quote(a.name); },
          [](const act::StatusComplete&) { return std::string("COMPLETE"); },
          [](const act::StatusImpossible&) { return std::string("IMPOSSIBLE"); },
      },
      action);
}

Action parse_action(std::string_view input) {
  const auto tokens = text::tokenize(input);
  if (tokens.empty()) fail(ErrorKind::format, "empty action");
  const auto verb = text::lower(tokens[0]);
  const std::size_t argc = tokens.size() - 1;
  auto want = [&](std::size_t n) {
    if (argc != n) {
      fail(ErrorKind::format,
           fmt::format("{} expects {} argument(s), got {} in '{}'", tokens[0], n, argc, input));
    }
  };

  Action result;
  if (verb == "tap") {
    want(2);
    result = act::Tap{parse_number(tokens[1], input), parse_number(tokens[2], input)};
  } else if (verb == "swipe" || verb == "scroll") {
    want(1);
    auto d = parse_direction(tokens[1]);
    if (!d) fail(ErrorKind::format, "unknown swipe direction '" + tokens[1] + "'");
    result = act::Swipe{*d};
  } else if (verb == "type") {
    want(1);
    result = act::TypeText{tokens[1]};
  } else if (verb == "press") {
    want(1);
    auto k = parse_key(tokens[1]);
    if (!k) fail(ErrorKind::format, "unknown key '" + tokens[1] + "'");
    result = act::PressKey{*k};
  } else if (verb == "click") {
    if (argc != 1 && argc != 5) {
      fail(ErrorKind::format, "CLICK expects an element id and an optional bbox in '" +
                                  std::string(input) + "'");
    }
    act::ClickElement click{tokens[1], std::nullopt};
    if (argc == 5) {
      click.bbox = Rect{parse_number(tokens[2], input), parse_number(tokens[3], input),
                        parse_number(tokens[4], input), parse_number(tokens[5], input)};
    }
    result = std::move(click);
  } else if (verb == "select") {
    want(2);
    result = act::SelectOption{tokens[1], tokens[2]};
  } else if (verb == "type_in") {
    want(2);
    result = act::TypeInElement{tokens[1], tokens[2]};
  } else if (verb == "open_app") {
    want(1);
    result = act::OpenApp{tokens[1]};
  } else if (verb == "complete") {
    want(0);
    result = act::StatusComplete{};
  } else if (verb == "impossible") {
    want(0);
    result = act::StatusImpossible{};
  } else {
    fail(ErrorKind::format, "unknown action verb '" + tokens[0] + "'");
  }

  try {
    validate_action(result);
  } catch (const Error& e) {
    fail(ErrorKind::format, e.what());
  }
  return result;
}

std::optional<std::string> find_action_line(std::string_view response) {
  std::optional<std::string> found;
  for (const auto& raw : text::split_lines(response)) {
    std::string_view line = text::trim(raw);
    while (!line.empty() && (line.front() == '*' || line.front() == '`' || line.front() == '>' ||
                             line.front() == '#')) {
      line.remove_prefix(1);
    }
    line = text::trim(line);
    if (!text::starts_with_icase(line, "action:")) continue;
    std::string_view rest = line.substr(7);
    while (!rest.empty() && (rest.back() == '*' || rest.back() == '`')) rest.remove_suffix(1);
    while (!rest.empty() && (rest.front() == '*' || rest.front() == '`')) rest.remove_prefix(1);
    found = std::string(text::trim(rest));
  }
  return found;
}

}  // namespace pgagent
