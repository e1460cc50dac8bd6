#include <doctest.h>

#include <vector>

#include "pgagent/action.hpp"
#include "pgagent/error.hpp"

using namespace pgagent;

TEST_SUITE("action") {
  TEST_CASE("wire grammar round-trips every variant") {
    const std::vector<Action> actions = {
        act::Tap{0.5, 0.25},
        act::Swipe{SwipeDirection::left},
        act::TypeText{"hello \"world\""},
        act::PressKey{Key::enter},
        act::ClickElement{"e1", std::nullopt},
        act::ClickElement{"e2", Rect{0.1, 0.2, 0.3, 0.4}},
        act::SelectOption{"e3", "size large"},
        act::TypeInElement{"e4", "blue shirt"},
        act::OpenApp{"Play Store"},
        act::StatusComplete{},
        act::StatusImpossible{},
    };
    for (const auto& a : actions) {
      const auto text = format_action(a);
      CAPTURE(text);
      CHECK(parse_action(text) == a);
    }
  }

  TEST_CASE("formatted forms") {
    CHECK(format_action(act::Tap{0.5, 0.25}) == "TAP 0.5 0.25");
    CHECK(format_action(act::TypeText{"hi"}) == "TYPE \"hi\"");
    CHECK(format_action(act::StatusComplete{}) == "COMPLETE");
    CHECK(format_action(act::Swipe{SwipeDirection::up}) == "SWIPE up");
    CHECK(action_verb(act::PressKey{Key::home}) == "PRESS");
  }

  TEST_CASE("shortest round-tripping numbers") {
    const Action a = act::Tap{0.1 + 0.2, 1.0 / 3.0};
    CHECK(parse_action(format_action(a)) == a);
  }

  TEST_CASE("verbs are case-insensitive") {
    CHECK(parse_action("tap 0.1 0.2") == Action{act::Tap{0.1, 0.2}});
    CHECK(parse_action("press HOME") == Action{act::PressKey{Key::home}});
  }

  TEST_CASE("malformed wire text is a format error") {
    for (const char* bad : {"", "JUMP 1 2", "TAP 0.5", "TAP a b", "SWIPE sideways", "TYPE \"open", "COMPLETE now"}) {
      CAPTURE(bad);
      try {
        parse_action(bad);
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
      }
    }
  }

  TEST_CASE("coordinates outside the unit square are rejected") {
    CHECK_THROWS_AS(validate_action(act::Tap{1.2, 0.5}), Error);
    CHECK_THROWS_AS(validate_action(act::ClickElement{"", std::nullopt}), Error);
    CHECK_NOTHROW(validate_action(act::Tap{1.0, 0.0}));
  }

  TEST_CASE("the last ACTION line wins and prose is tolerated") {
    const auto line = find_action_line("Thinking...\nACTION: TAP 0.1 0.1\nOn second thought\n**ACTION:** SWIPE down\n");
    REQUIRE(line);
    CHECK(parse_action(*line) == Action{act::Swipe{SwipeDirection::down}});
    CHECK_FALSE(find_action_line("no decision here"));
  }

  TEST_CASE("rect containment is closed") {
    const Rect r{0.0, 0.0, 0.5, 0.5};
    CHECK(r.contains({0.5, 0.5}));
    CHECK_FALSE(r.contains({0.51, 0.2}));
    CHECK(r.center() == Point{0.25, 0.25});
  }
}
