#include <doctest.h>

#include <map>
#include <set>

#include "pgagent/builder.hpp"
#include "pgagent/error.hpp"
#include "pgagent/io.hpp"
#include "test_support.hpp"

using namespace pgagent;
namespace w = pgagent::world;

TEST_SUITE("synthetic-world") {
  TEST_CASE("demo world shape") {
    const auto spec = w::demo_world();
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.pages.size() == 8);
    CHECK(spec.tasks.size() == 10);
    std::set<std::string> names;
    for (const auto& p : spec.pages) names.insert(p.name);
    CHECK(names == std::set<std::string>{"launcher", "search", "results", "detail", "cart", "checkout", "settings",
                                         "confirmation"});
  }

  TEST_CASE("two-page world gives a one-tuple episode") {
    w::WorldSpec spec;
    spec.name = "two";
    spec.start_page = "a";
    spec.pages = {{"a", "Page A", {{"go", "Go to B", w::WidgetKind::button, "b", {}, {}}}},
                  {"b", "Page B", {{"back", "Back to A", w::WidgetKind::button, "a", {}, {}}}}};
    spec.tasks = {{"reach B", "b", {}}};
    spec.validate();
    const auto eps = w::generate_episodes(spec, spec.tasks, 1);
    REQUIRE(eps.size() == 1);
    REQUIRE(eps[0].steps.size() == 2);
    CHECK(eps[0].steps[0].action == w::tap_widget(spec.pages[0], 0));
    CHECK(eps[0].steps[1].action == Action{act::StatusComplete{}});
    CHECK(action_tuples(eps[0]).size() == 1);
  }

  TEST_CASE("typed text precedes submit") {
    const auto spec = w::demo_world();
    const auto* task = spec.find_task("Search for wifi adapter");
    const auto eps = w::generate_episodes(spec, std::span(task, 1), 1);
    const auto& steps = eps[0].steps;
    REQUIRE(steps.size() == 4);
    CHECK(std::holds_alternative<act::TypeText>(steps[1].action));
    CHECK(std::get<act::TypeText>(steps[1].action).text == "wifi adapter");
    CHECK(std::holds_alternative<act::Tap>(steps[2].action));
  }

  TEST_CASE("generation is reproducible from the seed") {
    const auto spec = w::demo_world();
    CHECK(w::generate_episodes(spec, spec.tasks, 9) == w::generate_episodes(spec, spec.tasks, 9));
    CHECK(w::walk_episodes(spec, 4) == w::walk_episodes(spec, 4));
    w::RandomWorldOptions opts;
    CHECK(w::random_world(3, opts) == w::random_world(3, opts));
    CHECK_FALSE(w::random_world(3, opts) == w::random_world(4, opts));
  }

  TEST_CASE("reference graph mirrors the transition table") {
    const auto spec = w::demo_world();
    const auto g = w::true_page_graph(spec);
    CHECK(g.node_count() == 8);
    std::map<std::string, std::string> id_of;
    for (const auto& [id, n] : g.nodes()) id_of[w::parse_screen_locator(spec, n.image_locator).page] = id;
    for (const auto& p : spec.pages) {
      std::size_t transitions = 0;
      for (const auto& wd : p.widgets) transitions += wd.target.empty() ? 0 : 1;
      CHECK(g.out_edges(id_of.at(p.name)).size() == transitions);
    }
  }

  TEST_CASE("locators round-trip and reject foreign input") {
    const auto spec = w::demo_world();
    w::WorldState s{"search", {{"search.query", "usb cable/100% & more"}}};
    const auto loc = w::screen_locator(s);
    CHECK(loc.starts_with("world://page/search/state/"));
    CHECK(w::parse_screen_locator(spec, loc) == s);
    CHECK(w::screen_locator(w::initial_state(spec)) == "world://page/launcher/state/0");
    CHECK_THROWS_AS(w::parse_screen_locator(spec, "file:///x.png"), Error);
    CHECK_THROWS_AS(w::parse_screen_locator(spec, "world://page/nowhere/state/0"), Error);
  }

  TEST_CASE("scripted jump judgements agree with the world on every generated tuple") {
    const auto spec = w::demo_world();
    auto oracle = pgtest::scripted_oracle(spec);
    auto episodes = w::generate_episodes(spec, spec.tasks, 2);
    const auto walks = w::walk_episodes(spec, 2);
    episodes.insert(episodes.end(), walks.begin(), walks.end());
    std::size_t checked = 0;
    for (const auto& ep : episodes) {
      for (const auto& t : action_tuples(ep)) {
        auto before = w::parse_screen_locator(spec, t.before.locator);
        auto state = before;
        const auto r = w::apply_action(spec, state, t.action);
        CHECK(oracle.judge_jump(t.before, t.after, oracle.summarize_action(t.before, t.action)) == r.page_changed);
        ++checked;
      }
    }
    CHECK(checked >= 50);
  }

  TEST_CASE("blocked transitions are no-ops") {
    const auto spec = w::demo_world();
    w::WorldState s{"search", {}};
    const auto& page = spec.page("search");
    const auto submit = *w::widget_index(page, "submit");
    const auto r = w::apply_action(spec, s, w::tap_widget(page, submit));
    CHECK_FALSE(r.page_changed);
    CHECK(s.page == "search");
    w::apply_action(spec, s, act::TypeText{"usb"});
    w::apply_action(spec, s, w::tap_widget(page, submit));
    CHECK(s.page == "results");
  }

  TEST_CASE("widget geometry") {
    const auto& page = w::demo_world().page("launcher");
    for (std::size_t i = 0; i < page.widgets.size(); ++i) {
      const auto box = w::widget_bbox(page, i);
      CHECK(w::widget_at(page, box.center()) == i);
    }
    CHECK_FALSE(w::widget_at(page, {0.5, 0.02}));
  }

  TEST_CASE("random worlds are reachable and respect their bounds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      w::RandomWorldOptions opts;
      opts.pages = 2 + seed % 48;
      opts.transitions = opts.pages + seed % 10;
      const auto spec = w::random_world(seed, opts);
      CHECK_NOTHROW(spec.validate());
      CHECK(spec.pages.size() == opts.pages);
      for (const auto& p : spec.pages) {
        std::size_t out = 0;
        for (const auto& wd : p.widgets) {
          out += wd.target.empty() ? 0 : 1;
          CHECK(wd.target != p.name);
        }
        CHECK(out <= opts.max_out_degree);
      }
      const auto g = w::true_page_graph(spec);
      CHECK(g.edge_count() == opts.transitions);
    }
  }

  TEST_CASE("walks cover every transition exactly once") {
    const auto spec = w::demo_world();
    std::multiset<std::string> taken;
    for (const auto& ep : w::walk_episodes(spec, 11)) {
      for (const auto& t : action_tuples(ep)) {
        auto s = w::parse_screen_locator(spec, t.before.locator);
        const auto page = s.page;
        if (w::apply_action(spec, s, t.action).page_changed) taken.insert(page + "->" + s.page);
      }
    }
    std::multiset<std::string> expected;
    for (const auto& p : spec.pages) {
      for (const auto& wd : p.widgets) {
        if (!wd.target.empty()) expected.insert(p.name + "->" + wd.target);
      }
    }
    CHECK(taken == expected);
  }

  TEST_CASE("unguided fallback taps the leftmost enabled navigating widget") {
    const auto spec = w::demo_world();
    const auto& task = *spec.find_task("Search for wifi adapter");
    CHECK(w::left_to_right_action(spec, task, w::initial_state(spec)) == w::tap_widget(spec.page("launcher"), 0));
    // On the search page the submit button is blocked until the field is filled.
    CHECK(w::left_to_right_action(spec, task, {"search", {}}) == w::tap_widget(spec.page("search"), 0));
  }

  TEST_CASE("environment applies actions") {
    const auto spec = w::demo_world();
    w::WorldEnvironment env(spec);
    CHECK(env.current_screen().locator == "world://page/launcher/state/0");
    env.apply(w::tap_widget(spec.page("launcher"), 2));
    CHECK(env.state().page == "cart");
    CHECK(env.apply(act::StatusComplete{}).terminal);
  }
}
