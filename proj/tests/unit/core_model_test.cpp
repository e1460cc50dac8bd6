#include <doctest.h>

#include "pgagent/error.hpp"
#include "pgagent/model.hpp"

using namespace pgagent;

namespace {

ScreenRef screen(const std::string& loc) { return ScreenRef{loc, std::nullopt, std::nullopt, "test"}; }

Episode episode_of(std::size_t steps, bool with_final) {
  Episode e{"ep", "do something", {}, std::nullopt};
  for (std::size_t i = 0; i < steps; ++i) {
    e.steps.push_back({screen("s" + std::to_string(i)), act::Tap{0.1 * static_cast<double>(i), 0.5}});
  }
  if (with_final) e.final_screen = screen("final");
  return e;
}

}  // namespace

TEST_SUITE("core-model") {
  TEST_CASE("action tuples unroll consecutive screens") {
    const auto e = episode_of(3, true);
    const auto tuples = action_tuples(e);
    REQUIRE(tuples.size() == 3);
    CHECK(tuples[1].before == e.steps[1].screen);
    CHECK(tuples[1].action == e.steps[1].action);
    CHECK(tuples[1].after == e.steps[2].screen);
  }

  TEST_CASE("single step without a final screen has no tuple") {
    CHECK(action_tuples(episode_of(1, false)).empty());
  }

  TEST_CASE("five steps with a final screen end on the final screen") {
    const auto e = episode_of(5, true);
    const auto tuples = action_tuples(e);
    REQUIRE(tuples.size() == 5);
    CHECK(tuples.back().after == *e.final_screen);
    for (std::size_t i = 0; i < tuples.size(); ++i) CHECK(tuples[i].before == e.steps[i].screen);
  }

  TEST_CASE("without a final screen the last step yields nothing") {
    const auto e = episode_of(4, false);
    CHECK(action_tuples(e).size() == 3);
    CHECK(episode_images(e).size() == 4);
    CHECK(episode_images(episode_of(4, true)).size() == 5);
  }

  TEST_CASE("episode validation") {
    Episode e = episode_of(2, false);
    CHECK_NOTHROW(e.validate());
    e.task.clear();
    CHECK_THROWS_AS(e.validate(), Error);
    Episode empty{"ep", "task", {}, std::nullopt};
    CHECK_THROWS_AS(empty.validate(), Error);
    Episode bad = episode_of(1, false);
    bad.steps[0].action = act::Tap{1.5, 0.0};
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("graph ids are sequential and edges keep insertion order") {
    PageGraph g("demo");
    const auto a = g.add_node("A page", "a.png").node_id;
    const auto b = g.add_node("B page", "b.png").node_id;
    CHECK(a == "n000001");
    CHECK(b == "n000002");
    const auto e1 = g.add_edge(a, b, {"tap b"}, "t1").edge_id;
    const auto e2 = g.add_edge(a, a, {"tap self"}, "t2").edge_id;
    const auto e3 = g.add_edge(a, b, {"tap b again"}, "t3").edge_id;
    CHECK(g.out_edges(a) == std::vector<std::string>{e1, e2, e3});
    CHECK(g.in_degree(b) == 2);
    CHECK(g.in_degree(a) == 1);
    CHECK(g.edge(e3).order_index == 3);
    CHECK_NOTHROW(g.validate());

    std::size_t out_sum = 0;
    for (const auto& [id, node] : g.nodes()) out_sum += g.out_edges(id).size();
    CHECK(out_sum == g.edge_count());
  }

  TEST_CASE("edges must reference existing nodes and carry a queue") {
    PageGraph g("demo");
    const auto a = g.add_node("A page", "a.png").node_id;
    CHECK_THROWS_AS(g.add_edge(a, "n999999", {"x"}, "t"), Error);
    CHECK_THROWS_AS(g.add_edge(a, a, {}, "t"), Error);
    CHECK_THROWS_AS(g.add_node("", "x.png"), Error);
  }

  TEST_CASE("node embeddings are mirrored into the index") {
    PageGraph g("demo");
    const auto a = g.add_node("A page", "a.png", {1.0f, 0.0f}).node_id;
    g.add_node("B page", "b.png");
    CHECK(g.index().size() == 1);
    g.set_node_embedding(a, {0.0f, 2.0f});
    CHECK(g.index().size() == 1);
    const auto top = g.index().top_k(std::vector<float>{0.0f, 1.0f}, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].id == a);
    CHECK(top[0].score == doctest::Approx(1.0));
  }

  TEST_CASE("termination names round-trip") {
    for (auto t : {Termination::complete, Termination::step_budget, Termination::impossible, Termination::error}) {
      CHECK(parse_termination(to_string(t)) == t);
    }
    CHECK(parse_platform("web") == Platform::web);
    CHECK_THROWS_AS(parse_platform("desktop"), Error);
  }
}
