#include <doctest.h>

#include <chrono>

#include <nlohmann/json.hpp>

#include "pgagent/builder.hpp"
#include "pgagent/error.hpp"
#include "pgagent/io.hpp"
#include "pgagent/text.hpp"
#include "test_support.hpp"

using namespace pgagent;
namespace w = pgagent::world;
using nlohmann::json;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

std::size_t count_arrows(const std::string& dot) {
  std::size_t n = 0;
  for (std::size_t p = dot.find("->"); p != std::string::npos; p = dot.find("->", p + 2)) ++n;
  return n;
}

// A scale graph: random world pages embedded by the hashing embedder.
PageGraph scale_graph(std::size_t pages, std::size_t transitions) {
  w::RandomWorldOptions opts;
  opts.pages = pages;
  opts.transitions = transitions;
  auto g = w::true_page_graph(w::random_world(17, opts));
  HashingEmbedder e;
  g.set_embedder_id(e.id());
  for (const auto& [id, n] : g.nodes()) g.set_node_embedding(id, e.embed(n.summary).values);
  return g;
}

}  // namespace

TEST_SUITE("persistence-io") {
  TEST_CASE("graph save, load, save is byte-identical") {
    pgtest::TempDir dir;
    const auto g = io::load_graph(pgtest::fixture("graphs/demo.graph.json"));
    io::save_graph(g, dir / "a.json", json{{"note", "x"}});
    const auto loaded = io::load_graph_file(dir / "a.json");
    CHECK(loaded.graph == g);
    CHECK(loaded.provenance == json{{"note", "x"}});
    io::save_graph(loaded.graph, dir / "b.json", loaded.provenance);
    CHECK(io::read_file(dir / "a.json") == io::read_file(dir / "b.json"));
    CHECK(io::read_file(dir / "a.json.emb") == io::read_file(dir / "b.json.emb"));
    CHECK(loaded.graph.index() == g.index());
  }

  TEST_CASE("embedding sidecar stores little-endian float32") {
    PageGraph g("x");
    g.set_embedder_id("manual");
    g.add_node("A", "a", {1.0f, 0.0f});
    const auto bytes = io::embeddings_to_bytes(g);
    REQUIRE(bytes.size() == 8 + 4 + 4 + 8);
    CHECK(bytes.substr(0, 8) == "PGEMB001");
    CHECK(static_cast<unsigned char>(bytes[8]) == 2);
    // 1.0f is 0x3F800000, stored low byte first.
    CHECK(static_cast<unsigned char>(bytes[16]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[19]) == 0x3F);
  }

  TEST_CASE("graph loader errors") {
    pgtest::TempDir dir;
    PageGraph g("x");
    const auto a = g.add_node("A", "a").node_id;
    g.add_edge(a, a, {"tap"}, "t");
    auto doc = json::parse(io::graph_to_text(g));

    auto dangling = doc;
    dangling["edges"][0]["src"] = "n000042";
    io::atomic_write(dir / "dangling.json", dangling.dump());
    try {
      io::load_graph(dir / "dangling.json");
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::validation);
      CHECK(std::string(e.what()).find("e000001") != std::string::npos);
    }

    auto future = doc;
    future["header"]["version"] = 99;
    io::atomic_write(dir / "future.json", future.dump());
    CHECK(kind_of([&] { io::load_graph(dir / "future.json"); }) == ErrorKind::migration);

    io::atomic_write(dir / "broken.json", "{\"header\": ");
    CHECK(kind_of([&] { io::load_graph(dir / "broken.json"); }) == ErrorKind::format);
    CHECK(kind_of([&] { io::load_graph(dir / "missing.json"); }) == ErrorKind::io);

    auto missing_emb = json::parse(io::graph_to_text(io::load_graph(pgtest::fixture("graphs/cap30.graph.json"))));
    io::atomic_write(dir / "noemb.json", missing_emb.dump());
    CHECK(kind_of([&] { io::load_graph(dir / "noemb.json"); }) == ErrorKind::io);
  }

  TEST_CASE("700-node graph saves and loads in under a second") {
    pgtest::TempDir dir;
    const auto g = scale_graph(700, 940);
    const auto t0 = std::chrono::steady_clock::now();
    io::save_graph(g, dir / "big.json");
    const auto back = io::load_graph(dir / "big.json");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(back == g);
    CHECK(back.node_count() == 700);
    CHECK(back.edge_count() == 940);
    CHECK(secs < 1.0);
  }

  TEST_CASE("episode files round-trip") {
    pgtest::TempDir dir;
    const auto spec = w::demo_world();
    io::EpisodeFile f{"generic", "demo", w::generate_episodes(spec, spec.tasks, 7)};
    f.episodes.push_back(w::coverage_episodes(spec).front());
    io::save_episodes(f, dir / "e.jsonl");
    CHECK(io::load_episodes(dir / "e.jsonl") == f);
    CHECK(io::episodes_to_text(io::load_episodes(dir / "e.jsonl")) == io::read_file(dir / "e.jsonl"));
  }

  TEST_CASE("episode parse errors carry line numbers") {
    const std::string text =
        "{\"benchmark\":\"generic\",\"format\":\"pgagent-episodes\",\"scenario\":\"s\",\"version\":1}\n"
        "{\"episode_id\":\"a\",\"task\":\"t\",\"steps\":[{\"screen\":\"x\",\"action\":\"TAP 2 2\"}]}\n";
    try {
      io::parse_episodes(text, "mem");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
    }
  }

  TEST_CASE("world, transcript and prediction files round-trip") {
    pgtest::TempDir dir;
    const auto spec = w::demo_world();
    io::save_world(spec, dir / "w.json");
    CHECK(io::load_world(dir / "w.json") == spec);
    CHECK(io::read_file(dir / "w.json") == io::read_file(pgtest::fixture("world/demo_world.json")));

    AgentTranscript t;
    t.goal = "Open the shopping cart";
    t.global_plan = "1. Finish on the cart page";
    TranscriptStep s;
    s.screen = w::screen_ref(spec, w::initial_state(spec));
    s.observation = "obs";
    s.subtask_plan = "plan";
    s.action = act::Tap{0.5, 0.5};
    s.rationale = "why";
    s.guidelines_used = {{{"tap the Cart app button"}, {"Open the shopping cart"}, "n000001", "e000003", 0.25}};
    t.steps = {s};
    t.terminated_by = Termination::step_budget;
    io::TranscriptFile tf{json{{"k", 1}}, {t, t}};
    io::save_transcripts(tf, dir / "t.jsonl");
    CHECK(io::load_transcripts(dir / "t.jsonl") == tf);

    io::PredictionFile pf{json{{"mode", "x"}}, {{"ep", 0, act::SelectOption{"e1", "v"}}, {"ep", 1, act::StatusComplete{}}}};
    io::save_predictions(pf, dir / "p.jsonl");
    CHECK(io::load_predictions(dir / "p.jsonl") == pf);
  }

  TEST_CASE("dot export") {
    PageGraph two("x");
    const auto a = two.add_node("A", "a").node_id;
    const auto b = two.add_node("B", "b").node_id;
    two.add_edge(a, b, {"tap"}, "t");
    CHECK(count_arrows(io::graph_to_dot(two)) == 1);

    const auto empty = io::graph_to_dot(PageGraph("none"));
    CHECK(empty.starts_with("digraph page_graph {"));
    CHECK(count_arrows(empty) == 0);
    CHECK(empty.ends_with("}\n"));

    io::DotOptions ids;
    ids.label_mode = io::DotOptions::LabelMode::id;
    CHECK(io::graph_to_dot(two, ids).find("[label=\"n000001\"]") != std::string::npos);
  }

  TEST_CASE("revisit episode gives a node with two incoming arrows") {
    const auto spec = w::demo_world();
    // launcher -> search -> launcher -> search: search is entered twice.
    const auto& launcher = spec.page("launcher");
    const auto& search = spec.page("search");
    Episode e{"revisit", "wander", {}, w::screen_ref(spec, {"search", {}})};
    e.steps = {{w::screen_ref(spec, {"launcher", {}}), w::tap_widget(launcher, 0)},
               {w::screen_ref(spec, {"search", {}}), w::tap_widget(search, 0)},
               {w::screen_ref(spec, {"launcher", {}}), w::tap_widget(launcher, 0)}};
    auto oracle = pgtest::scripted_oracle(spec);
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder(g, oracle, embedder).ingest_episode(e);
    const auto dot = io::graph_to_dot(g);
    CHECK(g.in_degree("n000002") == 2);
    std::size_t into_search = 0;
    for (const auto& line : text::split_lines(dot)) {
      if (line.find("-> \"n000002\"") != std::string::npos) ++into_search;
    }
    CHECK(into_search == 2);
  }

  TEST_CASE("golden dot of the demo reference graph") {
    const auto dot = io::graph_to_dot(w::true_page_graph(w::demo_world()));
    CHECK(dot == io::read_file(pgtest::fixture("world/demo_true_graph.dot")));
  }

  TEST_CASE("generic adapter") {
    const auto r = io::import_benchmark("generic", pgtest::fixture("import/generic.jsonl"));
    CHECK(r.file.episodes.size() == 2);
    CHECK(r.rejects.empty());
  }

  TEST_CASE("mind2web adapter maps select records and rejects unlabelled ones") {
    const auto r = io::import_benchmark("mind2web", pgtest::fixture("import/mind2web.jsonl"));
    REQUIRE(r.file.episodes.size() == 1);
    const auto& steps = r.file.episodes[0].steps;
    REQUIRE(steps.size() == 3);
    CHECK(steps[0].action == Action{act::ClickElement{"101", Rect{0.1, 0.1, 0.3, 0.2}}});
    CHECK(steps[1].action == Action{act::TypeInElement{"205", "blue shirt"}});
    CHECK(steps[2].action == Action{act::SelectOption{"311", "Large"}});
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].id == "m2w-2");
    CHECK_FALSE(r.rejects[0].reason.empty());
  }

  TEST_CASE("aitw and odyssey adapters report rejects") {
    const auto aitw = io::import_benchmark("aitw", pgtest::fixture("import/aitw.jsonl"));
    CHECK(aitw.file.episodes.size() == 1);
    CHECK(aitw.file.episodes[0].steps.size() == 7);
    REQUIRE(aitw.rejects.size() == 2);
    CHECK(aitw.rejects[0].id == "aitw-2");
    CHECK(aitw.rejects[0].reason.find("screenshot") != std::string::npos);
    CHECK(aitw.rejects[1].id == "aitw-3");

    const auto ody = io::import_benchmark("odyssey", pgtest::fixture("import/odyssey.jsonl"));
    CHECK(ody.file.episodes.size() == 1);
    REQUIRE(ody.rejects.size() == 1);
    CHECK(ody.rejects[0].id == "ody-2");
    CHECK(io::rejects_to_json(ody.rejects).size() == 1);
    CHECK_THROWS_AS(io::import_benchmark_text("unknown", "", "mem"), Error);
  }
}
