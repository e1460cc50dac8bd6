#include <doctest.h>

#include <random>

#include "pgagent/error.hpp"
#include "pgagent/io.hpp"
#include "pgagent/retrieval.hpp"
#include "pgagent/text.hpp"
#include "reference.hpp"
#include "test_support.hpp"

using namespace pgagent;
namespace w = pgagent::world;

namespace {

struct Chain {
  PageGraph g{"chain"};
  std::string a, b, c, d;
  Chain() {
    a = g.add_node("A", "a").node_id;
    b = g.add_node("B", "b").node_id;
    c = g.add_node("C", "c").node_id;
    d = g.add_node("D", "d").node_id;
  }
};

// The demo world's reference graph with every node embedded by the hashing embedder.
PageGraph embedded_demo_graph(const Embedder& embedder) {
  auto g = w::true_page_graph(w::demo_world());
  g.set_embedder_id(embedder.id());
  for (const auto& [id, node] : g.nodes()) g.set_node_embedding(id, embedder.embed(node.summary).values);
  return g;
}

}  // namespace

TEST_SUITE("guideline-retrieval") {
  TEST_CASE("default hyperparameters") {
    CHECK(RetrievalConfig::defaults(Platform::mobile) == RetrievalConfig{20, 4, 3});
    CHECK(RetrievalConfig::defaults(Platform::web) == RetrievalConfig{10, 4, 3});
    CHECK_THROWS_AS((RetrievalConfig{0, 4, 3}.validate()), Error);
  }

  TEST_CASE("chain grows one task per layer") {
    Chain ch;
    const auto ab = ch.g.add_edge(ch.a, ch.b, {"x"}, "t1").edge_id;
    ch.g.add_edge(ch.b, ch.c, {"x"}, "t2");
    ch.g.add_edge(ch.c, ch.d, {"x"}, "t3");
    CHECK(bfs_tasks(ch.g, ab, 1) == std::vector<std::string>{"t1"});
    CHECK(bfs_tasks(ch.g, ab, 2) == std::vector<std::string>{"t1", "t2"});
    CHECK(bfs_tasks(ch.g, ab, 3) == std::vector<std::string>{"t1", "t2", "t3"});
    CHECK(bfs_tasks(ch.g, ab, 9) == std::vector<std::string>{"t1", "t2", "t3"});
    CHECK_THROWS_AS(bfs_tasks(ch.g, ab, 0), Error);
    CHECK_THROWS_AS(bfs_tasks(ch.g, "e999999", 1), Error);
  }

  TEST_CASE("self-loop terminates") {
    Chain ch;
    const auto aa = ch.g.add_edge(ch.a, ch.a, {"x"}, "t1").edge_id;
    for (std::size_t l = 1; l <= 5; ++l) CHECK(bfs_tasks(ch.g, aa, l) == std::vector<std::string>{"t1"});
  }

  TEST_CASE("diamond deduplicates tasks") {
    Chain ch;
    const auto ab = ch.g.add_edge(ch.a, ch.b, {"x"}, "t1").edge_id;
    ch.g.add_edge(ch.b, ch.c, {"x"}, "t2");
    ch.g.add_edge(ch.b, ch.d, {"x"}, "t2");
    CHECK(bfs_tasks(ch.g, ab, 2) == std::vector<std::string>{"t1", "t2"});
  }

  TEST_CASE("random graphs agree with walk enumeration") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
      const auto g = pgtest::random_graph(rng, 50, 4);
      if (g.edge_count() == 0) continue;
      for (const auto& [id, e] : g.edges()) {
        for (std::size_t l = 1; l <= 3; ++l) {
          const auto got = bfs_tasks(g, id, l);
          CHECK(pgtest::bfs_matches(got, pgtest::brute_force_tasks(g, id, l)));
          CHECK(got.front() == e.task);
        }
      }
    }
  }

  TEST_CASE("empty graph yields no guidelines without asking the oracle") {
    auto oracle = pgtest::scripted_oracle();
    HashingEmbedder embedder;
    PageGraph g("empty");
    CHECK(retrieve_guidelines(g, oracle, embedder, {"world://page/launcher/state/0", {}, {}, ""},
                              RetrievalConfig::defaults(Platform::mobile))
              .empty());
    CHECK(oracle.call_count(Role::screen_summary) == 0);
  }

  TEST_CASE("a page with two transitions yields two guidelines") {
    const auto spec = w::demo_world();
    HashingEmbedder embedder;
    const auto g = embedded_demo_graph(embedder);
    auto oracle = pgtest::scripted_oracle(spec);
    const auto before = io::graph_to_text(g);
    const auto out = retrieve_guidelines(g, oracle, embedder, w::screen_ref(spec, {"cart", {}}), RetrievalConfig{20, 1, 3});
    REQUIRE(out.size() == 2);
    for (const auto& gl : out) {
      CHECK(g.node(gl.source_node).summary == spec.page("cart").description);
      CHECK(pgtest::bfs_matches(gl.achievable_tasks, pgtest::brute_force_tasks(g, gl.source_edge, 3)));
      CHECK(gl.achievable_tasks.front() == g.edge(gl.source_edge).task);
    }
    CHECK(out[0].action_queue == std::vector<std::string>{"tap the Home button"});
    CHECK(io::graph_to_text(g) == before);
  }

  TEST_CASE("thirty candidates are cut to k in score-then-insertion order") {
    // Node ranking and edge order frozen from tests/oracles/derive.py.
    const auto g = io::load_graph(pgtest::fixture("graphs/cap30.graph.json"));
    HashingEmbedder embedder;
    const auto out = guidelines_for_summary(g, embedder, "Compose a new email with recipient and subject",
                                            RetrievalConfig::defaults(Platform::mobile));
    const std::vector<std::string> expected = {
        "e000017", "e000018", "e000019", "e000020", "e000021", "e000022", "e000023", "e000001", "e000002", "e000003",
        "e000004", "e000005", "e000006", "e000007", "e000008", "e000024", "e000025", "e000026", "e000027", "e000028"};
    REQUIRE(out.size() == 20);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].source_edge == expected[i]);
    CHECK(out[0].similarity_score == doctest::Approx(0.6338421355848862).epsilon(1e-6));
    CHECK(out[7].similarity_score == doctest::Approx(0.36115755925730764).epsilon(1e-6));
    CHECK(guidelines_for_summary(g, embedder, "Compose a new email", RetrievalConfig::defaults(Platform::web)).size() ==
          10);
  }

  TEST_CASE("guideline count never exceeds k or the candidate edges") {
    std::mt19937_64 rng(5);
    HashingEmbedder embedder;
    for (int trial = 0; trial < 50; ++trial) {
      auto g = pgtest::random_graph(rng, 12, 4);
      g.set_embedder_id(embedder.id());
      for (const auto& [id, node] : g.nodes()) g.set_node_embedding(id, embedder.embed(node.summary).values);
      const RetrievalConfig cfg{1 + rng() % 10, 1 + rng() % 4, 1 + rng() % 3};
      const auto nodes = g.index().top_k(embedder.embed("page 3").values, cfg.n_nodes);
      std::size_t available = 0;
      for (const auto& n : nodes) available += g.out_edges(n.id).size();
      const auto out = assemble_guidelines(g, nodes, cfg);
      CHECK(out.size() <= cfg.k_max_guidelines);
      CHECK(out.size() == std::min(available, cfg.k_max_guidelines));
    }
  }

  TEST_CASE("embedder mismatch is an invalid state") {
    auto g = io::load_graph(pgtest::fixture("graphs/cap30.graph.json"));
    HashingEmbedder other(128);
    try {
      guidelines_for_summary(g, other, "inbox", RetrievalConfig{});
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_state);
    }
  }

  TEST_CASE("rendering") {
    CHECK(render_guidelines({}) == kNoGuidelines);
    const std::vector<Guideline> one = {{{"tap a", "tap b"}, {"task x"}, "n1", "e1", 0.5}};
    const auto text = render_guidelines(one);
    CHECK(text == "1. Perform: tap a; tap b \xE2\x80\x94 can lead to accomplishing: task x");
    std::vector<Guideline> many;
    for (int i = 0; i < 4; ++i) many.push_back({{"a" + std::to_string(i)}, {"t"}, "", "", 0});
    const auto lines = text::split_lines(render_guidelines(many));
    REQUIRE(lines.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(lines[i].starts_with(std::to_string(i + 1) + ". "));
    const auto parsed = parse_rendered_guidelines(render_guidelines(many));
    REQUIRE(parsed.size() == 4);
    CHECK(parsed[2].action_queue == many[2].action_queue);
    CHECK(parsed[2].achievable_tasks == many[2].achievable_tasks);
  }
}
