#include <doctest.h>

#include <set>

#include "pgagent/builder.hpp"
#include "pgagent/error.hpp"
#include "pgagent/io.hpp"
#include "test_support.hpp"

using namespace pgagent;
namespace w = pgagent::world;

namespace {

// Scripted answers, except that every request whose images include `poison` fails.
class PoisonedBackend final : public ModelBackend {
 public:
  PoisonedBackend(std::shared_ptr<ModelBackend> inner, std::string poison)
      : inner_(std::move(inner)), poison_(std::move(poison)) {}
  [[nodiscard]] std::string name() const override { return "poisoned"; }
  std::string complete(const OracleRequest& r) override {
    for (const auto& img : r.images()) {
      if (img.find(poison_) != std::string::npos) fail(ErrorKind::oracle_unavailable, "poisoned image");
    }
    return inner_->complete(r);
  }

 private:
  std::shared_ptr<ModelBackend> inner_;
  std::string poison_;
};

std::size_t tuple_count(std::span<const Episode> episodes) {
  std::size_t n = 0;
  for (const auto& e : episodes) n += action_tuples(e).size();
  return n;
}

std::size_t queued_actions(const PageGraph& g) {
  std::size_t n = 0;
  for (const auto& [id, e] : g.edges()) n += e.action_queue.size();
  return n;
}

std::set<std::string> pages_visited(const w::WorldSpec& spec, std::span<const Episode> episodes) {
  std::set<std::string> pages;
  for (const auto& e : episodes) {
    for (const auto& img : episode_images(e)) pages.insert(w::parse_screen_locator(spec, img.locator).page);
  }
  return pages;
}

}  // namespace

TEST_SUITE("graph-builder") {
  TEST_CASE("node resolution creates, reuses and extends") {
    const auto spec = w::demo_world();
    auto oracle = pgtest::scripted_oracle(spec);
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder builder(g, oracle, embedder);

    const auto launcher = w::screen_ref(spec, w::initial_state(spec));
    auto [first, created] = builder.resolve_node(launcher);
    CHECK(created);
    auto [again, created_again] = builder.resolve_node(launcher);
    CHECK_FALSE(created_again);
    CHECK(again == first);

    builder.resolve_node(w::screen_ref(spec, {"search", {}}));
    builder.resolve_node(w::screen_ref(spec, {"cart", {}}));
    REQUIRE(g.node_count() == 3);
    auto [fresh, fresh_created] = builder.resolve_node(w::screen_ref(spec, {"settings", {}}));
    CHECK(fresh_created);
    CHECK(g.node_count() == 4);
    auto [same_page, new_state] = builder.resolve_node(w::screen_ref(spec, {"search", {{"search.query", "x"}}}));
    CHECK_FALSE(new_state);
    CHECK(g.node(same_page).summary == spec.page("search").description);
  }

  TEST_CASE("in-page actions merge into the next jump edge") {
    const auto file = io::load_episodes(pgtest::fixture("episodes/in_page_then_jump.jsonl"));
    auto oracle = pgtest::scripted_oracle();
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder builder(g, oracle, embedder);
    const auto report = builder.ingest_corpus(file.episodes, 1.0, 0);
    REQUIRE(g.edge_count() == 1);
    const auto& edge = g.edges().begin()->second;
    CHECK(edge.action_queue.size() == 2);
    CHECK(edge.action_queue[0] == "type \"wifi\" into the search input field");
    CHECK(edge.action_queue[1] == "tap the Search button");
    CHECK(edge.task == file.episodes[0].task);
    CHECK(report.tuples_skipped_in_page == 1);
    CHECK(report.tail_actions_discarded == 0);
  }

  TEST_CASE("trailing in-page actions produce no edge") {
    const auto file = io::load_episodes(pgtest::fixture("episodes/trailing_in_page.jsonl"));
    auto oracle = pgtest::scripted_oracle();
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder builder(g, oracle, embedder);
    const auto report = builder.ingest_corpus(file.episodes, 1.0, 0);
    CHECK(g.edge_count() == 1);  // launcher -> search only
    CHECK(report.tail_actions_discarded == 1);
    CHECK(queued_actions(g) + report.tail_actions_discarded == tuple_count(file.episodes));
  }

  TEST_CASE("revisits reuse nodes and raise in-degree") {
    const auto spec = w::demo_world();
    const auto* task = spec.find_task("Search for laptop and return home");
    REQUIRE(task);
    const auto episodes = w::generate_episodes(spec, std::span(task, 1), 1);
    auto oracle = pgtest::scripted_oracle(spec);
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder builder(g, oracle, embedder);
    builder.ingest_corpus(episodes, 1.0, 0);
    CHECK(g.node_count() == 2);
    const auto& launcher_id = g.nodes().begin()->first;
    CHECK(g.in_degree(launcher_id) >= 1);
    CHECK(g.edge_count() == 2);
  }

  TEST_CASE("single-image episode gives one node and no edge") {
    const auto spec = w::demo_world();
    Episode e{"one", "look", {{w::screen_ref(spec, w::initial_state(spec)), act::StatusComplete{}}}, std::nullopt};
    auto oracle = pgtest::scripted_oracle(spec);
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder builder(g, oracle, embedder);
    builder.ingest_episode(e);
    CHECK(g.node_count() == 1);
    CHECK(g.edge_count() == 0);
  }

  TEST_CASE("six-page world builds exactly the visited pages") {
    w::RandomWorldOptions opts;
    opts.pages = 6;
    opts.transitions = 9;
    const auto spec = w::random_world(5, opts);
    const auto episodes = w::walk_episodes(spec, 2);
    auto oracle = pgtest::scripted_oracle(spec);
    HashingEmbedder embedder;
    PageGraph g(spec.name);
    GraphBuilder builder(g, oracle, embedder);
    const auto report = builder.ingest_corpus(episodes, 1.0, 0);
    CHECK(pages_visited(spec, episodes).size() == 6);
    CHECK(g.node_count() == 6);
    CHECK(report.nodes_created == 6);
  }

  TEST_CASE("edge and action conservation on generated corpora") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      w::RandomWorldOptions opts;
      opts.pages = 12;
      opts.transitions = 20;
      opts.field_probability = 0.5;
      const auto spec = w::random_world(seed, opts);
      auto episodes = w::walk_episodes(spec, seed);
      const auto gen = w::generate_episodes(spec, spec.tasks, seed);
      episodes.insert(episodes.end(), gen.begin(), gen.end());
      auto oracle = pgtest::scripted_oracle(spec);
      HashingEmbedder embedder;
      PageGraph g(spec.name);
      GraphBuilder builder(g, oracle, embedder);
      const auto report = builder.ingest_corpus(episodes, 1.0, 0);
      CHECK(queued_actions(g) + report.tail_actions_discarded == tuple_count(episodes));
      CHECK(g.node_count() == pages_visited(spec, episodes).size());
      for (const auto& [id, e] : g.edges()) CHECK(!e.action_queue.empty());
    }
  }

  TEST_CASE("every queue ends with the jump action summary") {
    const auto spec = w::demo_world();
    const auto episodes = w::coverage_episodes(spec);
    auto oracle = pgtest::scripted_oracle(spec);
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder builder(g, oracle, embedder);
    builder.ingest_corpus(episodes, 1.0, 0);
    for (const auto& [id, e] : g.edges()) {
      CAPTURE(id);
      CHECK(e.action_queue.back().starts_with("tap the "));
    }
  }

  TEST_CASE("ingesting the same episode twice doubles its edges") {
    const auto spec = w::demo_world();
    const auto episodes = w::generate_episodes(spec, spec.tasks, 7);
    auto oracle = pgtest::scripted_oracle(spec);
    HashingEmbedder embedder;
    PageGraph g("demo");
    GraphBuilder builder(g, oracle, embedder);
    builder.ingest_episode(episodes[3]);
    const auto nodes = g.node_count();
    const auto edges = g.edge_count();
    builder.ingest_episode(episodes[3]);
    CHECK(g.node_count() == nodes);
    CHECK(g.edge_count() == 2 * edges);
  }

  TEST_CASE("episode policy rolls back, tuple policy skips") {
    const auto spec = w::demo_world();
    const auto episodes = w::generate_episodes(spec, spec.tasks, 7);
    const auto* checkout = &episodes[5];  // goes through the checkout page
    HashingEmbedder embedder;
    auto backend = std::make_shared<PoisonedBackend>(pgtest::scripted(spec), "page/checkout/");

    Oracle oracle(backend, pgtest::templates(), {0, 0});
    PageGraph strict("demo");
    GraphBuilder strict_builder(strict, oracle, embedder, {4, SkipPolicy::episode});
    strict_builder.ingest_episode(episodes[0]);
    const auto before_text = io::graph_to_text(strict);
    const auto before_emb = io::embeddings_to_bytes(strict);
    const auto r = strict_builder.ingest_episode(*checkout);
    CHECK(r.episodes_aborted == 1);
    CHECK(io::graph_to_text(strict) == before_text);
    CHECK(io::embeddings_to_bytes(strict) == before_emb);

    PageGraph lenient("demo");
    GraphBuilder lenient_builder(lenient, oracle, embedder, {4, SkipPolicy::tuple});
    const auto r2 = lenient_builder.ingest_episode(*checkout);
    CHECK(r2.oracle_errors > 0);
    CHECK(r2.episodes_aborted == 0);
    CHECK(lenient.node_count() > 0);
  }

  TEST_CASE("deterministic sampling") {
    const auto a = sample_indices(230, 0.1, 42);
    CHECK(a.size() == 23);
    CHECK(a == sample_indices(230, 0.1, 42));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(sample_indices(230, 1.0, 3).size() == 230);
    CHECK_THROWS_AS(sample_indices(10, 0.0, 1), Error);
    CHECK_THROWS_AS(sample_indices(10, 1.5, 1), Error);
  }

  TEST_CASE("mismatched embedders are refused") {
    PageGraph g("demo");
    g.set_embedder_id("other");
    auto oracle = pgtest::scripted_oracle();
    HashingEmbedder embedder;
    CHECK_THROWS_AS(GraphBuilder(g, oracle, embedder), Error);
  }

  TEST_CASE("skip policy names") {
    CHECK(parse_skip_policy("episode") == SkipPolicy::episode);
    CHECK(to_string(SkipPolicy::tuple) == "tuple");
    CHECK_THROWS_AS(parse_skip_policy("never"), Error);
  }
}
