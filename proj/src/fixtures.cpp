#include "pgagent/fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <map>

#include <unistd.h>

#include <fmt/format.h>

#include "pgagent/backends.hpp"
#include "pgagent/commands.hpp"
#include "pgagent/embedding.hpp"
#include "pgagent/error.hpp"
#include "pgagent/io.hpp"
#include "pgagent/oracle.hpp"
#include "pgagent/scripted.hpp"
#include "pgagent/world.hpp"

namespace pgagent::fixtures {

using nlohmann::json;

namespace {

constexpr std::uint64_t kGeneratorSeed = 7;
constexpr std::string_view kManifestPath = "manifest.json";

// Scratch directory removed on scope exit; producers that drive whole commands write there.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() / fmt::format("pgagent-fixtures-{}-{}", static_cast<long>(::getpid()), counter++);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  [[nodiscard]] const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

io::EpisodeFile world_file(const world::WorldSpec& spec, std::vector<Episode> episodes) {
  io::EpisodeFile f;
  f.benchmark = "synthetic";
  f.scenario = spec.name;
  f.episodes = std::move(episodes);
  return f;
}

FileSet demo_world_files() {
  return {{"world/demo_world.json", io::to_json(world::demo_world()).dump(2) + "\n"}};
}

FileSet demo_dot_files() {
  return {{"world/demo_true_graph.dot", io::graph_to_dot(world::true_page_graph(world::demo_world()))}};
}

FileSet generator_files() {
  const auto spec = world::demo_world();
  return {{"episodes/demo_generator.jsonl",
           io::episodes_to_text(world_file(spec, world::generate_episodes(spec, spec.tasks, kGeneratorSeed)))}};
}

FileSet coverage_files() {
  const auto spec = world::demo_world();
  return {{"episodes/demo_coverage.jsonl", io::episodes_to_text(world_file(spec, world::coverage_episodes(spec)))}};
}

// Two hand-shaped episodes on the demo world for the edge-merge rules: an in-page entry
// followed by a jump, and a jump followed by an in-page entry that never leads anywhere.
FileSet edge_merge_files() {
  const auto spec = world::demo_world();
  const auto& search = spec.page("search");
  const auto& launcher = spec.page("launcher");
  auto screen = [&](world::WorldState s) { return world::screen_ref(spec, s); };

  world::WorldState s0{"search", {}};
  world::WorldState s1{"search", {{world::var_key("search", "query"), "wifi"}}};
  world::WorldState s2{"results", {{world::var_key("search", "query"), "wifi"}}};
  Episode jump;
  jump.episode_id = "merge-in-page-then-jump";
  jump.task = "Search for wifi";
  jump.steps = {{screen(s0), act::TypeText{"wifi"}},
                {screen(s1), world::tap_widget(search, *world::widget_index(search, "submit"))}};
  jump.final_screen = screen(s2);

  world::WorldState t0{"launcher", {}};
  world::WorldState t1{"search", {}};
  world::WorldState t2{"search", {{world::var_key("search", "query"), "cable"}}};
  Episode trailing;
  trailing.episode_id = "merge-trailing-in-page";
  trailing.task = "Type cable into the search field";
  trailing.steps = {{screen(t0), world::tap_widget(launcher, *world::widget_index(launcher, "shop_app"))},
                    {screen(t1), act::TypeText{"cable"}}};
  trailing.final_screen = screen(t2);

  return {{"episodes/in_page_then_jump.jsonl", io::episodes_to_text(world_file(spec, {jump}))},
          {"episodes/trailing_in_page.jsonl", io::episodes_to_text(world_file(spec, {trailing}))}};
}

// Web records: 4 steps, 3 element hits, 2 of them with the exact operation; token F1 values
// 1, 1, 0.8 and 0.4. Mobile records: 5 steps, 3 matches, one of them a tap 0.0707 away.
FileSet metric_files() {
  auto web = [](int step, const char* gold, const char* predicted) {
    return json{{"scenario", "web-fixture"}, {"episode_id", "web-1"}, {"step", step}, {"gold", gold},
                {"predicted", predicted}};
  };
  auto mobile = [](int step, const char* gold, const char* predicted) {
    return json{{"scenario", "mobile-fixture"}, {"episode_id", "mobile-1"}, {"step", step}, {"gold", gold},
                {"predicted", predicted}};
  };
  return {{"metrics/web_steps.jsonl",
           jsonl({web(0, "CLICK e1", "CLICK e1"), web(1, R"(TYPE_IN e2 "blue shirt")", R"(TYPE_IN e2 "blue shirt")"),
                  web(2, R"(SELECT e3 "size large")", R"(SELECT e3 "large")"),
                  web(3, R"(TYPE_IN e4 "shoes")", R"(TYPE_IN e5 "red sneakers")")})},
          {"metrics/mobile_steps.jsonl",
           jsonl({mobile(0, "TAP 0.5 0.5", "TAP 0.55 0.55"), mobile(1, R"(TYPE "Hello")", R"(TYPE "hello ")"),
                  mobile(2, "SWIPE up", "TAP 0.5 0.5"), mobile(3, "PRESS home", "PRESS home"),
                  mobile(4, "TAP 0.2 0.2", "TAP 0.4 0.4")})}};
}

FileSet import_files() {
  const json generic_header = {{"format", "pgagent-episodes"}, {"version", io::kEpisodeFormatVersion},
                               {"benchmark", "generic"}, {"scenario", "notes"}};
  const std::vector<json> generic = {
      generic_header,
      {{"episode_id", "g-1"},
       {"task", "Create a note titled groceries"},
       {"steps", json::array({{{"screen", "notes/g1_0.png"}, {"action", "TAP 0.9 0.9"}},
                              {{"screen", "notes/g1_1.png"}, {"action", R"(TYPE "groceries")"}},
                              {{"screen", "notes/g1_2.png"}, {"action", "COMPLETE"}}})}},
      {{"episode_id", "g-2"},
       {"task", "Delete the first note"},
       {"steps", json::array({{{"screen", {{"locator", "notes/g2_0.png"}, {"scenario", "notes"}}}, {"action", "TAP 0.5 0.2"}},
                              {{"screen", "notes/g2_1.png"}, {"action", "PRESS back"}}})},
       {"final_screen", "notes/g2_2.png"}},
  };
  const std::vector<json> aitw = {
      {{"episode_id", "aitw-1"},
       {"goal_info", "turn on wifi"},
       {"scenario", "general"},
       {"steps", json::array({{{"image_path", "general/1_0.png"}, {"action_type_id", 4}, {"touch_yx", {0.5, 0.5}}, {"lift_yx", {0.5, 0.5}}},
                              {{"image_path", "general/1_1.png"}, {"action_type_id", 4}, {"touch_yx", {0.8, 0.5}}, {"lift_yx", {0.2, 0.5}}},
                              {{"image_path", "general/1_2.png"}, {"action_type_id", 3}, {"type_text", "wifi"}},
                              {{"image_path", "general/1_3.png"}, {"action_type_id", 7}},
                              {{"image_path", "general/1_4.png"}, {"action_type_id", 5}},
                              {{"image_path", "general/1_5.png"}, {"action_type_id", 6}},
                              {{"image_path", "general/1_6.png"}, {"action_type_id", 10}}})}},
      {{"episode_id", "aitw-2"},
       {"goal_info", "open the camera"},
       {"scenario", "general"},
       {"steps", json::array({{{"image_path", "general/2_0.png"}, {"action_type_id", 4}, {"touch_yx", {0.3, 0.6}}, {"lift_yx", {0.3, 0.6}}},
                              {{"action_type_id", 10}}})}},
      {{"episode_id", "aitw-3"},
       {"goal_info", "long press an icon"},
       {"scenario", "general"},
       {"steps", json::array({{{"image_path", "general/3_0.png"}, {"action_type_id", 99}}})}},
  };
  const std::vector<json> mind2web = {
      {{"annotation_id", "m2w-1"},
       {"confirmed_task", "Buy a large blue shirt"},
       {"domain", "shopping"},
       {"actions",
        json::array({{{"screenshot", "shop/1_0.png"}, {"operation", {{"op", "CLICK"}, {"value", ""}}},
                      {"pos_candidates", json::array({{{"backend_node_id", "101"}, {"bbox", {0.1, 0.1, 0.3, 0.2}}}})}},
                     {{"screenshot", "shop/1_1.png"}, {"operation", {{"op", "TYPE"}, {"value", "blue shirt"}}},
                      {"pos_candidates", json::array({{{"backend_node_id", "205"}}})}},
                     {{"screenshot", "shop/1_2.png"}, {"operation", {{"op", "SELECT"}, {"value", "Large"}}},
                      {"pos_candidates", json::array({{{"backend_node_id", "311"}}, {{"backend_node_id", "312"}}})}}})}},
      {{"annotation_id", "m2w-2"},
       {"confirmed_task", "Find the store hours"},
       {"domain", "shopping"},
       {"actions", json::array({{{"screenshot", "shop/2_0.png"}, {"operation", {{"op", "CLICK"}, {"value", ""}}},
                                 {"pos_candidates", json::array()}}})}},
  };
  const std::vector<json> odyssey = {
      {{"episode_id", "ody-1"},
       {"instruction", "Share a photo by message"},
       {"category", "multi_apps"},
       {"steps", json::array({{{"screenshot", "ody/1_0.png"}, {"action", "CLICK"}, {"info", json::array({{500, 250}})}},
                              {{"screenshot", "ody/1_1.png"}, {"action", "SCROLL"}, {"info", json::array({{500, 800}, {500, 200}})}},
                              {{"screenshot", "ody/1_2.png"}, {"action", "TEXT"}, {"info", "hello"}},
                              {{"screenshot", "ody/1_3.png"}, {"action", "PRESS_HOME"}},
                              {{"screenshot", "ody/1_4.png"}, {"action", "COMPLETE"}}})}},
      {{"episode_id", "ody-2"},
       {"instruction", "Switch to the previous app"},
       {"category", "multi_apps"},
       {"steps", json::array({{{"screenshot", "ody/2_0.png"}, {"action", "PRESS_RECENT"}}})}},
  };
  return {{"import/generic.jsonl", jsonl(generic)},
          {"import/aitw.jsonl", jsonl(aitw)},
          {"import/mind2web.jsonl", jsonl(mind2web)},
          {"import/odyssey.jsonl", jsonl(odyssey)}};
}

// Four pages whose out-edges total 30, so a default mobile retrieval (k = 20, n = 4) has to
// cut the candidate list.
FileSet cap30_files() {
  static const std::array<const char*, 4> summaries = {
      "Inbox page listing email threads with a compose button",
      "Email thread page showing messages with reply and archive buttons",
      "Compose page with recipient, subject and body fields",
      "Mail settings page with signature and notification options",
  };
  static const std::array<std::size_t, 4> out_degree = {8, 8, 7, 7};
  HashingEmbedder embedder;
  PageGraph g("mail", Platform::mobile);
  g.set_embedder_id(embedder.id());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    ids.push_back(g.add_node(summaries[i], fmt::format("mail/page_{}.png", i), embedder.embed(summaries[i]).values).node_id);
  }
  std::size_t serial = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < out_degree[i]; ++j) {
      ++serial;
      g.add_edge(ids[i], ids[(i + 1 + j) % ids.size()], {fmt::format("tap control {}", serial)},
                 fmt::format("mail task {}", serial));
    }
  }
  return {{"graphs/cap30.graph.json", io::graph_to_text(g, json{{"fixture", "cap30"}})},
          {"graphs/cap30.graph.json.emb", io::embeddings_to_bytes(g)}};
}

// The demo graph built from the generator episodes, as `build-graph` writes it.
FileSet demo_graph_files() {
  ScratchDir dir;
  const auto episodes = dir.path() / "demo_generator.jsonl";
  io::atomic_write(episodes, generator_files().front().second);
  commands::BuildOptions opts;
  opts.episodes = episodes;
  opts.graph_out = dir.path() / "demo.graph.json";
  commands::build_graph(RunConfig{}, opts);
  return {{"graphs/demo.graph.json", io::read_file(opts.graph_out)},
          {"graphs/demo.graph.json.emb", io::read_file(io::embedding_path(opts.graph_out))},
          {"graphs/demo.graph.json.manifest.json", io::read_file(commands::default_manifest_path(opts.graph_out))}};
}

// Oracle exchanges for the determinism suite: build-graph over the generator episodes, a
// retrieval on the launcher screen, every demo task guided by the demo graph, and a
// teacher-forced evaluation, all recorded from the scripted backend with a frozen clock.
FileSet replay_files() {
  ScratchDir dir;
  const auto cache = dir.path() / "demo.cache";
  auto backend = std::make_shared<ReplayBackend>(cache, ReplayMode::record,
                                                 std::make_shared<ScriptedBackend>(world::demo_world()));
  backend->set_clock([] { return std::int64_t{0}; });
  const RunConfig config;

  const auto episodes = dir.path() / "demo_generator.jsonl";
  io::atomic_write(episodes, generator_files().front().second);
  commands::BuildOptions build;
  build.episodes = episodes;
  build.graph_out = dir.path() / "demo.graph.json";
  commands::build_graph(config, build, backend);

  const auto spec = world::demo_world();
  commands::RetrieveOptions retrieve;
  retrieve.graph = build.graph_out;
  retrieve.screen = world::screen_locator(world::initial_state(spec));
  commands::retrieve(config, retrieve, backend);

  commands::RunOptions run;
  run.graph = build.graph_out;
  run.all_tasks = true;
  commands::run(config, run, backend);

  commands::EvalOptions eval;
  eval.graph = build.graph_out;
  eval.episodes = episodes;
  commands::eval(config, eval, backend);

  return {{"replay/demo.cache", io::read_file(cache)}};
}

std::string update_command(std::string_view id) { return fmt::format("pgagent fixtures --update --only {}", id); }

}  // namespace

const std::vector<Fixture>& registry() {
  static const std::vector<Fixture> all = {
      {"demo-world", "Eight-page demo world definition",
       "pgagent world export --world demo --out fixtures/world/demo_world.json",
       [] { return demo_world_files(); }},
      {"demo-true-graph-dot", "Golden DOT rendering of the demo world's reference page graph",
       update_command("demo-true-graph-dot"), [] { return demo_dot_files(); }},
      {"demo-generator-episodes", "Shortest-path episodes for the ten demo tasks",
       fmt::format("pgagent world episodes --world demo --kind generator --seed {} --out "
                   "fixtures/episodes/demo_generator.jsonl",
                   kGeneratorSeed),
       [] { return generator_files(); }},
      {"demo-coverage-episodes", "One episode per demo-world transition",
       "pgagent world episodes --world demo --kind coverage --out fixtures/episodes/demo_coverage.jsonl",
       [] { return coverage_files(); }},
      {"edge-merge", "In-page-then-jump and trailing-in-page episodes", update_command("edge-merge"),
       [] { return edge_merge_files(); }},
      {"metric-records", "Hand-built web and mobile step records with known metric values",
       update_command("metric-records"), [] { return metric_files(); }},
      {"benchmark-imports", "Small dumps in each supported benchmark shape, with rejectable records",
       update_command("benchmark-imports"), [] { return import_files(); }},
      {"cap30-graph", "Four-node graph with 30 candidate guidelines", update_command("cap30-graph"),
       [] { return cap30_files(); }},
      {"demo-graph", "Page graph built from the demo generator episodes with the scripted oracle",
       "pgagent build-graph --episodes fixtures/episodes/demo_generator.jsonl --graph-out "
       "fixtures/graphs/demo.graph.json",
       [] { return demo_graph_files(); }},
      {"demo-replay-cache", "Recorded scripted-oracle exchanges for the replay determinism suite",
       update_command("demo-replay-cache"), [] { return replay_files(); }},
  };
  return all;
}

json manifest(const std::vector<std::pair<const Fixture*, FileSet>>& produced) {
  json entries = json::array();
  for (const auto& [fixture, files] : produced) {
    json fs_json = json::array();
    for (const auto& [path, bytes] : files) fs_json.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
    entries.push_back({{"id", fixture->id}, {"purpose", fixture->purpose}, {"command", fixture->command},
                       {"files", fs_json}});
  }
  return {{"format", "pgagent-fixture-manifest"}, {"version", 1}, {"fixtures", entries}};
}

std::string Report::render() const {
  std::string out;
  for (const auto& w : written) out += fmt::format("updated {}\n", w);
  for (const auto& d : drifted) out += fmt::format("drifted {} ({}): {}\n", d.fixture, d.path, d.reason);
  out += fmt::format("{} drifted fixtures\n", drifted.size());
  return out;
}

Report regenerate(const fs::path& root, bool update, const std::vector<std::string>& only) {
  for (const auto& id : only) {
    const bool known = std::any_of(registry().begin(), registry().end(), [&](const Fixture& f) { return f.id == id; });
    if (!known) fail(ErrorKind::invalid_argument, fmt::format("unknown fixture '{}'", id));
  }
  auto selected = [&](const std::string& id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };
  std::vector<std::pair<const Fixture*, FileSet>> produced;
  for (const auto& f : registry()) produced.emplace_back(&f, f.produce());

  Report report;
  auto compare = [&](const std::string& fixture, const std::string& rel, const std::string& bytes) {
    const fs::path target = root / rel;
    std::string reason;
    if (!fs::exists(target)) {
      reason = "missing";
    } else if (io::read_file(target) != bytes) {
      reason = "content differs";
    }
    if (reason.empty()) return;
    if (update) {
      io::atomic_write(target, bytes);
      report.written.push_back(rel);
    } else {
      report.drifted.push_back({fixture, rel, reason});
    }
  };
  for (const auto& [fixture, files] : produced) {
    if (!selected(fixture->id)) continue;
    for (const auto& [rel, bytes] : files) compare(fixture->id, rel, bytes);
  }
  compare("manifest", std::string(kManifestPath), manifest(produced).dump(2) + "\n");
  return report;
}

}  // namespace pgagent::fixtures
