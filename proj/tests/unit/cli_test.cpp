#include <doctest.h>

#include <map>

#include <nlohmann/json.hpp>

#include "pgagent/backends.hpp"
#include "pgagent/io.hpp"
#include "test_support.hpp"

using namespace pgagent;
using pgtest::q;
using pgtest::run_cli;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_SUITE("cli") {
  TEST_CASE("help lists every flag of every subcommand") {
    const std::map<std::string, std::vector<std::string>> expected = {
        {"ingest", {"--adapter", "--source", "--out", "--rejects-out", "--scenario"}},
        {"build-graph",
         {"--episodes", "--graph-out", "--manifest-out", "--sample-fraction", "--seed", "--skip-policy", "--platform"}},
        {"stats", {"--graph", "--manifest", "--json", "--out"}},
        {"export-dot", {"--graph", "--out", "--label-mode", "--max-label-chars"}},
        {"retrieve", {"--screen", "--summary", "--json", "--out", "--k", "--n", "--l"}},
        {"run", {"--goal", "--task-file", "--all-tasks", "--transcript-out", "--max-steps", "--guideline-mode"}},
        {"eval",
         {"--episodes", "--metrics", "--predictions-out", "--predictions-in", "--report-out", "--jobs",
          "--tap-threshold", "--select-click-equivalence"}},
        {"world export", {"--out"}},
        {"world generate", {"--seed", "--pages", "--transitions", "--max-out-degree", "--field-probability", "--tasks"}},
        {"world episodes", {"--kind", "--seed", "--out"}},
        {"fixtures", {"--update", "--check", "--only", "--root"}},
    };
    const std::vector<std::string> config_flags = {"--config", "--oracle", "--replay-cache", "--api-key-env",
                                                   "--embedder", "--history-window", "--log-level"};
    for (const auto& [sub, flags] : expected) {
      CAPTURE(sub);
      const auto r = run_cli(sub + " --help");
      CHECK(r.status == 0);
      for (const auto& f : flags) CHECK_MESSAGE(r.out.find(f) != std::string::npos, f);
      if (sub != "stats" && sub != "export-dot" && sub != "fixtures" && sub != "world generate") {
        for (const auto& f : config_flags) CHECK_MESSAGE(r.out.find(f) != std::string::npos, f);
      }
    }
  }

  TEST_CASE("unknown flags and missing arguments exit 1") {
    CHECK(run_cli("build-graph --bogus").status == 1);
    CHECK(run_cli("retrieve --graph x --frobnicate").status == 1);
    CHECK(run_cli("eval").status == 1);
    CHECK(run_cli("no-such-command").status == 1);
  }

  TEST_CASE("the API key is never a flag") {
    for (const char* flag : {"--api-key", "--key", "--token"}) {
      CAPTURE(flag);
      CHECK(run_cli(std::string("run --all-tasks ") + flag + " sk-123").status == 1);
    }
    CHECK(run_cli("run --help").out.find("--api-key ") == std::string::npos);
  }

  TEST_CASE("build-graph on the demo corpus creates eight nodes") {
    pgtest::TempDir dir;
    const auto r = run_cli("build-graph --episodes " + q(pgtest::fixture("episodes/demo_generator.jsonl")) +
                           " --graph-out " + q(dir / "g.json") + " --sample-fraction 1.0");
    REQUIRE(r.status == 0);
    CHECK(json::parse(r.out)["nodes_created"] == 8);
    CHECK(fs::exists(dir / "g.json.manifest.json"));
    CHECK(io::read_file(dir / "g.json") == io::read_file(pgtest::fixture("graphs/demo.graph.json")));
  }

  TEST_CASE("retrieve on an empty graph") {
    pgtest::TempDir dir;
    io::save_graph(PageGraph("empty"), dir / "empty.json");
    const auto r = run_cli("retrieve --graph " + q(dir / "empty.json") + " --screen world://page/launcher/state/0");
    CHECK(r.status == 0);
    CHECK(r.out == "No guidelines available.\n");
  }

  TEST_CASE("eval with the scripted oracle matches every gold action") {
    pgtest::TempDir dir;
    const auto r = run_cli("eval --graph " + q(pgtest::fixture("graphs/demo.graph.json")) + " --episodes " +
                           q(pgtest::fixture("episodes/demo_generator.jsonl")) + " --report-out " + q(dir / "r.json") +
                           " --jobs 3");
    REQUIRE(r.status == 0);
    const auto report = io::load_json(dir / "r.json");
    CHECK(report["overall"]["action_match_rate"] == 1.0);
  }

  TEST_CASE("oracle failures exit 2") {
    pgtest::TempDir dir;
    io::atomic_write(dir / "empty.cache", std::string(ReplayBackend::kHeader) + "\n");
    const auto r = run_cli("run --all-tasks --oracle replay --replay-cache " + q(dir / "empty.cache") +
                           " --transcript-out " + q(dir / "t.jsonl"));
    CHECK(r.status == 2);
    CHECK(fs::exists(dir / "t.jsonl"));
    const auto b = run_cli("build-graph --episodes " + q(pgtest::fixture("episodes/demo_generator.jsonl")) +
                           " --graph-out " + q(dir / "g.json") + " --oracle replay --replay-cache " +
                           q(dir / "empty.cache") + " --skip-policy episode");
    CHECK(b.status == 0);  // the episode policy absorbs the failures and reports them
    const auto s = run_cli("retrieve --graph " + q(pgtest::fixture("graphs/demo.graph.json")) +
                           " --screen world://page/cart/state/0 --oracle replay --replay-cache " + q(dir / "empty.cache"));
    CHECK(s.status == 2);
  }

  TEST_CASE("flags override the config file") {
    pgtest::TempDir dir;
    io::atomic_write(dir / "c.toml", "[retrieval]\nk = 3\n[agent]\nmax_steps = 2\n");
    const std::string base = "retrieve --graph " + q(pgtest::fixture("graphs/demo.graph.json")) +
                             " --summary 'Shopping cart page' --json --config " + q(dir / "c.toml");
    const auto from_file = run_cli(base);
    REQUIRE(from_file.status == 0);
    CHECK(json::parse(from_file.out)["guidelines"].size() == 3);
    const auto from_flag = run_cli(base + " --k 1");
    CHECK(json::parse(from_flag.out)["guidelines"].size() == 1);
    io::atomic_write(dir / "bad.toml", "[retrieval]\nq = 1\n");
    CHECK(run_cli("retrieve --graph x --summary y --config " + q(dir / "bad.toml")).status == 1);
  }

  TEST_CASE("diagnostics go to standard error as key=value lines") {
    pgtest::TempDir dir;
    const auto r = run_cli("world episodes --kind coverage --out " + q(dir / "c.jsonl") + " --log-level info", true);
    CHECK(r.status == 0);
    CHECK(r.out.find("level=info event=") != std::string::npos);
    const auto quiet = run_cli("world episodes --kind coverage --out " + q(dir / "c.jsonl"));
    CHECK(quiet.out.find("level=") == std::string::npos);
  }

  TEST_CASE("stats and export-dot") {
    pgtest::TempDir dir;
    const auto s = run_cli("stats --graph " + q(pgtest::fixture("graphs/demo.graph.json")) + " --json");
    REQUIRE(s.status == 0);
    CHECK(json::parse(s.out)["total"]["nodes"] == 8);
    const auto d = run_cli("export-dot --graph " + q(pgtest::fixture("graphs/demo.graph.json")) + " --out " +
                           q(dir / "g.dot"));
    CHECK(d.status == 0);
    CHECK(io::read_file(dir / "g.dot").starts_with("digraph page_graph {"));
  }

  TEST_CASE("ingest writes episodes and rejects") {
    pgtest::TempDir dir;
    const auto r = run_cli("ingest --adapter aitw --source " + q(pgtest::fixture("import/aitw.jsonl")) + " --out " +
                           q(dir / "e.jsonl"));
    CHECK(r.status == 0);
    CHECK(r.out == "episodes=1 rejects=2\n");
    CHECK(io::load_json(dir / "e.jsonl.rejects.json")["rejects"].size() == 2);
  }
}
