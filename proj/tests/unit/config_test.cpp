#include <doctest.h>

#include <nlohmann/json.hpp>

#include "pgagent/config.hpp"
#include "pgagent/error.hpp"
#include "test_support.hpp"

using namespace pgagent;
using nlohmann::json;
namespace fs = std::filesystem;

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

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("retrieval hyperparameter snapshot") {
    const RunConfig c;
    CHECK(c.retrieval.resolve(Platform::mobile) == RetrievalConfig{20, 4, 3});
    CHECK(c.retrieval.resolve(Platform::web) == RetrievalConfig{10, 4, 3});
    CHECK(c.agent_config(Platform::mobile).max_steps == 15);
    CHECK(c.agent_config(Platform::mobile).history_window == 5);
    CHECK(c.agent_config(Platform::web).guideline_mode == GuidelineMode::per_step);
    RunConfig fixed;
    fixed.retrieval.k = 7;
    CHECK(fixed.retrieval.resolve(Platform::web).k_max_guidelines == 7);
  }

  TEST_CASE("the shipped config file equals the built-in defaults") {
    const auto c = load_run_config(pgtest::source_dir() / "config" / "pgagent.toml");
    CHECK(c == RunConfig{});
  }

  TEST_CASE("json mapping round-trips, with k echoed as auto") {
    RunConfig c;
    CHECK(c.to_json()["retrieval"]["k"] == "auto");
    CHECK(RunConfig::from_json(c.to_json()) == c);
    c.retrieval.k = 12;
    c.agent.guideline_mode = "once";
    c.oracle.backend = "replay";
    c.paths.replay_cache = "x.cache";
    CHECK(RunConfig::from_json(c.to_json()) == c);
  }

  TEST_CASE("unknown sections and keys are validation errors") {
    CHECK(kind_of([] { RunConfig::from_json(json{{"oracles", json::object()}}); }) == ErrorKind::validation);
    CHECK(kind_of([] { RunConfig::from_json(json{{"oracle", {{"api_key", "sk-123"}}}}); }) == ErrorKind::validation);
    CHECK(kind_of([] { RunConfig::from_json(json{{"retrieval", {{"n", "four"}}}}); }) == ErrorKind::validation);
  }

  TEST_CASE("validation of enumerations and ranges") {
    auto bad = [](auto mutate) {
      RunConfig c;
      mutate(c);
      return kind_of([&] { c.validate(); });
    };
    CHECK(bad([](RunConfig& c) { c.oracle.backend = "magic"; }) == ErrorKind::validation);
    CHECK(bad([](RunConfig& c) { c.agent.guideline_mode = "always"; }) == ErrorKind::validation);
    CHECK(bad([](RunConfig& c) { c.retrieval.n = 0; }) == ErrorKind::validation);
    CHECK(bad([](RunConfig& c) { c.retrieval.k = 0; }) == ErrorKind::validation);
    CHECK(bad([](RunConfig& c) { c.oracle.backend = "replay"; }) == ErrorKind::validation);
    CHECK(bad([](RunConfig& c) { c.oracle.retries = -1; }) == ErrorKind::validation);
    CHECK(bad([](RunConfig& c) { c.logging.level = "loud"; }) == ErrorKind::validation);
    CHECK_NOTHROW(RunConfig{}.validate());
  }

  TEST_CASE("toml subset") {
    const auto j = parse_toml(R"(
# comment
top = 1
[a]
s = "x \"q\" \n y"   # trailing comment
lit = 'C:\path'
f = 2.5
neg = -3
flag = true
arr = [1, 2, 3]
[a.b]
c = "nested"
)");
    CHECK(j["top"] == 1);
    CHECK(j["a"]["s"] == "x \"q\" \n y");
    CHECK(j["a"]["lit"] == "C:\\path");
    CHECK(j["a"]["f"] == 2.5);
    CHECK(j["a"]["neg"] == -3);
    CHECK(j["a"]["flag"] == true);
    CHECK(j["a"]["arr"] == json::array({1, 2, 3}));
    CHECK(j["a"]["b"]["c"] == "nested");
  }

  TEST_CASE("toml errors name the line") {
    for (const char* bad : {"[a\nx=1", "x = ", "x = \"open", "= 3", "x = 1\nx = 2", "x = [1, 2"}) {
      CAPTURE(bad);
      try {
        parse_toml(bad, "cfg.toml");
        FAIL("expected an error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        CHECK(std::string(e.what()).find("cfg.toml:") != std::string::npos);
      }
    }
  }

  TEST_CASE("backend stacks") {
    RunConfig c;
    CHECK(make_backend(c)->name() == "scripted:demo");
    c.oracle.backend = "replay";
    c.paths.replay_cache = pgtest::fixture("replay/demo.cache").string();
    CHECK(make_backend(c)->name().starts_with("replay"));
    c.oracle.backend = "remote";
    c.oracle.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    c.oracle.model = "m";
    CHECK(make_backend(c)->name() == "remote:m");
    CHECK(make_embedder(RunConfig{})->id() == "hashing-3gram-fnv1a-256");
    CHECK(resolve_world("demo").name == "demo");
    CHECK(resolve_world(pgtest::fixture("world/demo_world.json").string()) == world::demo_world());
  }

  TEST_CASE("prompt directory precedence") {
    RunConfig c;
    c.paths.prompts = "/custom/prompts";
    CHECK(prompts_dir(c) == "/custom/prompts");
    CHECK(fs::exists(prompts_dir(RunConfig{}) / "decide.txt"));
  }
}
