#include <doctest.h>

#include <algorithm>

#include "pgagent/fixtures.hpp"
#include "pgagent/io.hpp"
#include "test_support.hpp"

using namespace pgagent;
namespace fs = std::filesystem;

namespace {

fs::path copy_fixture_tree(const pgtest::TempDir& dir) {
  const auto root = dir / "fixtures";
  fs::copy(pgtest::fixture(""), root, fs::copy_options::recursive);
  return root;
}

bool drifted(const fixtures::Report& r, std::string_view id) {
  return std::any_of(r.drifted.begin(), r.drifted.end(), [&](const fixtures::Drift& d) { return d.fixture == id; });
}

}  // namespace

TEST_SUITE("fixtures") {
  TEST_CASE("the checked-in fixtures match their producers") {
    const auto report = fixtures::regenerate(pgtest::fixture(""), false);
    INFO(report.render());
    CHECK(report.drifted.empty());
    CHECK(report.written.empty());
  }

  TEST_CASE("every manifest entry names a regeneration command and a checksum") {
    const auto manifest = io::load_json(pgtest::fixture("manifest.json"));
    REQUIRE(manifest.contains("fixtures"));
    CHECK(manifest["fixtures"].size() == fixtures::registry().size());
    for (const auto& entry : manifest["fixtures"]) {
      CHECK(entry["command"].get<std::string>().starts_with("pgagent "));
      for (const auto& file : entry["files"]) CHECK(file["sha256"].get<std::string>().size() == 64);
    }
  }

  TEST_CASE("a hand edit is reported as drift and --update repairs it") {
    pgtest::TempDir dir;
    const auto root = copy_fixture_tree(dir);
    io::atomic_write(root / "world/demo_true_graph.dot", "digraph edited {}\n");
    fs::remove(root / "metrics/web_steps.jsonl");

    const auto before = fixtures::regenerate(root, false);
    CHECK(drifted(before, "demo-true-graph-dot"));
    CHECK(drifted(before, "metric-records"));
    CHECK_FALSE(drifted(before, "demo-world"));

    const auto only = fixtures::regenerate(root, false, {"demo-world"});
    CHECK_FALSE(drifted(only, "demo-true-graph-dot"));

    const auto update = fixtures::regenerate(root, true);
    CHECK_FALSE(update.written.empty());
    CHECK(fixtures::regenerate(root, false).drifted.empty());
    const auto again = fixtures::regenerate(root, true);
    CHECK(again.written.empty());
    CHECK(io::read_file(root / "world/demo_true_graph.dot") ==
          io::read_file(pgtest::fixture("world/demo_true_graph.dot")));
  }

  TEST_CASE("the fixtures subcommand checks and exits by drift") {
    CHECK(pgtest::run_cli("fixtures --check --root " + pgtest::q(pgtest::fixture(""))).status == 0);
    pgtest::TempDir dir;
    const auto root = copy_fixture_tree(dir);
    io::atomic_write(root / "episodes/trailing_in_page.jsonl", "{}\n");
    CHECK(pgtest::run_cli("fixtures --check --root " + pgtest::q(root)).status == 1);
    CHECK(pgtest::run_cli("fixtures --update --root " + pgtest::q(root)).status == 0);
    CHECK(pgtest::run_cli("fixtures --check --root " + pgtest::q(root)).status == 0);
  }
}
