#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgagent/builder.hpp"
#include "pgagent/config.hpp"
#include "pgagent/eval.hpp"
#include "pgagent/io.hpp"

// The operations behind each CLI subcommand. Each returns the text destined for standard
// output; files are written by the operation itself. `backend` overrides the backend the
// config describes (fixture regeneration uses it to pin the replay clock).
namespace pgagent::commands {

namespace fs = std::filesystem;

struct IngestOptions {
  std::string adapter = "generic";
  fs::path source;
  fs::path out;
  fs::path rejects_out;  // empty: "<out>.rejects.json"
  std::string scenario;  // overrides the scenario tag of every screen when set
};
std::string ingest(const IngestOptions& options);

struct BuildOptions {
  fs::path episodes;
  fs::path graph_out;
  fs::path manifest_out;  // empty: "<graph_out>.manifest.json"
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
  SkipPolicy skip_policy = SkipPolicy::tuple;
  std::string scenario;  // empty: the episode file's scenario
  Platform platform = Platform::mobile;
};
struct BuildResult {
  BuildReport report;
  CorpusManifest manifest;
  std::string output;
};
BuildResult build_graph(const RunConfig& config, const BuildOptions& options,
                        std::shared_ptr<ModelBackend> backend = nullptr);

fs::path default_manifest_path(const fs::path& graph_path);
nlohmann::json manifest_to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(const nlohmann::json& j);

struct StatsOptions {
  std::vector<fs::path> graphs;
  std::vector<fs::path> manifests;  // parallel to graphs; missing entries use the default path
  bool json = false;
  fs::path out;  // machine-readable table, optional
};
std::string stats(const StatsOptions& options);

struct DotExportOptions {
  fs::path graph;
  fs::path out;
  io::DotOptions dot;
};
std::string export_dot(const DotExportOptions& options);

struct RetrieveOptions {
  fs::path graph;
  std::string screen;   // screenshot locator; summarized by the oracle
  std::string summary;  // page summary text; skips the oracle
  bool json = false;
  fs::path out;
};
std::string retrieve(const RunConfig& config, const RetrieveOptions& options,
                     std::shared_ptr<ModelBackend> backend = nullptr);

struct RunOptions {
  fs::path graph;  // empty: no guidelines
  std::string world = "demo";
  std::vector<std::string> goals;
  fs::path task_file;  // one goal per line
  bool all_tasks = false;
  fs::path transcript_out;
};
struct TaskOutcome {
  std::string goal;
  Termination terminated_by = Termination::step_budget;
  std::size_t steps = 0;
  bool success = false;
  bool oracle_failure = false;  // the run ended on an oracle or backend error
};
struct RunResult {
  io::TranscriptFile transcripts;
  std::vector<TaskOutcome> outcomes;
  std::string output;
};
RunResult run(const RunConfig& config, const RunOptions& options, std::shared_ptr<ModelBackend> backend = nullptr);

enum class MetricSelector { auto_detect, mobile, web };
MetricSelector parse_metric_selector(std::string_view s);

struct EvalOptions {
  fs::path graph;  // empty: no guidelines
  fs::path episodes;
  MetricSelector metrics = MetricSelector::auto_detect;
  fs::path predictions_out;
  fs::path predictions_in;  // score these instead of asking the oracle
  fs::path report_out;
  std::size_t jobs = 1;
  MetricOptions metric_options;
};
struct EvalResult {
  MetricReport report;
  io::PredictionFile predictions;
  std::string output;
};
EvalResult eval(const RunConfig& config, const EvalOptions& options, std::shared_ptr<ModelBackend> backend = nullptr);

struct WorldGenerateOptions {
  std::uint64_t seed = 1;
  world::RandomWorldOptions shape;
  fs::path out;
};
std::string world_export(std::string_view world_ref, const fs::path& out);
std::string world_generate(const WorldGenerateOptions& options);

enum class EpisodeKind { generator, coverage, walk };
EpisodeKind parse_episode_kind(std::string_view s);
/// Writes episodes produced by the world's generators; the scenario tag is the world name.
std::string world_episodes(std::string_view world_ref, EpisodeKind kind, std::uint64_t seed, const fs::path& out);

}  // namespace pgagent::commands
