#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgagent/eval.hpp"
#include "pgagent/model.hpp"
#include "pgagent/world.hpp"

// File formats. Text artifacts are JSON or JSON Lines with sorted keys and a versioned
// header; node embeddings go to a little-endian float32 sidecar next to the graph file.
// Every writer goes through a temp file plus rename, so readers never see partial files.
namespace pgagent::io {

namespace fs = std::filesystem;

inline constexpr int kGraphSchemaVersion = PageGraph::kSchemaVersion;
inline constexpr int kEpisodeFormatVersion = 1;
inline constexpr int kTranscriptFormatVersion = 1;
inline constexpr int kPredictionFormatVersion = 1;
inline constexpr std::string_view kEmbeddingMagic = "PGEMB001";

/// Writes `bytes` to `path` via a sibling temp file and an atomic rename.
void atomic_write(const fs::path& path, std::string_view bytes);
/// Whole file as bytes; Error(io) when unreadable.
std::string read_file(const fs::path& path);

/// Parses JSON, turning syntax errors into Error(parse_error) with line and column.
nlohmann::json parse_json(std::string_view text, std::string_view source);

// JSON mappings shared by the file formats and the CLI.
nlohmann::json to_json(const ScreenRef& s);
ScreenRef screen_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Episode& e);
Episode episode_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Guideline& g);
Guideline guideline_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AgentTranscript& t);
AgentTranscript transcript_from_json(const nlohmann::json& j);
nlohmann::json to_json(const world::WorldSpec& w);
world::WorldSpec world_from_json(const nlohmann::json& j);

/// Sidecar path for a graph file: "<path>.emb".
fs::path embedding_path(const fs::path& graph_path);

/// Saves the graph (and its embedding sidecar when any node carries one). `provenance` is
/// stored verbatim in the header.
void save_graph(const PageGraph& graph, const fs::path& path, const nlohmann::json& provenance = nullptr);
std::string graph_to_text(const PageGraph& graph, const nlohmann::json& provenance = nullptr);
std::string embeddings_to_bytes(const PageGraph& graph);

struct LoadedGraph {
  PageGraph graph;
  nlohmann::json provenance;
};
/// Throws Error(migration) on a schema version other than the current one, Error(parse_error)
/// on malformed text, Error(validation) naming the offending node or edge.
LoadedGraph load_graph_file(const fs::path& path);
PageGraph load_graph(const fs::path& path);

struct EpisodeFile {
  std::string benchmark = "generic";
  std::string scenario;
  std::vector<Episode> episodes;
  bool operator==(const EpisodeFile&) const = default;
};
std::string episodes_to_text(const EpisodeFile& file);
void save_episodes(const EpisodeFile& file, const fs::path& path);
/// Errors carry the 1-based line number.
EpisodeFile load_episodes(const fs::path& path);
EpisodeFile parse_episodes(std::string_view text, std::string_view source);

void save_world(const world::WorldSpec& spec, const fs::path& path);
world::WorldSpec load_world(const fs::path& path);

struct TranscriptFile {
  nlohmann::json config;
  std::vector<AgentTranscript> transcripts;
  bool operator==(const TranscriptFile&) const = default;
};
void save_transcripts(const TranscriptFile& file, const fs::path& path);
TranscriptFile load_transcripts(const fs::path& path);

struct Prediction {
  std::string episode_id;
  std::size_t step = 0;
  Action action;
  bool operator==(const Prediction&) const = default;
};
struct PredictionFile {
  nlohmann::json config;
  std::vector<Prediction> predictions;
  bool operator==(const PredictionFile&) const = default;
};
std::string predictions_to_text(const PredictionFile& file);
void save_predictions(const PredictionFile& file, const fs::path& path);
PredictionFile load_predictions(const fs::path& path);

/// Mobile and web metric fixtures: JSON Lines of {scenario, gold, predicted, gold_elements?,
/// gold_bbox?} with actions in the decision wire grammar.
std::vector<StepRecord> load_step_records(const fs::path& path);

void save_json(const nlohmann::json& j, const fs::path& path);
nlohmann::json load_json(const fs::path& path);

struct DotOptions {
  enum class LabelMode { summary, id };
  LabelMode label_mode = LabelMode::summary;
  std::size_t max_label_chars = 40;
};
DotOptions::LabelMode parse_label_mode(std::string_view s);
/// Nodes in id order, edges in insertion order, one `->` statement per edge.
std::string graph_to_dot(const PageGraph& graph, const DotOptions& options = {});
void export_dot(const PageGraph& graph, const fs::path& path, const DotOptions& options = {});

struct Reject {
  std::size_t record = 0;  // 1-based position in the source
  std::string id;
  std::string reason;
  bool operator==(const Reject&) const = default;
};
struct ImportResult {
  EpisodeFile file;
  std::vector<Reject> rejects;
};
/// Maps a benchmark dump (JSON array or JSON Lines) into episodes. Adapters: generic, aitw,
/// mind2web, odyssey. Records that cannot be mapped are listed in `rejects` with a reason.
ImportResult import_benchmark(std::string_view adapter, const fs::path& source);
ImportResult import_benchmark_text(std::string_view adapter, std::string_view text, std::string_view source);
nlohmann::json rejects_to_json(const std::vector<Reject>& rejects);

}  // namespace pgagent::io
