#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pgagent/agent.hpp"
#include "pgagent/embedding.hpp"
#include "pgagent/oracle.hpp"
#include "pgagent/world.hpp"

namespace pgagent {

/// Parses a TOML document into the equivalent JSON tree. Errors are Error(format) naming
/// the source and line.
nlohmann::json parse_toml(std::string_view text, std::string_view source = "<toml>");

struct OracleSettings {
  std::string backend = "scripted";  // scripted | replay | remote
  std::string world = "demo";        // scripted backend: "demo" or a world file
  std::string replay_mode = "replay";  // replay | record
  std::string record_from = "scripted";  // backend answering cache misses while recording
  std::string endpoint;
  std::string model;
  std::string api_key_env = "PGAGENT_API_KEY";
  std::string image_mode = "base64";  // base64 | url
  double timeout_seconds = 60.0;
  int retries = 2;
  bool operator==(const OracleSettings&) const = default;
};

struct EmbedderSettings {
  std::string backend = "hashing";  // hashing | remote
  std::size_t dim = 256;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "PGAGENT_API_KEY";
  double timeout_seconds = 30.0;
  int retries = 2;
  bool operator==(const EmbedderSettings&) const = default;
};

struct RetrievalSettings {
  std::optional<std::size_t> k;  // unset: 20 for mobile graphs, 10 for web graphs
  std::size_t n = 4;
  std::size_t l = 3;
  [[nodiscard]] RetrievalConfig resolve(Platform platform) const;
  bool operator==(const RetrievalSettings&) const = default;
};

struct AgentSettings {
  std::size_t max_steps = 15;
  std::size_t history_window = 5;
  std::string guideline_mode = "per_step";
  bool operator==(const AgentSettings&) const = default;
};

struct PathSettings {
  std::string graph;
  std::string corpus_root;
  std::string replay_cache;
  std::string prompts;  // empty: the bundled template directory
  bool operator==(const PathSettings&) const = default;
};

struct LoggingSettings {
  std::string level = "warn";
  bool operator==(const LoggingSettings&) const = default;
};

/// Everything a CLI run can be configured with. Built from defaults, then the config file,
/// then command-line flags, in that order of precedence.
struct RunConfig {
  OracleSettings oracle;
  EmbedderSettings embedder;
  RetrievalSettings retrieval;
  AgentSettings agent;
  PathSettings paths;
  LoggingSettings logging;

  /// Unknown sections or keys and ill-typed values are Error(validation).
  static RunConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  /// Checks enumerations and ranges; throws Error(validation).
  void validate() const;
  [[nodiscard]] AgentConfig agent_config(Platform platform) const;
  bool operator==(const RunConfig&) const = default;
};

RunConfig load_run_config(const std::filesystem::path& path);

/// `paths.prompts` when set, else $PGAGENT_PROMPTS_DIR, else the directory installed with the
/// sources.
std::filesystem::path prompts_dir(const RunConfig& config);

/// "demo" names the built-in world; anything else is a world file.
world::WorldSpec resolve_world(std::string_view ref);

/// Backend stack described by the oracle section. The remote key is read from the
/// environment variable named by `api_key_env` and is never part of the config.
std::shared_ptr<ModelBackend> make_backend(const RunConfig& config);
std::unique_ptr<Oracle> make_oracle(const RunConfig& config);
std::unique_ptr<Embedder> make_embedder(const RunConfig& config);

}  // namespace pgagent
