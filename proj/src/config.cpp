#include "pgagent/config.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml++/toml.hpp>

#include "pgagent/backends.hpp"
#include "pgagent/error.hpp"
#include "pgagent/io.hpp"
#include "pgagent/log.hpp"
#include "pgagent/scripted.hpp"
#include "pgagent/text.hpp"

#ifndef PGAGENT_DEFAULT_PROMPTS_DIR
#define PGAGENT_DEFAULT_PROMPTS_DIR "config/prompts"
#endif

namespace pgagent {

using nlohmann::json;

// ---------------------------------------------------------------------------------------------
// TOML, parsed by toml++ and mapped onto JSON so that one validator serves both formats.

namespace {

json to_json_value(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) out[std::string(k.str())] = to_json_value(v);
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(to_json_value(v));
    return out;
  }
  if (const auto* v = node.as_string()) return v->get();
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  // Dates and times have no JSON counterpart; keep their TOML spelling.
  std::ostringstream text;
  node.visit([&](const auto& leaf) { text << leaf; });
  return text.str();
}

}  // namespace

json parse_toml(std::string_view text, std::string_view source) {
  try {
    return to_json_value(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    fail(ErrorKind::format, fmt::format("{}:{}: {}", source, e.source().begin.line, e.description()));
  }
}

// ---------------------------------------------------------------------------------------------
// RunConfig

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view expected) {
  fail(ErrorKind::validation, fmt::format("config key '{}' must be {}", key, expected));
}

class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    const json& s = root.at(name_);
    if (!s.is_object()) bad(name_, "a table");
    section_ = &s;
  }

  void string(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) bad(full(key), "a string");
      out = v->get<std::string>();
    }
  }
  void size(const char* key, std::size_t& out) {
    if (const json* v = take(key)) out = positive(key, *v);
  }
  // "auto" leaves the value to the platform default.
  void size(const char* key, std::optional<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (v->is_string() && v->get<std::string>() == "auto") {
        out.reset();
      } else {
        out = positive(key, *v);
      }
    }
  }
  void number(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) bad(full(key), "a number");
      out = v->get<double>();
    }
  }
  void integer(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) bad(full(key), "an integer");
      out = v->get<int>();
    }
  }

  /// Any key not consumed by now is unknown.
  void finish() const {
    if (!section_) return;
    for (const auto& [k, v] : section_->items()) {
      if (!seen_.contains(k)) fail(ErrorKind::validation, fmt::format("unknown config key '{}'", full(k)));
    }
  }

 private:
  [[nodiscard]] std::string full(std::string_view key) const { return fmt::format("{}.{}", name_, key); }

  const json* take(const char* key) {
    seen_.insert(key);
    if (!section_ || !section_->contains(key)) return nullptr;
    return &section_->at(key);
  }

  std::size_t positive(const char* key, const json& v) const {
    if (!v.is_number_integer() || v.get<long long>() < 0) bad(full(key), "a non-negative integer");
    return v.get<std::size_t>();
  }

  std::string name_;
  const json* section_ = nullptr;
  std::set<std::string> seen_;
};

void choice(std::string_view key, const std::string& value, std::initializer_list<std::string_view> allowed) {
  for (auto a : allowed) {
    if (value == a) return;
  }
  const std::vector<std::string> names(allowed.begin(), allowed.end());
  bad(key, fmt::format("one of {}", text::join(names, "|")));
}

}  // namespace

RetrievalConfig RetrievalSettings::resolve(Platform platform) const {
  RetrievalConfig cfg = RetrievalConfig::defaults(platform);
  if (k) cfg.k_max_guidelines = *k;
  cfg.n_nodes = n;
  cfg.l_bfs_layers = l;
  return cfg;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::validation, "config must be a table");
  static const std::set<std::string> sections = {"oracle", "embedder", "retrieval", "agent", "paths", "logging"};
  for (const auto& [k, v] : j.items()) {
    if (!sections.contains(k)) fail(ErrorKind::validation, fmt::format("unknown config section '{}'", k));
  }
  RunConfig c;
  {
    Section s(j, "oracle");
    s.string("backend", c.oracle.backend);
    s.string("world", c.oracle.world);
    s.string("replay_mode", c.oracle.replay_mode);
    s.string("record_from", c.oracle.record_from);
    s.string("endpoint", c.oracle.endpoint);
    s.string("model", c.oracle.model);
    s.string("api_key_env", c.oracle.api_key_env);
    s.string("image_mode", c.oracle.image_mode);
    s.number("timeout_seconds", c.oracle.timeout_seconds);
    s.integer("retries", c.oracle.retries);
    s.finish();
  }
  {
    Section s(j, "embedder");
    s.string("backend", c.embedder.backend);
    s.size("dim", c.embedder.dim);
    s.string("endpoint", c.embedder.endpoint);
    s.string("model", c.embedder.model);
    s.string("api_key_env", c.embedder.api_key_env);
    s.number("timeout_seconds", c.embedder.timeout_seconds);
    s.integer("retries", c.embedder.retries);
    s.finish();
  }
  {
    Section s(j, "retrieval");
    s.size("k", c.retrieval.k);
    s.size("n", c.retrieval.n);
    s.size("l", c.retrieval.l);
    s.finish();
  }
  {
    Section s(j, "agent");
    s.size("max_steps", c.agent.max_steps);
    s.size("history_window", c.agent.history_window);
    s.string("guideline_mode", c.agent.guideline_mode);
    s.finish();
  }
  {
    Section s(j, "paths");
    s.string("graph", c.paths.graph);
    s.string("corpus_root", c.paths.corpus_root);
    s.string("replay_cache", c.paths.replay_cache);
    s.string("prompts", c.paths.prompts);
    s.finish();
  }
  {
    Section s(j, "logging");
    s.string("level", c.logging.level);
    s.finish();
  }
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  return {
      {"oracle",
       {{"backend", oracle.backend},
        {"world", oracle.world},
        {"replay_mode", oracle.replay_mode},
        {"record_from", oracle.record_from},
        {"endpoint", oracle.endpoint},
        {"model", oracle.model},
        {"api_key_env", oracle.api_key_env},
        {"image_mode", oracle.image_mode},
        {"timeout_seconds", oracle.timeout_seconds},
        {"retries", oracle.retries}}},
      {"embedder",
       {{"backend", embedder.backend},
        {"dim", embedder.dim},
        {"endpoint", embedder.endpoint},
        {"model", embedder.model},
        {"api_key_env", embedder.api_key_env},
        {"timeout_seconds", embedder.timeout_seconds},
        {"retries", embedder.retries}}},
      {"retrieval", {{"k", retrieval.k ? json(*retrieval.k) : json("auto")}, {"n", retrieval.n}, {"l", retrieval.l}}},
      {"agent",
       {{"max_steps", agent.max_steps},
        {"history_window", agent.history_window},
        {"guideline_mode", agent.guideline_mode}}},
      {"paths",
       {{"graph", paths.graph},
        {"corpus_root", paths.corpus_root},
        {"replay_cache", paths.replay_cache},
        {"prompts", paths.prompts}}},
      {"logging", {{"level", logging.level}}},
  };
}

void RunConfig::validate() const {
  choice("oracle.backend", oracle.backend, {"scripted", "replay", "remote"});
  choice("oracle.replay_mode", oracle.replay_mode, {"replay", "record"});
  choice("oracle.record_from", oracle.record_from, {"scripted", "remote"});
  choice("oracle.image_mode", oracle.image_mode, {"base64", "url"});
  choice("embedder.backend", embedder.backend, {"hashing", "remote"});
  choice("agent.guideline_mode", agent.guideline_mode, {"per_step", "once", "disabled"});
  choice("logging.level", logging.level, {"debug", "info", "warn", "error"});
  if (oracle.retries < 0) bad("oracle.retries", "at least 0");
  if (embedder.retries < 0) bad("embedder.retries", "at least 0");
  if (oracle.timeout_seconds <= 0) bad("oracle.timeout_seconds", "positive");
  if (embedder.timeout_seconds <= 0) bad("embedder.timeout_seconds", "positive");
  if (embedder.dim == 0) bad("embedder.dim", "positive");
  if (retrieval.k && *retrieval.k == 0) bad("retrieval.k", "positive");
  if (retrieval.n == 0) bad("retrieval.n", "positive");
  if (retrieval.l == 0) bad("retrieval.l", "positive");
  if (agent.max_steps == 0) bad("agent.max_steps", "positive");
  if (oracle.backend == "replay" && paths.replay_cache.empty()) {
    fail(ErrorKind::validation, "the replay backend needs paths.replay_cache (or --replay-cache)");
  }
}

AgentConfig RunConfig::agent_config(Platform platform) const {
  AgentConfig a;
  a.max_steps = agent.max_steps;
  a.history_window = agent.history_window;
  a.guideline_mode = parse_guideline_mode(agent.guideline_mode);
  a.retrieval = retrieval.resolve(platform);
  return a;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return RunConfig::from_json(parse_toml(io::read_file(path), path.string()));
}

std::filesystem::path prompts_dir(const RunConfig& config) {
  if (!config.paths.prompts.empty()) return config.paths.prompts;
  if (const char* env = std::getenv("PGAGENT_PROMPTS_DIR"); env && *env) return env;
  return PGAGENT_DEFAULT_PROMPTS_DIR;
}

world::WorldSpec resolve_world(std::string_view ref) {
  if (ref == "demo") return world::demo_world();
  return io::load_world(std::filesystem::path(ref));
}

namespace {

std::shared_ptr<ModelBackend> live_backend(const RunConfig& config, std::string_view kind) {
  if (kind == "scripted") return std::make_shared<ScriptedBackend>(resolve_world(config.oracle.world));
  RemoteBackendConfig rc;
  rc.endpoint = config.oracle.endpoint;
  rc.model = config.oracle.model;
  rc.api_key_env = config.oracle.api_key_env;
  rc.timeout_seconds = config.oracle.timeout_seconds;
  rc.image_mode = parse_image_mode(config.oracle.image_mode);
  rc.corpus_root = config.paths.corpus_root;
  return std::make_shared<RemoteBackend>(rc);
}

}  // namespace

std::shared_ptr<ModelBackend> make_backend(const RunConfig& config) {
  config.validate();
  if (config.oracle.backend != "replay") return live_backend(config, config.oracle.backend);
  const ReplayMode mode = parse_replay_mode(config.oracle.replay_mode);
  std::shared_ptr<ModelBackend> inner;
  if (mode == ReplayMode::record) inner = live_backend(config, config.oracle.record_from);
  return std::make_shared<ReplayBackend>(config.paths.replay_cache, mode, std::move(inner));
}

std::unique_ptr<Oracle> make_oracle(const RunConfig& config) {
  OracleOptions options;
  options.retries = config.oracle.retries;
  return std::make_unique<Oracle>(make_backend(config), TemplateSet::load_directory(prompts_dir(config)), options);
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& config) {
  if (config.embedder.backend == "hashing") return std::make_unique<HashingEmbedder>(config.embedder.dim);
  RemoteEmbedderConfig rc;
  rc.endpoint = config.embedder.endpoint;
  rc.model = config.embedder.model;
  rc.api_key_env = config.embedder.api_key_env;
  rc.timeout_seconds = config.embedder.timeout_seconds;
  rc.retries = config.embedder.retries;
  rc.dim = config.embedder.dim;
  return std::make_unique<RemoteEmbedder>(rc);
}

}  // namespace pgagent
