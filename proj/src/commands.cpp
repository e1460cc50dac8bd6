#include "pgagent/commands.hpp"

#include <algorithm>
#include <exception>
#include <fstream>

#include <fmt/format.h>

#include "pgagent/agent.hpp"
#include "pgagent/error.hpp"
#include "pgagent/log.hpp"
#include "pgagent/retrieval.hpp"
#include "pgagent/text.hpp"
#include "pgagent/world.hpp"

namespace pgagent::commands {

using nlohmann::json;

namespace {

std::unique_ptr<Oracle> oracle_for(const RunConfig& config, std::shared_ptr<ModelBackend> backend) {
  if (!backend) return make_oracle(config);
  OracleOptions options;
  options.retries = config.oracle.retries;
  return std::make_unique<Oracle>(std::move(backend), TemplateSet::load_directory(prompts_dir(config)), options);
}

PageGraph graph_or_empty(const fs::path& path) {
  if (path.empty()) return PageGraph{};
  return io::load_graph(path);
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

// Inputs are identified by file name and content digest so outputs do not depend on where
// the inputs happen to live.
json input_ref(const fs::path& p) { return {{"file", p.filename().string()}, {"sha256", sha256_hex(io::read_file(p))}}; }

}  // namespace

std::string ingest(const IngestOptions& options) {
  if (options.out.empty()) fail(ErrorKind::invalid_argument, "ingest needs an output path");
  auto result = io::import_benchmark(options.adapter, options.source);
  if (!options.scenario.empty()) {
    result.file.scenario = options.scenario;
    for (auto& e : result.file.episodes) {
      for (auto& st : e.steps) st.screen.scenario = options.scenario;
      if (e.final_screen) e.final_screen->scenario = options.scenario;
    }
  }
  io::save_episodes(result.file, options.out);
  const fs::path rejects = options.rejects_out.empty() ? fs::path(options.out.string() + ".rejects.json") : options.rejects_out;
  io::save_json({{"source", input_ref(options.source)},
                 {"adapter", options.adapter},
                 {"rejects", io::rejects_to_json(result.rejects)}},
                rejects);
  for (const auto& r : result.rejects) {
    log::warn("record_rejected", {log::kv("record", r.record), log::kv("id", r.id), log::kv("reason", r.reason)});
  }
  log::info("benchmark_imported", {log::kv("episodes", result.file.episodes.size()), log::kv("rejects", result.rejects.size())});
  return fmt::format("episodes={} rejects={}\n", result.file.episodes.size(), result.rejects.size());
}

fs::path default_manifest_path(const fs::path& graph_path) { return fs::path(graph_path.string() + ".manifest.json"); }

json manifest_to_json(const CorpusManifest& m) {
  return {{"scenario", m.scenario}, {"episodes", m.episodes}, {"images", m.images}, {"episode_ids", m.episode_ids}};
}

CorpusManifest manifest_from_json(const json& j) {
  try {
    CorpusManifest m;
    m.scenario = j.at("scenario").get<std::string>();
    m.episodes = j.at("episodes").get<std::uint64_t>();
    m.images = j.at("images").get<std::uint64_t>();
    m.episode_ids = j.value("episode_ids", std::vector<std::string>{});
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::format, fmt::format("malformed corpus manifest: {}", e.what()));
  }
}

BuildResult build_graph(const RunConfig& config, const BuildOptions& options, std::shared_ptr<ModelBackend> backend) {
  if (options.graph_out.empty()) fail(ErrorKind::invalid_argument, "build-graph needs --graph-out");
  const auto file = io::load_episodes(options.episodes);
  auto oracle = oracle_for(config, std::move(backend));
  const auto embedder = make_embedder(config);

  PageGraph graph(options.scenario.empty() ? file.scenario : options.scenario, options.platform);
  GraphBuilder builder(graph, *oracle, *embedder, BuilderOptions{config.retrieval.n, options.skip_policy});

  BuildResult result;
  result.report = builder.ingest_corpus(file.episodes, options.sample_fraction, options.seed);

  std::vector<Episode> sampled;
  for (std::size_t i : sample_indices(file.episodes.size(), options.sample_fraction, options.seed)) {
    sampled.push_back(file.episodes[i]);
  }
  result.manifest = make_manifest(graph.scenario(), sampled);

  const json provenance = {{"command", "build-graph"},
                           {"episodes", input_ref(options.episodes)},
                           {"sample_fraction", options.sample_fraction},
                           {"seed", options.seed},
                           {"skip_policy", std::string(to_string(options.skip_policy))},
                           {"oracle", oracle->backend().name()},
                           {"config", config.to_json()},
                           {"report", result.report.to_json()}};
  io::save_graph(graph, options.graph_out, provenance);
  io::save_json(manifest_to_json(result.manifest),
                options.manifest_out.empty() ? default_manifest_path(options.graph_out) : options.manifest_out);
  log::info("graph_built", {log::kv("nodes", graph.node_count()), log::kv("edges", graph.edge_count()),
                            log::kv("episodes", result.report.episodes_processed)});
  result.output = result.report.to_json().dump(2) + "\n";
  return result;
}

std::string stats(const StatsOptions& options) {
  if (options.graphs.empty()) fail(ErrorKind::invalid_argument, "stats needs at least one --graph");
  if (options.manifests.size() > options.graphs.size()) {
    fail(ErrorKind::invalid_argument, "more --manifest values than --graph values");
  }
  std::vector<PageGraph> graphs;
  std::vector<GraphCorpus> inputs;
  graphs.reserve(options.graphs.size());
  for (std::size_t i = 0; i < options.graphs.size(); ++i) {
    graphs.push_back(io::load_graph(options.graphs[i]));
    const fs::path mpath =
        i < options.manifests.size() ? options.manifests[i] : default_manifest_path(options.graphs[i]);
    CorpusManifest manifest;
    if (fs::exists(mpath)) {
      manifest = manifest_from_json(io::load_json(mpath));
    } else {
      log::warn("manifest_missing", {log::kv("path", path_string(mpath))});
    }
    inputs.push_back({nullptr, std::move(manifest)});
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) inputs[i].graph = &graphs[i];
  const StatsTable table = graph_stats(inputs);
  if (!options.out.empty()) io::save_json(table.to_json(), options.out);
  return options.json ? table.to_json().dump(2) + "\n" : table.render();
}

std::string export_dot(const DotExportOptions& options) {
  const PageGraph graph = io::load_graph(options.graph);
  io::export_dot(graph, options.out, options.dot);
  log::info("dot_written", {log::kv("nodes", graph.node_count())});
  return fmt::format("nodes={} edges={}\n", graph.node_count(), graph.edge_count());
}

std::string retrieve(const RunConfig& config, const RetrieveOptions& options, std::shared_ptr<ModelBackend> backend) {
  if (options.screen.empty() == options.summary.empty()) {
    fail(ErrorKind::invalid_argument, "retrieve needs exactly one of --screen or --summary");
  }
  const PageGraph graph = graph_or_empty(options.graph);
  const auto embedder = make_embedder(config);
  const RetrievalConfig rc = config.retrieval.resolve(graph.platform());

  std::vector<Guideline> guidelines;
  if (!options.summary.empty()) {
    if (!graph.empty()) guidelines = guidelines_for_summary(graph, *embedder, options.summary, rc);
  } else {
    auto oracle = oracle_for(config, std::move(backend));
    ScreenRef screen;
    screen.locator = options.screen;
    screen.scenario = graph.scenario();
    guidelines = retrieve_guidelines(graph, *oracle, *embedder, screen, rc);
  }
  const std::string rendered = render_guidelines(guidelines);
  json structured = json::array();
  for (const auto& g : guidelines) structured.push_back(io::to_json(g));
  const json doc = {{"config", config.to_json()},
                    {"retrieval", {{"k", rc.k_max_guidelines}, {"n", rc.n_nodes}, {"l", rc.l_bfs_layers}}},
                    {"guidelines", structured},
                    {"rendered", rendered}};
  if (!options.out.empty()) io::save_json(doc, options.out);
  log::info("guidelines_retrieved", {log::kv("count", guidelines.size())});
  return options.json ? doc.dump(2) + "\n" : rendered + "\n";
}

RunResult run(const RunConfig& config, const RunOptions& options, std::shared_ptr<ModelBackend> backend) {
  const world::WorldSpec spec = resolve_world(options.world);
  std::vector<std::string> goals = options.goals;
  if (!options.task_file.empty()) {
    for (const auto& line : text::split_lines(io::read_file(options.task_file))) {
      const auto g = text::trim(line);
      if (!g.empty() && !g.starts_with("#")) goals.emplace_back(g);
    }
  }
  if (options.all_tasks) {
    for (const auto& t : spec.tasks) goals.push_back(t.goal);
  }
  if (goals.empty()) fail(ErrorKind::invalid_argument, "run needs --goal, --task-file or --all-tasks");

  const PageGraph graph = graph_or_empty(options.graph);
  auto oracle = oracle_for(config, std::move(backend));
  const auto embedder = make_embedder(config);
  Agent agent(*oracle, *embedder, graph, config.agent_config(graph.platform()));

  RunResult result;
  result.transcripts.config = config.to_json();
  std::size_t successes = 0;
  for (const auto& goal : goals) {
    world::WorldEnvironment env(spec);
    AgentTranscript tr = agent.run_task(env, goal);
    const world::WorldTask* task = spec.find_task(goal);
    TaskOutcome outcome;
    outcome.goal = goal;
    outcome.terminated_by = tr.terminated_by;
    outcome.steps = tr.steps.size();
    outcome.oracle_failure = tr.terminated_by == Termination::error &&
                             (tr.error_message.starts_with(to_string(ErrorKind::oracle_unavailable)) ||
                              tr.error_message.starts_with(to_string(ErrorKind::parse_error)));
    outcome.success = task && tr.terminated_by == Termination::complete && world::goal_satisfied(*task, env.state());
    successes += outcome.success ? 1 : 0;
    result.output += fmt::format("{}\t{}\tsteps={}\t{}\n", outcome.success ? "success" : "failure",
                                 to_string(outcome.terminated_by), outcome.steps, goal);
    result.outcomes.push_back(std::move(outcome));
    result.transcripts.transcripts.push_back(std::move(tr));
  }
  result.output += fmt::format("success_rate={}/{}\n", successes, goals.size());
  if (!options.transcript_out.empty()) io::save_transcripts(result.transcripts, options.transcript_out);
  return result;
}

MetricSelector parse_metric_selector(std::string_view s) {
  if (s == "auto") return MetricSelector::auto_detect;
  if (s == "mobile") return MetricSelector::mobile;
  if (s == "web") return MetricSelector::web;
  fail(ErrorKind::invalid_argument, fmt::format("unknown metrics selector '{}' (auto|mobile|web)", s));
}

EvalResult eval(const RunConfig& config, const EvalOptions& options, std::shared_ptr<ModelBackend> backend) {
  if (options.jobs == 0) fail(ErrorKind::invalid_argument, "--jobs must be at least 1");
  const auto file = io::load_episodes(options.episodes);
  const PageGraph graph = graph_or_empty(options.graph);

  struct Slot {
    const Episode* episode;
    std::size_t step;
  };
  std::vector<Slot> slots;
  for (const auto& e : file.episodes) {
    for (std::size_t t = 0; t < e.steps.size(); ++t) slots.push_back({&e, t});
  }
  if (slots.empty()) fail(ErrorKind::precondition, "the episode file holds no steps to evaluate");

  EvalResult result;
  result.predictions.config = config.to_json();
  std::vector<Action> predicted(slots.size());

  if (!options.predictions_in.empty()) {
    const auto given = io::load_predictions(options.predictions_in);
    std::map<std::pair<std::string, std::size_t>, Action> by_key;
    for (const auto& p : given.predictions) by_key[{p.episode_id, p.step}] = p.action;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto it = by_key.find({slots[i].episode->episode_id, slots[i].step});
      if (it == by_key.end()) {
        fail(ErrorKind::validation, fmt::format("no prediction for {} step {}", slots[i].episode->episode_id, slots[i].step));
      }
      predicted[i] = it->second;
    }
  } else {
    auto oracle = oracle_for(config, std::move(backend));
    const auto embedder = make_embedder(config);
    Agent agent(*oracle, *embedder, graph, config.agent_config(graph.platform()));
    std::vector<std::exception_ptr> errors(slots.size());
    const auto count = static_cast<std::ptrdiff_t>(slots.size());
    // Exceptions may not cross the parallel region, so each slot keeps its own.
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(options.jobs))
    for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      try {
        predicted[i] = agent.run_step_prediction(*slots[i].episode, slots[i].step);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<StepRecord> records;
  records.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& gold = slots[i].episode->steps[slots[i].step];
    StepRecord r;
    r.scenario = gold.screen.scenario;
    r.episode_id = slots[i].episode->episode_id;
    r.step = slots[i].step;
    r.gold = gold.action;
    r.predicted = predicted[i];
    records.push_back(std::move(r));
    result.predictions.predictions.push_back({slots[i].episode->episode_id, slots[i].step, predicted[i]});
  }

  Platform platform = graph.platform();
  switch (options.metrics) {
    case MetricSelector::mobile:
      platform = Platform::mobile;
      break;
    case MetricSelector::web:
      platform = Platform::web;
      break;
    case MetricSelector::auto_detect:
      if (options.graph.empty()) {
        platform = std::any_of(records.begin(), records.end(), [](const StepRecord& r) { return element_of(r.gold).has_value(); })
                       ? Platform::web
                       : Platform::mobile;
      }
      break;
  }
  result.report = evaluate_records(records, platform, options.metric_options);

  if (!options.predictions_out.empty()) io::save_predictions(result.predictions, options.predictions_out);
  if (!options.report_out.empty()) {
    json doc = result.report.to_json();
    doc["config"] = config.to_json();
    doc["episodes"] = input_ref(options.episodes);
    doc["rendered"] = result.report.render();
    io::save_json(doc, options.report_out);
  }
  log::info("evaluation_done", {log::kv("steps", result.report.overall.steps)});
  result.output = result.report.render();
  return result;
}

std::string world_export(std::string_view world_ref, const fs::path& out) {
  const auto spec = resolve_world(world_ref);
  io::save_world(spec, out);
  log::info("world_written", {log::kv("world", spec.name), log::kv("pages", spec.pages.size())});
  return fmt::format("world={} pages={} tasks={}\n", spec.name, spec.pages.size(), spec.tasks.size());
}

std::string world_generate(const WorldGenerateOptions& options) {
  const auto spec = world::random_world(options.seed, options.shape);
  io::save_world(spec, options.out);
  std::size_t transitions = 0;
  for (const auto& p : spec.pages) {
    transitions += static_cast<std::size_t>(
        std::count_if(p.widgets.begin(), p.widgets.end(), [](const world::Widget& w) { return !w.target.empty(); }));
  }
  log::info("world_generated", {log::kv("pages", spec.pages.size()), log::kv("transitions", transitions)});
  return fmt::format("world={} pages={} transitions={} tasks={}\n", spec.name, spec.pages.size(), transitions,
                     spec.tasks.size());
}

EpisodeKind parse_episode_kind(std::string_view s) {
  if (s == "generator") return EpisodeKind::generator;
  if (s == "coverage") return EpisodeKind::coverage;
  if (s == "walk") return EpisodeKind::walk;
  fail(ErrorKind::invalid_argument, fmt::format("unknown episode kind '{}' (generator|coverage|walk)", s));
}

std::string world_episodes(std::string_view world_ref, EpisodeKind kind, std::uint64_t seed, const fs::path& out) {
  const auto spec = resolve_world(world_ref);
  io::EpisodeFile file;
  file.benchmark = "synthetic";
  file.scenario = spec.name;
  switch (kind) {
    case EpisodeKind::generator:
      file.episodes = world::generate_episodes(spec, spec.tasks, seed);
      break;
    case EpisodeKind::coverage:
      file.episodes = world::coverage_episodes(spec);
      break;
    case EpisodeKind::walk:
      file.episodes = world::walk_episodes(spec, seed);
      break;
  }
  io::save_episodes(file, out);
  std::size_t steps = 0;
  for (const auto& e : file.episodes) steps += e.steps.size();
  log::info("episodes_written", {log::kv("episodes", file.episodes.size()), log::kv("steps", steps)});
  return fmt::format("episodes={} steps={}\n", file.episodes.size(), steps);
}

}  // namespace pgagent::commands
