// Command-line entry point. Exit codes: 0 success, 1 usage/validation/data errors, 2 oracle or
// backend failures. Diagnostics go to standard error as key=value lines; data goes to files or
// standard output.

#include <algorithm>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgagent/commands.hpp"
#include "pgagent/config.hpp"
#include "pgagent/error.hpp"
#include "pgagent/fixtures.hpp"
#include "pgagent/log.hpp"

#ifndef PGAGENT_SOURCE_DIR
#define PGAGENT_SOURCE_DIR "."
#endif

namespace {

using namespace pgagent;

// Every RunConfig field, settable from the command line. Unset flags leave the config file
// (or the default) in force.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::string> oracle, world, replay_mode, record_from, endpoint, model, api_key_env, image_mode;
  std::optional<double> oracle_timeout;
  std::optional<int> oracle_retries;
  std::optional<std::string> embedder, embedder_endpoint, embedder_model, embedder_key_env;
  std::optional<std::size_t> embedding_dim;
  std::optional<double> embedder_timeout;
  std::optional<int> embedder_retries;
  std::optional<std::size_t> k, n, l, max_steps, history_window;
  std::optional<std::string> guideline_mode;
  std::optional<std::string> graph, corpus_root, replay_cache, prompts;
  std::optional<std::string> log_level;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "TOML run configuration")->check(CLI::ExistingFile);
    auto* g = "Configuration overrides";
    app->add_option("--oracle", oracle, "Oracle backend: scripted|replay|remote")->group(g);
    app->add_option("--world", world, "World for the scripted oracle and run environment: demo or a world file")->group(g);
    app->add_option("--replay-mode", replay_mode, "replay|record")->group(g);
    app->add_option("--record-from", record_from, "Backend consulted on cache misses when recording")->group(g);
    app->add_option("--endpoint", endpoint, "Remote chat-completions URL")->group(g);
    app->add_option("--model", model, "Remote model name")->group(g);
    app->add_option("--api-key-env", api_key_env, "Name of the environment variable holding the API key")->group(g);
    app->add_option("--image-mode", image_mode, "base64|url")->group(g);
    app->add_option("--timeout", oracle_timeout, "Remote oracle timeout in seconds")->group(g);
    app->add_option("--retries", oracle_retries, "Extra oracle attempts after a failure")->group(g);
    app->add_option("--embedder", embedder, "Embedder backend: hashing|remote")->group(g);
    app->add_option("--embedder-endpoint", embedder_endpoint, "Remote embeddings URL")->group(g);
    app->add_option("--embedder-model", embedder_model, "Remote embedding model")->group(g);
    app->add_option("--embedder-api-key-env", embedder_key_env, "Environment variable holding the embedder key")->group(g);
    app->add_option("--embedding-dim", embedding_dim, "Embedding dimension")->group(g);
    app->add_option("--embedder-timeout", embedder_timeout, "Remote embedder timeout in seconds")->group(g);
    app->add_option("--embedder-retries", embedder_retries, "Extra embedder attempts")->group(g);
    app->add_option("--k", k, "Maximum guidelines per retrieval")->group(g);
    app->add_option("--n", n, "Candidate nodes per similarity search")->group(g);
    app->add_option("--l", l, "BFS layers")->group(g);
    app->add_option("--max-steps", max_steps, "Agent step budget")->group(g);
    app->add_option("--history-window", history_window, "Recent steps shown to the agent (0 = all)")->group(g);
    app->add_option("--guideline-mode", guideline_mode, "per_step|once|disabled")->group(g);
    app->add_option("--graph", graph, "Page graph file")->group(g);
    app->add_option("--corpus-root", corpus_root, "Directory relative screenshot locators resolve against")->group(g);
    app->add_option("--replay-cache", replay_cache, "Replay cache file")->group(g);
    app->add_option("--prompts", prompts, "Prompt template directory")->group(g);
    app->add_option("--log-level", log_level, "debug|info|warn|error")->group(g);
  }

  [[nodiscard]] RunConfig resolve() const {
    RunConfig c = config_file.empty() ? RunConfig{} : load_run_config(config_file);
    auto set = [](auto& field, const auto& flag) {
      if (flag) field = *flag;
    };
    set(c.oracle.backend, oracle);
    set(c.oracle.world, world);
    set(c.oracle.replay_mode, replay_mode);
    set(c.oracle.record_from, record_from);
    set(c.oracle.endpoint, endpoint);
    set(c.oracle.model, model);
    set(c.oracle.api_key_env, api_key_env);
    set(c.oracle.image_mode, image_mode);
    set(c.oracle.timeout_seconds, oracle_timeout);
    set(c.oracle.retries, oracle_retries);
    set(c.embedder.backend, embedder);
    set(c.embedder.endpoint, embedder_endpoint);
    set(c.embedder.model, embedder_model);
    set(c.embedder.api_key_env, embedder_key_env);
    set(c.embedder.dim, embedding_dim);
    set(c.embedder.timeout_seconds, embedder_timeout);
    set(c.embedder.retries, embedder_retries);
    if (k) c.retrieval.k = *k;
    set(c.retrieval.n, n);
    set(c.retrieval.l, l);
    set(c.agent.max_steps, max_steps);
    set(c.agent.history_window, history_window);
    set(c.agent.guideline_mode, guideline_mode);
    set(c.paths.graph, graph);
    set(c.paths.corpus_root, corpus_root);
    set(c.paths.replay_cache, replay_cache);
    set(c.paths.prompts, prompts);
    set(c.logging.level, log_level);
    c.validate();
    log::set_level(log::parse_level(c.logging.level));
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Page-graph GUI agent toolkit: build graphs from episodes, retrieve guidelines, run and evaluate agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pgagent 0.1.0");

  ConfigFlags flags;
  std::string out_text;
  int exit_status = 0;

  // ingest
  commands::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a benchmark dump into an episode file");
  ingest_cmd->add_option("--adapter", ingest.adapter, "generic|aitw|mind2web|odyssey")->capture_default_str();
  ingest_cmd->add_option("--source", ingest.source, "Benchmark dump (JSON array or JSON Lines)")->required();
  ingest_cmd->add_option("--out", ingest.out, "Episode file to write")->required();
  ingest_cmd->add_option("--rejects-out", ingest.rejects_out, "Rejected-record report (default <out>.rejects.json)");
  ingest_cmd->add_option("--scenario", ingest.scenario, "Scenario tag applied to every screen");
  flags.attach(ingest_cmd);
  ingest_cmd->callback([&] {
    static_cast<void>(flags.resolve());
    out_text = commands::ingest(ingest);
  });

  // build-graph
  commands::BuildOptions build;
  std::string skip_policy = "tuple";
  std::string platform = "mobile";
  auto* build_cmd = app.add_subcommand("build-graph", "Compile episodes into a page graph");
  build_cmd->add_option("--episodes", build.episodes, "Episode file")->required();
  build_cmd->add_option("--graph-out", build.graph_out, "Graph file to write")->required();
  build_cmd->add_option("--manifest-out", build.manifest_out, "Corpus manifest (default <graph-out>.manifest.json)");
  build_cmd->add_option("--sample-fraction", build.sample_fraction, "Fraction of episodes to ingest, in (0, 1]")
      ->capture_default_str();
  build_cmd->add_option("--seed", build.seed, "Sampling seed")->capture_default_str();
  build_cmd->add_option("--skip-policy", skip_policy, "tuple|episode")->capture_default_str();
  build_cmd->add_option("--scenario", build.scenario, "Scenario tag (default: the episode file's)");
  build_cmd->add_option("--platform", platform, "mobile|web")->capture_default_str();
  flags.attach(build_cmd);
  build_cmd->callback([&] {
    const RunConfig config = flags.resolve();
    build.skip_policy = parse_skip_policy(skip_policy);
    build.platform = parse_platform(platform);
    out_text = commands::build_graph(config, build).output;
  });

  // stats
  commands::StatsOptions stats;
  std::vector<std::string> stat_graphs;
  std::vector<std::string> stat_manifests;
  auto* stats_cmd = app.add_subcommand("stats", "Episode, image, node and edge counts per graph");
  stats_cmd->add_option("--graph", stat_graphs, "Graph file (repeatable)")->required();
  stats_cmd->add_option("--manifest", stat_manifests, "Corpus manifest per graph (default <graph>.manifest.json)");
  stats_cmd->add_flag("--json", stats.json, "Print JSON instead of the aligned table");
  stats_cmd->add_option("--out", stats.out, "Also write the table as JSON");
  stats_cmd->add_option("--log-level", flags.log_level, "debug|info|warn|error");
  stats_cmd->callback([&] {
    if (flags.log_level) log::set_level(log::parse_level(*flags.log_level));
    stats.graphs.assign(stat_graphs.begin(), stat_graphs.end());
    stats.manifests.assign(stat_manifests.begin(), stat_manifests.end());
    out_text = commands::stats(stats);
  });

  // export-dot
  commands::DotExportOptions dot;
  std::string label_mode = "summary";
  auto* dot_cmd = app.add_subcommand("export-dot", "Write a graph as a Graphviz digraph");
  dot_cmd->add_option("--graph", dot.graph, "Graph file")->required();
  dot_cmd->add_option("--out", dot.out, "DOT file to write")->required();
  dot_cmd->add_option("--label-mode", label_mode, "summary|id")->capture_default_str();
  dot_cmd->add_option("--max-label-chars", dot.dot.max_label_chars, "Truncate labels (0 = never)")->capture_default_str();
  dot_cmd->add_option("--log-level", flags.log_level, "debug|info|warn|error");
  dot_cmd->callback([&] {
    if (flags.log_level) log::set_level(log::parse_level(*flags.log_level));
    dot.dot.label_mode = io::parse_label_mode(label_mode);
    out_text = commands::export_dot(dot);
  });

  // retrieve
  commands::RetrieveOptions retrieve;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Guidelines for a screen or a page summary");
  retrieve_cmd->add_option("--screen", retrieve.screen, "Screenshot locator, summarized by the oracle");
  retrieve_cmd->add_option("--summary", retrieve.summary, "Page summary text (no oracle call)");
  retrieve_cmd->add_flag("--json", retrieve.json, "Print structured guidelines as JSON");
  retrieve_cmd->add_option("--out", retrieve.out, "Also write structured guidelines as JSON");
  flags.attach(retrieve_cmd);
  retrieve_cmd->callback([&] {
    const RunConfig config = flags.resolve();
    retrieve.graph = config.paths.graph;
    out_text = commands::retrieve(config, retrieve);
  });

  // run
  commands::RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run the agent on tasks in a synthetic world");
  run_cmd->add_option("--goal", run.goals, "Task goal (repeatable)");
  run_cmd->add_option("--task-file", run.task_file, "File with one goal per line")->check(CLI::ExistingFile);
  run_cmd->add_flag("--all-tasks", run.all_tasks, "Run every task the world defines");
  run_cmd->add_option("--transcript-out", run.transcript_out, "Transcript file to write");
  flags.attach(run_cmd);
  run_cmd->callback([&] {
    const RunConfig config = flags.resolve();
    run.graph = config.paths.graph;
    run.world = config.oracle.world;
    const auto result = commands::run(config, run);
    out_text = result.output;
    // Transcripts are written either way; an oracle failure still decides the exit status.
    const bool oracle_failed = std::any_of(result.outcomes.begin(), result.outcomes.end(),
                                           [](const commands::TaskOutcome& o) { return o.oracle_failure; });
    if (oracle_failed) exit_status = 2;
  });

  // eval
  commands::EvalOptions eval;
  std::string metrics = "auto";
  auto* eval_cmd = app.add_subcommand("eval", "Teacher-forced step evaluation over gold episodes");
  eval_cmd->add_option("--episodes", eval.episodes, "Gold episode file")->required();
  eval_cmd->add_option("--metrics", metrics, "auto|mobile|web")->capture_default_str();
  eval_cmd->add_option("--predictions-out", eval.predictions_out, "Prediction file to write");
  eval_cmd->add_option("--predictions-in", eval.predictions_in, "Score this prediction file instead of predicting");
  eval_cmd->add_option("--report-out", eval.report_out, "Metric report to write");
  eval_cmd->add_option("--jobs", eval.jobs, "Parallel step predictions")->capture_default_str();
  eval_cmd->add_option("--tap-threshold", eval.metric_options.tap_threshold, "Normalized tap distance tolerance")
      ->capture_default_str();
  eval_cmd->add_flag("--select-click-equivalence", eval.metric_options.select_click_equivalence,
                     "Accept SELECT predictions for gold CLICKs on the same element");
  flags.attach(eval_cmd);
  eval_cmd->callback([&] {
    const RunConfig config = flags.resolve();
    eval.graph = config.paths.graph;
    eval.metrics = commands::parse_metric_selector(metrics);
    out_text = commands::eval(config, eval).output;
  });

  // world
  auto* world_cmd = app.add_subcommand("world", "Synthetic world utilities");
  world_cmd->require_subcommand(1);
  std::string world_out;
  auto* world_export = world_cmd->add_subcommand("export", "Write a world definition");
  world_export->add_option("--out", world_out, "World file to write")->required();
  flags.attach(world_export);
  world_export->callback([&] {
    const RunConfig config = flags.resolve();
    out_text = commands::world_export(config.oracle.world, world_out);
  });

  commands::WorldGenerateOptions gen;
  auto* world_gen = world_cmd->add_subcommand("generate", "Generate a random reachable world");
  world_gen->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  world_gen->add_option("--pages", gen.shape.pages, "Number of pages")->capture_default_str();
  world_gen->add_option("--transitions", gen.shape.transitions, "Number of transitions")->capture_default_str();
  world_gen->add_option("--max-out-degree", gen.shape.max_out_degree, "Transitions per page")->capture_default_str();
  world_gen->add_option("--field-probability", gen.shape.field_probability, "Chance a page has a text field")
      ->capture_default_str();
  world_gen->add_option("--tasks", gen.shape.tasks, "Number of tasks")->capture_default_str();
  world_gen->add_option("--out", gen.out, "World file to write")->required();
  world_gen->add_option("--log-level", flags.log_level, "debug|info|warn|error");
  world_gen->callback([&] { out_text = commands::world_generate(gen); });

  std::string kind = "generator";
  std::uint64_t episode_seed = 7;
  auto* world_eps = world_cmd->add_subcommand("episodes", "Write generated episodes for a world");
  world_eps->add_option("--kind", kind, "generator|coverage|walk")->capture_default_str();
  world_eps->add_option("--seed", episode_seed, "Seed for episode ids and walk order")->capture_default_str();
  world_eps->add_option("--out", world_out, "Episode file to write")->required();
  flags.attach(world_eps);
  world_eps->callback([&] {
    const RunConfig config = flags.resolve();
    out_text = commands::world_episodes(config.oracle.world, commands::parse_episode_kind(kind), episode_seed, world_out);
  });

  // fixtures
  bool update = false;
  bool check = false;
  std::vector<std::string> only;
  std::string root = std::string(PGAGENT_SOURCE_DIR) + "/fixtures";
  auto* fix_cmd = app.add_subcommand("fixtures", "Regenerate checked-in fixtures and report drift");
  auto* update_flag = fix_cmd->add_flag("--update", update, "Rewrite drifted fixtures");
  fix_cmd->add_flag("--check", check, "Only report drift (the default)")->excludes(update_flag);
  fix_cmd->add_option("--only", only, "Restrict to these fixture ids (repeatable)");
  fix_cmd->add_option("--root", root, "Fixture directory")->capture_default_str();
  fix_cmd->add_option("--log-level", flags.log_level, "debug|info|warn|error");

  fix_cmd->callback([&] {
    const auto report = fixtures::regenerate(root, update, only);
    out_text = report.render();
    if (!report.drifted.empty()) exit_status = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const Error& e) {
    log::error("command_failed", {log::kv("kind", to_string(e.kind())), log::kv("message", e.what())});
    return e.is_oracle_failure() ? 2 : 1;
  } catch (const std::exception& e) {
    log::error("command_failed", {log::kv("kind", "internal"), log::kv("message", e.what())});
    return 1;
  }
  std::cout << out_text << std::flush;
  return exit_status;
}
