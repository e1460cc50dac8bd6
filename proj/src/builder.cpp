#include "pgagent/builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/log.hpp"
#include "pgagent/world.hpp"

namespace pgagent {

std::string_view to_string(SkipPolicy p) { return p == SkipPolicy::episode ? "episode" : "tuple"; }

SkipPolicy parse_skip_policy(std::string_view s) {
  if (s == "tuple") return SkipPolicy::tuple;
  if (s == "episode") return SkipPolicy::episode;
  fail(ErrorKind::invalid_argument, fmt::format("unknown skip policy '{}' (tuple|episode)", s));
}

BuildReport& BuildReport::operator+=(const BuildReport& o) {
  episodes_processed += o.episodes_processed;
  images_seen += o.images_seen;
  nodes_created += o.nodes_created;
  nodes_reused += o.nodes_reused;
  edges_created += o.edges_created;
  tuples_skipped_in_page += o.tuples_skipped_in_page;
  oracle_errors += o.oracle_errors;
  episodes_aborted += o.episodes_aborted;
  tail_actions_discarded += o.tail_actions_discarded;
  return *this;
}

nlohmann::json BuildReport::to_json() const {
  return {
      {"episodes_processed", episodes_processed},
      {"images_seen", images_seen},
      {"nodes_created", nodes_created},
      {"nodes_reused", nodes_reused},
      {"edges_created", edges_created},
      {"tuples_skipped_in_page", tuples_skipped_in_page},
      {"oracle_errors", oracle_errors},
      {"episodes_aborted", episodes_aborted},
      {"tail_actions_discarded", tail_actions_discarded},
  };
}

std::vector<std::size_t> sample_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorKind::invalid_argument, fmt::format("sample fraction {} is outside (0, 1]", fraction));
  }
  const auto count = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::uint64_t rng = seed;
  // Partial Fisher-Yates: the first `count` slots end up holding a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + world::uniform_below(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

GraphBuilder::GraphBuilder(PageGraph& graph, Oracle& oracle, const Embedder& embedder, BuilderOptions options)
    : graph_(graph), oracle_(oracle), embedder_(embedder), options_(options) {
  if (options_.n_nodes == 0) fail(ErrorKind::invalid_argument, "node candidate count must be positive");
  if (graph_.embedder_id().empty()) {
    if (!graph_.empty() && graph_.index().size() != 0) {
      fail(ErrorKind::invalid_state, "graph carries embeddings from an unknown embedder");
    }
    graph_.set_embedder_id(embedder_.id());
  } else if (graph_.embedder_id() != embedder_.id()) {
    fail(ErrorKind::invalid_state, fmt::format("graph was embedded with '{}' but the builder uses '{}'",
                                               graph_.embedder_id(), embedder_.id()));
  }
  if (graph_.index().dim() != 0 && graph_.index().dim() != embedder_.dim()) {
    fail(ErrorKind::invalid_state, fmt::format("graph embeddings have dimension {} but the embedder produces {}",
                                               graph_.index().dim(), embedder_.dim()));
  }
}

std::pair<std::string, bool> GraphBuilder::resolve_node(const ScreenRef& image) {
  const std::string summary = oracle_.summarize_page(image);
  auto embedding = embedder_.embed(summary).values;
  if (graph_.empty() || graph_.index().size() == 0) {
    return {graph_.add_node(summary, image.locator, std::move(embedding)).node_id, true};
  }
  const auto top = graph_.index().top_k(embedding, options_.n_nodes);
  std::vector<std::string> candidates;
  candidates.reserve(top.size());
  for (const auto& hit : top) candidates.push_back(graph_.node(hit.id).summary);
  const std::size_t pick = oracle_.select_most_similar(image, candidates);
  const PageNode& match = graph_.node(top[pick - 1].id);
  ScreenRef existing;
  existing.locator = match.image_locator;
  existing.scenario = image.scenario;
  if (oracle_.judge_dissimilar(image, existing)) {
    return {graph_.add_node(summary, image.locator, std::move(embedding)).node_id, true};
  }
  return {match.node_id, false};
}

BuildReport GraphBuilder::ingest_episode(const Episode& episode) {
  episode.validate();
  if (options_.skip_policy == SkipPolicy::tuple) return ingest_unchecked(episode);

  PageGraph snapshot = graph_;
  try {
    return ingest_unchecked(episode);
  } catch (const Error& e) {
    if (!e.is_oracle_failure()) throw;
    graph_ = std::move(snapshot);
    log::warn("episode_aborted", {log::kv("episode", episode.episode_id), log::kv("reason", e.what())});
    BuildReport r;
    r.oracle_errors = 1;
    r.episodes_aborted = 1;
    return r;
  }
}

BuildReport GraphBuilder::ingest_unchecked(const Episode& episode) {
  const bool tolerant = options_.skip_policy == SkipPolicy::tuple;
  const auto images = episode_images(episode);
  BuildReport r;
  r.images_seen = images.size();

  std::vector<std::string> queue;
  std::optional<std::string> anchor;

  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto saved_queue = queue;
    try {
      if (i > 0) {
        const ScreenRef& before = images[i - 1];
        const Action& action = episode.steps[i - 1].action;
        const std::string summary = oracle_.summarize_action(before, action);
        queue.push_back(summary);
        if (!oracle_.judge_jump(before, images[i], summary)) {
          ++r.tuples_skipped_in_page;
          continue;
        }
      }
      const auto [node, created] = resolve_node(images[i]);
      ++(created ? r.nodes_created : r.nodes_reused);
      if (i > 0 && anchor) {
        graph_.add_edge(*anchor, node, queue, episode.task);
        ++r.edges_created;
      } else if (i > 0) {
        // The episode's earlier pages never resolved, so these actions have no source node.
        r.tail_actions_discarded += queue.size();
      }
      queue.clear();
      anchor = node;
    } catch (const Error& e) {
      if (!tolerant || !e.is_oracle_failure()) throw;
      queue = saved_queue;
      ++r.oracle_errors;
      log::warn("tuple_skipped", {log::kv("episode", episode.episode_id), log::kv("image", i),
                                  log::kv("reason", e.what())});
    }
  }
  r.tail_actions_discarded += queue.size();
  r.episodes_processed = 1;
  log::debug("episode_ingested", {log::kv("episode", episode.episode_id), log::kv("nodes", graph_.node_count()),
                                  log::kv("edges", graph_.edge_count())});
  return r;
}

BuildReport GraphBuilder::ingest_corpus(std::span<const Episode> episodes, double fraction, std::uint64_t seed) {
  if (episodes.empty()) fail(ErrorKind::precondition, "cannot build a graph from an empty corpus");
  BuildReport total;
  for (std::size_t i : sample_indices(episodes.size(), fraction, seed)) total += ingest_episode(episodes[i]);
  return total;
}

}  // namespace pgagent
