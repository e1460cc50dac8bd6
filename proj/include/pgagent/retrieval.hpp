#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgagent/embedding.hpp"
#include "pgagent/model.hpp"
#include "pgagent/oracle.hpp"
#include "pgagent/vector_index.hpp"

namespace pgagent {

struct RetrievalConfig {
  std::size_t k_max_guidelines = 20;
  std::size_t n_nodes = 4;
  std::size_t l_bfs_layers = 3;

  /// k is 20 for mobile scenarios and 10 for web; n = 4 and l = 3 everywhere.
  static RetrievalConfig defaults(Platform platform);
  /// Throws Error(invalid_argument) unless every field is positive.
  void validate() const;
  bool operator==(const RetrievalConfig&) const = default;
};

/// Tasks reachable within `l` edge layers of `start_edge`. Layer 1 is the start edge itself;
/// each later layer holds the unexplored out-edges of the previous layer's destinations.
/// Tasks are collected layer by layer in adjacency order, first occurrence wins.
/// Throws Error(invalid_argument) for an unknown edge or l == 0.
std::vector<std::string> bfs_tasks(const PageGraph& graph, const std::string& start_edge, std::size_t l);

/// Guidelines for already-retrieved nodes: their out-edges ordered by (node score desc,
/// edge order asc), capped at k, each paired with its BFS task set.
std::vector<Guideline> assemble_guidelines(const PageGraph& graph, std::span<const ScoredId> nodes,
                                           const RetrievalConfig& cfg);

/// Node retrieval for a page summary followed by assemble_guidelines. Throws
/// Error(invalid_state) when the embedder does not match the one that built the graph.
std::vector<Guideline> guidelines_for_summary(const PageGraph& graph, const Embedder& embedder,
                                              std::string_view summary, const RetrievalConfig& cfg);

/// Full retrieval for a screenshot: screen summary, node search, BFS expansion. An empty graph
/// short-circuits to an empty list without asking the oracle.
std::vector<Guideline> retrieve_guidelines(const PageGraph& graph, Oracle& oracle, const Embedder& embedder,
                                           const ScreenRef& screen, const RetrievalConfig& cfg);

inline constexpr std::string_view kNoGuidelines = "No guidelines available.";

/// "1. Perform: a; b — can lead to accomplishing: t1; t2", one line per guideline.
std::string render_guidelines(std::span<const Guideline> guidelines);

/// Recovers action queues and task lists from render_guidelines output. Source ids and scores
/// are not part of the rendering and come back empty.
std::vector<Guideline> parse_rendered_guidelines(std::string_view rendered);

}  // namespace pgagent
