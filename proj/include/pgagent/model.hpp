#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgagent/action.hpp"
#include "pgagent/vector_index.hpp"

namespace pgagent {

enum class Platform { mobile, web };
std::string_view to_string(Platform p);
Platform parse_platform(std::string_view s);

/// Opaque reference to a screenshot; the graph never stores pixels.
struct ScreenRef {
  std::string locator;
  std::optional<int> width_px;
  std::optional<int> height_px;
  std::string scenario;

  void validate() const;
  bool operator==(const ScreenRef&) const = default;
};

struct EpisodeStep {
  ScreenRef screen;
  Action action;
  bool operator==(const EpisodeStep&) const = default;
};

/// One recorded task execution: a task string plus (screen, action) steps.
struct Episode {
  std::string episode_id;
  std::string task;
  std::vector<EpisodeStep> steps;
  std::optional<ScreenRef> final_screen;

  /// Throws Error(invalid_episode).
  void validate() const;
  bool operator==(const Episode&) const = default;
};

struct ActionTuple {
  ScreenRef before;
  Action action;
  ScreenRef after;
};

/// (before, action, after) for each step with an observed after-image. The last step only
/// yields a tuple when the episode has a final screen.
std::vector<ActionTuple> action_tuples(const Episode& episode);

/// All screenshots of an episode in order, including the final screen when present.
std::vector<ScreenRef> episode_images(const Episode& episode);

struct PageNode {
  std::string node_id;
  std::string summary;
  std::string image_locator;
  std::vector<float> embedding;  // empty when the node carries none
  bool operator==(const PageNode&) const = default;
};

struct PageEdge {
  std::string edge_id;
  std::string src;
  std::string dst;
  std::vector<std::string> action_queue;
  std::string task;
  std::uint64_t order_index = 0;
  bool operator==(const PageEdge&) const = default;
};

/// Directed multigraph of unique pages. Parallel edges and self-loops are allowed; the
/// out-adjacency lists keep edges in insertion order. Node embeddings are mirrored into a
/// VectorIndex so node retrieval never rebuilds it.
class PageGraph {
 public:
  static constexpr int kSchemaVersion = 1;

  PageGraph() = default;
  explicit PageGraph(std::string scenario, Platform platform = Platform::mobile)
      : scenario_(std::move(scenario)), platform_(platform) {}

  [[nodiscard]] const std::string& scenario() const noexcept { return scenario_; }
  void set_scenario(std::string s) { scenario_ = std::move(s); }
  [[nodiscard]] Platform platform() const noexcept { return platform_; }
  void set_platform(Platform p) { platform_ = p; }
  [[nodiscard]] const std::string& embedder_id() const noexcept { return embedder_id_; }
  void set_embedder_id(std::string id) { embedder_id_ = std::move(id); }

  /// Creates a node with the next sequential id ("n000001", ...).
  const PageNode& add_node(std::string summary, std::string image_locator,
                           std::vector<float> embedding = {});
  /// Creates an edge with the next sequential id and order index.
  const PageEdge& add_edge(const std::string& src, const std::string& dst,
                           std::vector<std::string> action_queue, std::string task);

  /// Insert with caller-provided ids (used by the loaders); validates references.
  void insert_node(PageNode node);
  void insert_edge(PageEdge edge);

  /// Sets or replaces the cached embedding of a node.
  void set_node_embedding(const std::string& node_id, std::vector<float> embedding);

  [[nodiscard]] const std::map<std::string, PageNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const std::map<std::string, PageEdge>& edges() const noexcept { return edges_; }
  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
  [[nodiscard]] bool empty() const noexcept { return nodes_.empty(); }

  [[nodiscard]] const PageNode* find_node(const std::string& id) const;
  [[nodiscard]] const PageEdge* find_edge(const std::string& id) const;
  /// Throws Error(invalid_argument) for unknown ids.
  [[nodiscard]] const PageNode& node(const std::string& id) const;
  [[nodiscard]] const PageEdge& edge(const std::string& id) const;
  [[nodiscard]] const std::vector<std::string>& out_edges(const std::string& node_id) const;
  [[nodiscard]] std::size_t in_degree(const std::string& node_id) const;

  [[nodiscard]] const VectorIndex& index() const noexcept { return index_; }

  /// Checks every structural invariant; throws Error(validation) naming the offender.
  void validate() const;

  bool operator==(const PageGraph& other) const;

 private:
  std::string scenario_;
  Platform platform_ = Platform::mobile;
  std::string embedder_id_;
  std::map<std::string, PageNode> nodes_;
  std::map<std::string, PageEdge> edges_;
  std::map<std::string, std::vector<std::string>> out_adjacency_;
  VectorIndex index_;
  std::uint64_t next_node_seq_ = 1;
  std::uint64_t next_edge_seq_ = 1;
  std::uint64_t max_order_ = 0;
};

/// One retrieved (action queue, achievable tasks) pair.
struct Guideline {
  std::vector<std::string> action_queue;
  std::vector<std::string> achievable_tasks;
  std::string source_node;
  std::string source_edge;
  double similarity_score = 0.0;
  bool operator==(const Guideline&) const = default;
};

enum class Termination { complete, step_budget, impossible, error };
std::string_view to_string(Termination t);
Termination parse_termination(std::string_view s);

struct TranscriptStep {
  ScreenRef screen;
  std::string observation;
  std::string subtask_plan;
  Action action;
  std::string rationale;
  std::vector<Guideline> guidelines_used;
  bool operator==(const TranscriptStep&) const = default;
};

struct AgentTranscript {
  std::string goal;
  std::string global_plan;
  std::vector<TranscriptStep> steps;
  Termination terminated_by = Termination::error;
  std::string error_message;
  bool operator==(const AgentTranscript&) const = default;
};

}  // namespace pgagent
