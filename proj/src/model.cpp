#include "pgagent/model.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "pgagent/error.hpp"

namespace pgagent {

namespace {

std::uint64_t id_sequence(const std::string& id, char prefix) {
  if (id.size() < 2 || id[0] != prefix) return 0;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), value);
  if (ec != std::errc{} || ptr != id.data() + id.size()) return 0;
  return value;
}

}  // namespace

std::string_view to_string(Platform p) { return p == Platform::web ? "web" : "mobile"; }

Platform parse_platform(std::string_view s) {
  if (s == "mobile") return Platform::mobile;
  if (s == "web") return Platform::web;
  fail(ErrorKind::invalid_argument, "unknown platform '" + std::string(s) + "' (mobile|web)");
}

void ScreenRef::validate() const {
  if (locator.empty()) fail(ErrorKind::invalid_argument, "screen locator is empty");
  if (width_px.has_value() != height_px.has_value()) {
    fail(ErrorKind::invalid_argument, "screen " + locator + " has only one dimension");
  }
  if (width_px && (*width_px <= 0 || *height_px <= 0)) {
    fail(ErrorKind::invalid_argument, "screen " + locator + " has non-positive dimensions");
  }
}

void Episode::validate() const {
  if (steps.empty()) fail(ErrorKind::invalid_episode, "episode '" + episode_id + "' has no steps");
  if (task.empty()) fail(ErrorKind::invalid_episode, "episode '" + episode_id + "' has no task");
  try {
    for (const auto& step : steps) {
      step.screen.validate();
      validate_action(step.action);
    }
    if (final_screen) final_screen->validate();
  } catch (const Error& e) {
    fail(ErrorKind::invalid_episode, "episode '" + episode_id + "': " + e.what());
  }
}

std::vector<ActionTuple> action_tuples(const Episode& episode) {
  episode.validate();
  std::vector<ActionTuple> tuples;
  tuples.reserve(episode.steps.size());
  for (std::size_t i = 0; i + 1 < episode.steps.size(); ++i) {
    tuples.push_back({episode.steps[i].screen, episode.steps[i].action, episode.steps[i + 1].screen});
  }
  if (episode.final_screen) {
    tuples.push_back({episode.steps.back().screen, episode.steps.back().action, *episode.final_screen});
  }
  return tuples;
}

std::vector<ScreenRef> episode_images(const Episode& episode) {
  std::vector<ScreenRef> images;
  images.reserve(episode.steps.size() + 1);
  for (const auto& step : episode.steps) images.push_back(step.screen);
  if (episode.final_screen) images.push_back(*episode.final_screen);
  return images;
}

const PageNode& PageGraph::add_node(std::string summary, std::string image_locator,
                                    std::vector<float> embedding) {
  std::string id;
  do {
    id = fmt::format("n{:06d}", next_node_seq_++);
  } while (nodes_.contains(id));
  insert_node(PageNode{id, std::move(summary), std::move(image_locator), std::move(embedding)});
  return nodes_.at(id);
}

const PageEdge& PageGraph::add_edge(const std::string& src, const std::string& dst,
                                    std::vector<std::string> action_queue, std::string task) {
  std::string id;
  do {
    id = fmt::format("e{:06d}", next_edge_seq_++);
  } while (edges_.contains(id));
  insert_edge(PageEdge{id, src, dst, std::move(action_queue), std::move(task), max_order_ + 1});
  return edges_.at(id);
}

void PageGraph::insert_node(PageNode node) {
  if (node.node_id.empty()) fail(ErrorKind::invalid_argument, "node id is empty");
  if (nodes_.contains(node.node_id)) fail(ErrorKind::invalid_argument, "duplicate node id " + node.node_id);
  if (node.summary.empty()) fail(ErrorKind::invalid_argument, "node " + node.node_id + " has an empty summary");
  if (!node.embedding.empty()) {
    if (index_.dim() != 0 && node.embedding.size() != index_.dim()) {
      fail(ErrorKind::invalid_argument,
           fmt::format("node {} embedding dimension {} differs from graph dimension {}", node.node_id,
                       node.embedding.size(), index_.dim()));
    }
    index_.add(node.node_id, node.embedding);
  }
  next_node_seq_ = std::max(next_node_seq_, id_sequence(node.node_id, 'n') + 1);
  out_adjacency_[node.node_id];
  auto id = node.node_id;
  nodes_.emplace(std::move(id), std::move(node));
}

void PageGraph::insert_edge(PageEdge edge) {
  if (edge.edge_id.empty()) fail(ErrorKind::invalid_argument, "edge id is empty");
  if (edges_.contains(edge.edge_id)) fail(ErrorKind::invalid_argument, "duplicate edge id " + edge.edge_id);
  if (!nodes_.contains(edge.src)) {
    fail(ErrorKind::invalid_argument, "edge " + edge.edge_id + " has unknown src " + edge.src);
  }
  if (!nodes_.contains(edge.dst)) {
    fail(ErrorKind::invalid_argument, "edge " + edge.edge_id + " has unknown dst " + edge.dst);
  }
  if (edge.action_queue.empty()) {
    fail(ErrorKind::invalid_argument, "edge " + edge.edge_id + " has an empty action queue");
  }
  next_edge_seq_ = std::max(next_edge_seq_, id_sequence(edge.edge_id, 'e') + 1);
  max_order_ = std::max(max_order_, edge.order_index);
  auto& adj = out_adjacency_[edge.src];
  // keep adjacency ordered by insertion counter even when loading out of order
  auto pos = std::upper_bound(adj.begin(), adj.end(), edge.order_index,
                              [this](std::uint64_t order, const std::string& other) {
                                return order < edges_.at(other).order_index;
                              });
  adj.insert(pos, edge.edge_id);
  auto id = edge.edge_id;
  edges_.emplace(std::move(id), std::move(edge));
}

void PageGraph::set_node_embedding(const std::string& node_id, std::vector<float> embedding) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) fail(ErrorKind::invalid_argument, "unknown node " + node_id);
  if (index_.find(node_id)) {
    index_.replace(node_id, embedding);
  } else {
    index_.add(node_id, embedding);
  }
  it->second.embedding = std::move(embedding);
}

const PageNode* PageGraph::find_node(const std::string& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const PageEdge* PageGraph::find_edge(const std::string& id) const {
  auto it = edges_.find(id);
  return it == edges_.end() ? nullptr : &it->second;
}

const PageNode& PageGraph::node(const std::string& id) const {
  const auto* n = find_node(id);
  if (!n) fail(ErrorKind::invalid_argument, "unknown node " + id);
  return *n;
}

const PageEdge& PageGraph::edge(const std::string& id) const {
  const auto* e = find_edge(id);
  if (!e) fail(ErrorKind::invalid_argument, "unknown edge " + id);
  return *e;
}

const std::vector<std::string>& PageGraph::out_edges(const std::string& node_id) const {
  auto it = out_adjacency_.find(node_id);
  if (it == out_adjacency_.end()) fail(ErrorKind::invalid_argument, "unknown node " + node_id);
  return it->second;
}

std::size_t PageGraph::in_degree(const std::string& node_id) const {
  return static_cast<std::size_t>(std::count_if(
      edges_.begin(), edges_.end(), [&](const auto& kv) { return kv.second.dst == node_id; }));
}

void PageGraph::validate() const {
  std::size_t adjacency_total = 0;
  std::size_t dim = 0;
  for (const auto& [id, n] : nodes_) {
    if (n.summary.empty()) fail(ErrorKind::validation, "node " + id + " has an empty summary");
    if (!n.embedding.empty()) {
      if (dim == 0) dim = n.embedding.size();
      if (n.embedding.size() != dim) fail(ErrorKind::validation, "node " + id + " embedding dimension differs");
    }
  }
  for (const auto& [id, e] : edges_) {
    if (!nodes_.contains(e.src)) fail(ErrorKind::validation, "edge " + id + " references missing src " + e.src);
    if (!nodes_.contains(e.dst)) fail(ErrorKind::validation, "edge " + id + " references missing dst " + e.dst);
    if (e.action_queue.empty()) fail(ErrorKind::validation, "edge " + id + " has an empty action queue");
  }
  for (const auto& [src, list] : out_adjacency_) {
    adjacency_total += list.size();
    for (const auto& eid : list) {
      auto it = edges_.find(eid);
      if (it == edges_.end() || it->second.src != src) {
        fail(ErrorKind::validation, "adjacency of " + src + " lists inconsistent edge " + eid);
      }
    }
  }
  if (adjacency_total != edges_.size()) fail(ErrorKind::validation, "out-degree sum differs from edge count");
}

bool PageGraph::operator==(const PageGraph& other) const {
  return scenario_ == other.scenario_ && platform_ == other.platform_ &&
         embedder_id_ == other.embedder_id_ && nodes_ == other.nodes_ && edges_ == other.edges_ &&
         out_adjacency_ == other.out_adjacency_ && index_ == other.index_;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::complete: return "complete";
    case Termination::step_budget: return "step_budget";
    case Termination::impossible: return "impossible";
    case Termination::error: return "error";
  }
  return "error";
}

Termination parse_termination(std::string_view s) {
  if (s == "complete") return Termination::complete;
  if (s == "step_budget") return Termination::step_budget;
  if (s == "impossible") return Termination::impossible;
  if (s == "error") return Termination::error;
  fail(ErrorKind::format, "unknown termination '" + std::string(s) + "'");
}

}  // namespace pgagent
