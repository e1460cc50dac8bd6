#include "pgagent/retrieval.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/text.hpp"

namespace pgagent {

namespace {

constexpr std::string_view kPerform = "Perform: ";
constexpr std::string_view kLeadsTo = " — can lead to accomplishing: ";

void check_embedder(const PageGraph& graph, const Embedder& embedder) {
  if (!graph.embedder_id().empty() && graph.embedder_id() != embedder.id()) {
    fail(ErrorKind::invalid_state, fmt::format("graph was embedded with '{}' but retrieval uses '{}'",
                                               graph.embedder_id(), embedder.id()));
  }
  if (graph.index().dim() != 0 && graph.index().dim() != embedder.dim()) {
    fail(ErrorKind::invalid_state, fmt::format("graph embeddings have dimension {} but the embedder produces {}",
                                               graph.index().dim(), embedder.dim()));
  }
}

}  // namespace

RetrievalConfig RetrievalConfig::defaults(Platform platform) {
  RetrievalConfig cfg;
  cfg.k_max_guidelines = platform == Platform::web ? 10 : 20;
  cfg.n_nodes = 4;
  cfg.l_bfs_layers = 3;
  return cfg;
}

void RetrievalConfig::validate() const {
  if (k_max_guidelines == 0 || n_nodes == 0 || l_bfs_layers == 0) {
    fail(ErrorKind::invalid_argument,
         fmt::format("retrieval parameters must be positive (k={}, n={}, l={})", k_max_guidelines, n_nodes,
                     l_bfs_layers));
  }
}

std::vector<std::string> bfs_tasks(const PageGraph& graph, const std::string& start_edge, std::size_t l) {
  if (l == 0) fail(ErrorKind::invalid_argument, "BFS needs at least one layer");
  const PageEdge& root = graph.edge(start_edge);

  std::vector<std::string> tasks;
  std::unordered_set<std::string> seen_tasks;
  std::unordered_set<std::string> explored{root.edge_id};
  std::vector<const PageEdge*> layer{&root};
  for (std::size_t depth = 1;; ++depth) {
    for (const PageEdge* e : layer) {
      if (seen_tasks.insert(e->task).second) tasks.push_back(e->task);
    }
    if (depth == l) break;
    std::vector<const PageEdge*> next;
    for (const PageEdge* e : layer) {
      for (const auto& id : graph.out_edges(e->dst)) {
        if (explored.insert(id).second) next.push_back(&graph.edge(id));
      }
    }
    if (next.empty()) break;
    layer = std::move(next);
  }
  return tasks;
}

std::vector<Guideline> assemble_guidelines(const PageGraph& graph, std::span<const ScoredId> nodes,
                                           const RetrievalConfig& cfg) {
  cfg.validate();
  struct Candidate {
    const PageEdge* edge;
    const ScoredId* node;
  };
  std::vector<Candidate> candidates;
  for (const auto& n : nodes) {
    for (const auto& id : graph.out_edges(n.id)) candidates.push_back({&graph.edge(id), &n});
  }
  // Retrieval already sorts nodes by score with stable ties; within a node the adjacency list
  // is in order_index order. The explicit sort keeps the contract independent of both.
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.node->score != b.node->score) return a.node->score > b.node->score;
    return a.edge->order_index < b.edge->order_index;
  });
  if (candidates.size() > cfg.k_max_guidelines) candidates.resize(cfg.k_max_guidelines);

  std::vector<Guideline> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    out.push_back(Guideline{c.edge->action_queue, bfs_tasks(graph, c.edge->edge_id, cfg.l_bfs_layers), c.node->id,
                            c.edge->edge_id, c.node->score});
  }
  return out;
}

std::vector<Guideline> guidelines_for_summary(const PageGraph& graph, const Embedder& embedder,
                                              std::string_view summary, const RetrievalConfig& cfg) {
  cfg.validate();
  if (graph.empty()) return {};
  check_embedder(graph, embedder);
  if (graph.index().size() == 0) {
    fail(ErrorKind::invalid_state, "graph nodes carry no embeddings; rebuild or re-embed the graph");
  }
  const auto query = embedder.embed(summary);
  const auto nodes = graph.index().top_k(query.values, cfg.n_nodes);
  return assemble_guidelines(graph, nodes, cfg);
}

std::vector<Guideline> retrieve_guidelines(const PageGraph& graph, Oracle& oracle, const Embedder& embedder,
                                           const ScreenRef& screen, const RetrievalConfig& cfg) {
  cfg.validate();
  if (graph.empty()) return {};
  check_embedder(graph, embedder);
  return guidelines_for_summary(graph, embedder, oracle.summarize_screen(screen), cfg);
}

std::string render_guidelines(std::span<const Guideline> guidelines) {
  if (guidelines.empty()) return std::string(kNoGuidelines);
  std::string out;
  for (std::size_t i = 0; i < guidelines.size(); ++i) {
    if (i) out.push_back('\n');
    out += fmt::format("{}. {}{}{}{}", i + 1, kPerform, text::join(guidelines[i].action_queue, "; "), kLeadsTo,
                       text::join(guidelines[i].achievable_tasks, "; "));
  }
  return out;
}

std::vector<Guideline> parse_rendered_guidelines(std::string_view rendered) {
  std::vector<Guideline> out;
  for (const auto& raw : text::split_lines(rendered)) {
    const auto line = text::trim(raw);
    const auto perform = line.find(kPerform);
    const auto leads = line.find(kLeadsTo);
    if (perform == std::string_view::npos || leads == std::string_view::npos || leads < perform) continue;
    Guideline g;
    const auto queue = line.substr(perform + kPerform.size(), leads - perform - kPerform.size());
    g.action_queue = text::split(queue, "; ");
    g.achievable_tasks = text::split(line.substr(leads + kLeadsTo.size()), "; ");
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace pgagent
