#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgagent/embedding.hpp"
#include "pgagent/model.hpp"
#include "pgagent/oracle.hpp"

namespace pgagent {

/// What happens when an oracle call fails mid-episode. `tuple` drops the failing tuple and
/// keeps going; `episode` rolls the graph back to its state before the episode.
enum class SkipPolicy { tuple, episode };
std::string_view to_string(SkipPolicy p);
SkipPolicy parse_skip_policy(std::string_view s);

struct BuildReport {
  std::uint64_t episodes_processed = 0;
  std::uint64_t images_seen = 0;
  std::uint64_t nodes_created = 0;
  std::uint64_t nodes_reused = 0;
  std::uint64_t edges_created = 0;
  std::uint64_t tuples_skipped_in_page = 0;
  std::uint64_t oracle_errors = 0;
  std::uint64_t episodes_aborted = 0;
  std::uint64_t tail_actions_discarded = 0;  // in-page actions left in the queue at episode end

  BuildReport& operator+=(const BuildReport& other);
  bool operator==(const BuildReport&) const = default;
  [[nodiscard]] nlohmann::json to_json() const;
};

struct BuilderOptions {
  std::size_t n_nodes = 4;  // candidates considered by the semantic similarity check
  SkipPolicy skip_policy = SkipPolicy::tuple;
};

/// Compiles episodes into a page graph. Each action is summarized and judged as a page jump or
/// an in-page operation; in-page summaries accumulate in a queue that becomes the action queue
/// of the next edge. The page reached by a jump is matched against existing nodes (embedding
/// search, then model index selection, then a pairwise dissimilarity check) and reused or
/// created. Single writer: one builder per graph at a time.
class GraphBuilder {
 public:
  GraphBuilder(PageGraph& graph, Oracle& oracle, const Embedder& embedder, BuilderOptions options = {});

  /// Node for a screenshot, creating it when no existing page matches.
  std::pair<std::string, bool> resolve_node(const ScreenRef& image);

  BuildReport ingest_episode(const Episode& episode);

  /// Ingests a deterministic sample of ceil(fraction * N) episodes in corpus order.
  BuildReport ingest_corpus(std::span<const Episode> episodes, double fraction, std::uint64_t seed);

 private:
  BuildReport ingest_unchecked(const Episode& episode);

  PageGraph& graph_;
  Oracle& oracle_;
  const Embedder& embedder_;
  BuilderOptions options_;
};

/// Sorted indices of the sampled episodes. fraction in (0, 1]; the count is
/// ceil(fraction * n) with a small tolerance for binary rounding (0.1 * 230 samples 23).
std::vector<std::size_t> sample_indices(std::size_t n, double fraction, std::uint64_t seed);

}  // namespace pgagent
