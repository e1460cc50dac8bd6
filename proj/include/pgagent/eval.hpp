#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgagent/action.hpp"
#include "pgagent/model.hpp"

namespace pgagent {

inline constexpr double kDefaultTapThreshold = 0.14;

/// Mobile action matching. Types must agree; a tap matches when it falls inside the gold
/// element box (if one is given) or within `threshold` normalized distance of the gold point;
/// swipes match on direction, typed text on its trimmed case-folded value, keys and status
/// actions on equality. Web element actions compare element ids. Never throws.
bool match_mobile_action(const Action& gold, const Action& predicted, double threshold = kDefaultTapThreshold,
                         const std::optional<Rect>& gold_bbox = std::nullopt);

/// Token-set F1 between two operation strings, case-insensitive. Both empty gives 1.
double op_f1(std::string_view gold, std::string_view predicted);

/// Canonical operation: "CLICK", "TYPE <text>" or "SELECT <value>"; empty for non-web actions.
std::string operation_string(const Action& action);
/// Element id of a web action, if it has one.
std::optional<std::string> element_of(const Action& action);

struct StepRecord {
  std::string scenario;
  std::string episode_id;
  std::size_t step = 0;
  Action gold;
  Action predicted;
  std::vector<std::string> gold_elements;  // acceptable element ids; defaults to gold's element
  std::optional<Rect> gold_bbox;
  bool operator==(const StepRecord&) const = default;
};

struct MetricOptions {
  double tap_threshold = kDefaultTapThreshold;
  /// Accept a SELECT prediction on the element a gold CLICK opens (the two-click encoding of
  /// a dropdown choice).
  bool select_click_equivalence = false;
};

struct MetricSlice {
  std::size_t steps = 0;
  double action_match_rate = 0.0;
  // Web-only metrics; absent for mobile slices.
  std::optional<double> ele_acc;
  std::optional<double> op_f1;
  std::optional<double> step_sr;
  bool operator==(const MetricSlice&) const = default;
};

struct MetricReport {
  Platform platform = Platform::mobile;
  std::map<std::string, MetricSlice> per_scenario;
  MetricSlice overall;

  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::string render() const;
};

/// Element accuracy, mean Op.F1 and step success over web records. Throws Error(validation)
/// for a record whose gold action has no element, and Error(precondition) for no records.
MetricSlice web_step_metrics(std::span<const StepRecord> records, const MetricOptions& options = {});

/// Action match rate over mobile records. Throws Error(precondition) for no records.
MetricSlice mobile_step_metrics(std::span<const StepRecord> records, const MetricOptions& options = {});

/// Per-scenario and overall slices.
MetricReport evaluate_records(std::span<const StepRecord> records, Platform platform,
                              const MetricOptions& options = {});

struct StatsRow {
  std::string scenario;
  std::uint64_t episodes = 0;
  std::uint64_t images = 0;
  std::uint64_t nodes = 0;
  std::uint64_t edges = 0;
  bool operator==(const StatsRow&) const = default;
};

struct StatsTable {
  std::vector<StatsRow> rows;
  StatsRow total{"Total"};

  /// Table with the total computed as the column sums.
  static StatsTable with_sum(std::vector<StatsRow> rows);
  [[nodiscard]] std::string render() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Episodes and images consumed by one graph build.
struct CorpusManifest {
  std::string scenario;
  std::uint64_t episodes = 0;
  std::uint64_t images = 0;
  std::vector<std::string> episode_ids;
  bool operator==(const CorpusManifest&) const = default;
};

CorpusManifest make_manifest(std::string scenario, std::span<const Episode> ingested);

struct GraphCorpus {
  const PageGraph* graph = nullptr;
  CorpusManifest manifest;
};

/// One row per graph (scenario from the manifest, falling back to the graph's tag) plus the
/// column-sum total.
StatsTable graph_stats(std::span<const GraphCorpus> inputs);

}  // namespace pgagent
