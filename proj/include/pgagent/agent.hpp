#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "pgagent/embedding.hpp"
#include "pgagent/environment.hpp"
#include "pgagent/model.hpp"
#include "pgagent/oracle.hpp"
#include "pgagent/retrieval.hpp"

namespace pgagent {

enum class GuidelineMode { per_step, once, disabled };
std::string_view to_string(GuidelineMode m);
GuidelineMode parse_guideline_mode(std::string_view s);

struct AgentConfig {
  std::size_t max_steps = 15;     // H
  std::size_t history_window = 5;  // m; 0 renders the whole history
  GuidelineMode guideline_mode = GuidelineMode::per_step;
  RetrievalConfig retrieval;

  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

inline constexpr std::string_view kNoHistory = "No previous actions.";

/// "step t: <action> — <first observation line>" for the last `window` steps (all when 0).
std::string render_history(std::span<const TranscriptStep> steps, std::size_t window);

/// Four-role agent: a global plan once, then observe, plan the sub-task and decide at every
/// step, with guidelines retrieved from the page graph.
class Agent {
 public:
  Agent(Oracle& oracle, const Embedder& embedder, const PageGraph& graph, AgentConfig config);

  /// Runs until the decider reports completion or impossibility, the step budget runs out, or
  /// an oracle/environment failure ends the run (recorded in the transcript, not thrown).
  AgentTranscript run_task(Environment& env, std::string_view goal);

  /// Teacher-forced prediction for gold step t: history comes from gold steps before t and the
  /// single observe/plan/decide round sees only gold screen t (plus screen 0 for the global
  /// plan). Errors propagate.
  Action run_step_prediction(const Episode& gold, std::size_t t);

  [[nodiscard]] const AgentConfig& config() const noexcept { return config_; }

 private:
  std::vector<Guideline> guidelines_for(const ScreenRef& screen);

  Oracle& oracle_;
  const Embedder& embedder_;
  const PageGraph& graph_;
  AgentConfig config_;
};

}  // namespace pgagent
