#include "pgagent/agent.hpp"

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/log.hpp"
#include "pgagent/text.hpp"

namespace pgagent {

namespace {

constexpr std::size_t kDigestChars = 120;

std::string digest(std::string_view observation) {
  for (const auto& line : text::split_lines(observation)) {
    const auto t = text::trim(line);
    if (!t.empty()) return text::truncate(text::collapse_whitespace(t), kDigestChars);
  }
  return {};
}

}  // namespace

std::string_view to_string(GuidelineMode m) {
  switch (m) {
    case GuidelineMode::per_step:
      return "per_step";
    case GuidelineMode::once:
      return "once";
    case GuidelineMode::disabled:
      break;
  }
  return "disabled";
}

GuidelineMode parse_guideline_mode(std::string_view s) {
  if (s == "per_step" || s == "per-step") return GuidelineMode::per_step;
  if (s == "once") return GuidelineMode::once;
  if (s == "disabled") return GuidelineMode::disabled;
  fail(ErrorKind::invalid_argument, fmt::format("unknown guideline mode '{}' (per_step|once|disabled)", s));
}

void AgentConfig::validate() const {
  if (max_steps == 0) fail(ErrorKind::invalid_argument, "the step budget must be at least 1");
  retrieval.validate();
}

std::string render_history(std::span<const TranscriptStep> steps, std::size_t window) {
  if (steps.empty()) return std::string(kNoHistory);
  const std::size_t first = window == 0 || window >= steps.size() ? 0 : steps.size() - window;
  std::string out;
  for (std::size_t i = first; i < steps.size(); ++i) {
    if (!out.empty()) out.push_back('\n');
    out += fmt::format("step {}: {}", i + 1, format_action(steps[i].action));
    const auto d = digest(steps[i].observation);
    if (!d.empty()) out += fmt::format(" — {}", d);
  }
  return out;
}

Agent::Agent(Oracle& oracle, const Embedder& embedder, const PageGraph& graph, AgentConfig config)
    : oracle_(oracle), embedder_(embedder), graph_(graph), config_(std::move(config)) {
  config_.validate();
}

std::vector<Guideline> Agent::guidelines_for(const ScreenRef& screen) {
  return retrieve_guidelines(graph_, oracle_, embedder_, screen, config_.retrieval);
}

AgentTranscript Agent::run_task(Environment& env, std::string_view goal) {
  if (text::trim(goal).empty()) fail(ErrorKind::precondition, "the agent needs a non-empty goal");
  AgentTranscript tr;
  tr.goal = std::string(goal);
  tr.terminated_by = Termination::step_budget;

  try {
    const ScreenRef start = env.current_screen();
    tr.global_plan = oracle_.global_plan(start, goal);
    std::vector<Guideline> fixed;
    if (config_.guideline_mode == GuidelineMode::once) fixed = guidelines_for(start);

    for (std::size_t t = 0; t < config_.max_steps; ++t) {
      TranscriptStep step;
      step.screen = env.current_screen();
      switch (config_.guideline_mode) {
        case GuidelineMode::per_step:
          step.guidelines_used = guidelines_for(step.screen);
          break;
        case GuidelineMode::once:
          step.guidelines_used = fixed;
          break;
        case GuidelineMode::disabled:
          break;
      }
      const std::string rendered = render_guidelines(step.guidelines_used);
      const std::string history = render_history(tr.steps, config_.history_window);
      step.observation = oracle_.observe(step.screen, goal, history);
      step.subtask_plan = oracle_.plan_subtask(step.screen, step.observation, tr.global_plan, rendered, history);
      auto decision = oracle_.decide(step.screen, step.observation, step.subtask_plan, rendered, history);
      step.action = decision.action;
      step.rationale = std::move(decision.rationale);
      log::info("agent_step", {log::kv("step", t + 1), log::kv("guidelines", step.guidelines_used.size()),
                               log::kv("action", format_action(step.action))});
      tr.steps.push_back(std::move(step));

      const Action& action = tr.steps.back().action;
      const StepOutcome outcome = env.apply(action);
      if (std::holds_alternative<act::StatusComplete>(action)) {
        tr.terminated_by = Termination::complete;
        break;
      }
      if (std::holds_alternative<act::StatusImpossible>(action)) {
        tr.terminated_by = Termination::impossible;
        break;
      }
      if (outcome.terminal) {
        tr.terminated_by = Termination::error;
        tr.error_message = "the environment ended before the task was reported complete";
        break;
      }
    }
  } catch (const Error& e) {
    tr.terminated_by = Termination::error;
    tr.error_message = e.what();
    log::warn("agent_error", {log::kv("goal", goal), log::kv("reason", e.what())});
  }
  log::info("agent_done", {log::kv("goal", goal), log::kv("steps", tr.steps.size()),
                           log::kv("terminated_by", to_string(tr.terminated_by))});
  return tr;
}

Action Agent::run_step_prediction(const Episode& gold, std::size_t t) {
  gold.validate();
  if (t >= gold.steps.size()) {
    fail(ErrorKind::precondition, fmt::format("step {} is outside episode '{}' of {} steps", t, gold.episode_id,
                                              gold.steps.size()));
  }
  std::vector<TranscriptStep> past;
  past.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    TranscriptStep s;
    s.screen = gold.steps[i].screen;
    s.action = gold.steps[i].action;
    past.push_back(std::move(s));
  }
  const std::string history = render_history(past, config_.history_window);
  const ScreenRef& screen = gold.steps[t].screen;

  const std::string plan = oracle_.global_plan(gold.steps[0].screen, gold.task);
  std::vector<Guideline> guidelines;
  if (config_.guideline_mode == GuidelineMode::per_step) guidelines = guidelines_for(screen);
  if (config_.guideline_mode == GuidelineMode::once) guidelines = guidelines_for(gold.steps[0].screen);
  const std::string rendered = render_guidelines(guidelines);

  const std::string observation = oracle_.observe(screen, gold.task, history);
  const std::string subtask = oracle_.plan_subtask(screen, observation, plan, rendered, history);
  return oracle_.decide(screen, observation, subtask, rendered, history).action;
}

}  // namespace pgagent
