#include "pgagent/scripted.hpp"

#include <fmt/format.h>

#include "pgagent/error.hpp"
#include "pgagent/retrieval.hpp"
#include "pgagent/text.hpp"

namespace pgagent {

namespace {

constexpr std::string_view kTaskLine = "Task: ";

std::string visible_widgets(const world::Page& page) {
  std::vector<std::string> labels;
  for (const auto& w : page.widgets) labels.push_back(fmt::format("{} ({})", w.label, world::to_string(w.kind)));
  return text::join(labels, ", ");
}

}  // namespace

std::string goal_from_observation(std::string_view observation) {
  for (const auto& line : text::split_lines(observation)) {
    auto t = text::trim(line);
    if (t.starts_with(kTaskLine)) return std::string(text::trim(t.substr(kTaskLine.size())));
  }
  return {};
}

ScriptedBackend::ScriptedBackend(world::WorldSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

world::WorldState ScriptedBackend::state_of(const std::string& locator) const {
  try {
    return world::parse_screen_locator(spec_, locator);
  } catch (const Error& e) {
    fail(ErrorKind::oracle_unavailable, fmt::format("scripted backend cannot resolve screen: {}", e.what()));
  }
}

std::optional<Action> ScriptedBackend::map_step(const world::WorldState& state, std::string_view step) const {
  const world::Page& page = spec_.page(state.page);
  for (std::size_t i = 0; i < page.widgets.size(); ++i) {
    const Action tap = world::tap_widget(page, i);
    if (world::describe_action(spec_, state, tap) == step) return tap;
    const auto& w = page.widgets[i];
    if (w.kind != world::WidgetKind::field) continue;
    const std::string_view prefix = "type \"";
    const std::string suffix = fmt::format("\" into the {} field", w.label);
    if (step.size() >= prefix.size() + suffix.size() && step.starts_with(prefix) && step.ends_with(suffix)) {
      return act::TypeText{std::string(step.substr(prefix.size(), step.size() - prefix.size() - suffix.size()))};
    }
  }
  return std::nullopt;
}

bool ScriptedBackend::step_done(const world::WorldState& state, const Action& action) const {
  const world::Page& page = spec_.page(state.page);
  auto value_of = [&](const std::string& widget) -> std::string {
    auto it = state.vars.find(world::var_key(page.name, widget));
    return it == state.vars.end() ? std::string() : it->second;
  };
  if (const auto* type = std::get_if<act::TypeText>(&action)) {
    for (const auto& w : page.widgets) {
      if (w.kind == world::WidgetKind::field) return value_of(w.id) == type->text;
    }
    return false;
  }
  if (const auto* tap = std::get_if<act::Tap>(&action)) {
    const auto i = world::widget_at(page, Point{tap->x, tap->y});
    if (!i) return false;
    const auto& w = page.widgets[*i];
    // Only pure in-page toggles can be recognized as already done.
    return w.target.empty() && !w.effect_value.empty() && value_of(w.id) == w.effect_value;
  }
  return false;
}

ScriptedBackend::Choice ScriptedBackend::choose(const world::WorldState& state, std::string_view goal,
                                                std::string_view rendered_guidelines) const {
  const world::WorldTask* task = spec_.find_task(goal);
  if (!task) return {act::StatusImpossible{}, "the goal is not a task this app supports"};
  if (world::goal_satisfied(*task, state)) return {act::StatusComplete{}, "the goal is satisfied on this screen"};

  const auto guidelines = parse_rendered_guidelines(rendered_guidelines);
  if (guidelines.empty()) {
    return {world::left_to_right_action(spec_, *task, state), "no guidelines; trying the leftmost control"};
  }
  for (std::size_t gi = 0; gi < guidelines.size(); ++gi) {
    const auto& g = guidelines[gi];
    if (g.achievable_tasks.empty() || !text::iequals(g.achievable_tasks.front(), task->goal)) continue;
    for (const auto& step : g.action_queue) {
      const auto action = map_step(state, step);
      if (!action) break;
      if (step_done(state, *action)) continue;
      return {*action, fmt::format("following guideline {}: {}", gi + 1, step)};
    }
  }
  auto gold = world::next_gold_action(spec_, *task, state);
  if (!gold) return {act::StatusImpossible{}, "the goal cannot be reached from this screen"};
  return {*gold, "no guideline applies here; taking the shortest path"};
}

std::string ScriptedBackend::plan_for(std::string_view goal) const {
  const world::WorldTask* task = spec_.find_task(goal);
  if (!task) return fmt::format("1. Explore the app looking for a way to: {}", text::collapse_whitespace(goal));
  std::vector<std::string> phases;
  for (const auto& r : task->requirements) {
    const world::Page& page = spec_.page(r.page);
    const auto idx = world::widget_index(page, r.widget);
    const std::string label = idx ? page.widgets[*idx].label : r.widget;
    if (idx && page.widgets[*idx].kind == world::WidgetKind::field) {
      phases.push_back(fmt::format("Enter \"{}\" in the {} field on the {} page", r.value, label, r.page));
    } else {
      phases.push_back(fmt::format("Use the {} button on the {} page", label, r.page));
    }
  }
  phases.push_back(fmt::format("Finish on the {} page", task->target_page));
  std::string out;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i) out.push_back('\n');
    out += fmt::format("{}. {}", i + 1, phases[i]);
  }
  return out;
}

std::string ScriptedBackend::complete(const OracleRequest& request) {
  const auto images = request.images();
  if (images.empty()) fail(ErrorKind::oracle_unavailable, "scripted backend needs a screen");
  const world::WorldState state = state_of(images[0]);
  const world::Page& page = spec_.page(state.page);

  switch (request.role) {
    case Role::action_summary:
      return world::describe_action(spec_, state, parse_action(request.field("action")));
    case Role::jump_judge:
    case Role::dissimilar_judge: {
      if (images.size() < 2) fail(ErrorKind::oracle_unavailable, "comparison needs two screens");
      const bool differs = state_of(images[1]).page != state.page;
      return differs ? "Yes, these are different pages." : "No, this is the same page.";
    }
    case Role::page_summary:
    case Role::screen_summary:
      return page.description;
    case Role::index_select: {
      const auto candidates = parse_candidates(request.field("candidates"));
      const auto wanted = text::collapse_whitespace(page.description);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (text::collapse_whitespace(candidates[i]) == wanted) return std::to_string(i + 1);
      }
      return "1";
    }
    case Role::global_plan:
      return plan_for(request.field("goal"));
    case Role::observe:
      return fmt::format("Screen: {}\n{}{}\nVisible widgets: {}", page.description, kTaskLine,
                         text::collapse_whitespace(request.field("goal")), visible_widgets(page));
    case Role::subtask_plan: {
      const auto goal = goal_from_observation(request.field("observation"));
      const auto choice = choose(state, goal, request.field("guidelines"));
      return fmt::format("{}{}\nCurrent sub-task: {}\nCandidate actions:\n1. {}", kTaskLine, goal, choice.reason,
                         world::describe_action(spec_, state, choice.action));
    }
    case Role::decide: {
      const auto goal = goal_from_observation(request.field("observation"));
      const auto choice = choose(state, goal, request.field("guidelines"));
      return fmt::format("Reason: {}\nACTION: {}", choice.reason, format_action(choice.action));
    }
  }
  fail(ErrorKind::oracle_unavailable, "scripted backend got an unknown role");
}

}  // namespace pgagent
