#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgagent/action.hpp"
#include "pgagent/environment.hpp"
#include "pgagent/model.hpp"

// Deterministic GUI micro-world used as a test double for real apps and websites.
namespace pgagent::world {

enum class WidgetKind { button, field, list_item };
std::string_view to_string(WidgetKind k);
WidgetKind parse_widget_kind(std::string_view s);

struct Widget {
  std::string id;
  std::string label;  // unique across the world so summaries identify the widget
  WidgetKind kind = WidgetKind::button;
  std::string target;          // page reached by tapping; empty for in-page widgets
  std::string requires_field;  // id of a field on the same page that must be non-empty
  std::string effect_value;    // when set, tapping stores this value in the widget's variable
  bool operator==(const Widget&) const = default;
};

struct Page {
  std::string name;
  std::string description;  // canonical page summary
  std::vector<Widget> widgets;
  bool operator==(const Page&) const = default;
};

/// A variable (page.widget) that must hold `value` before the task counts as done.
struct Requirement {
  std::string page;
  std::string widget;
  std::string value;
  bool operator==(const Requirement&) const = default;
};

struct WorldTask {
  std::string goal;
  std::string target_page;
  std::vector<Requirement> requirements;
  bool operator==(const WorldTask&) const = default;
};

struct WorldSpec {
  static constexpr int kFormatVersion = 1;

  std::string name;
  std::string start_page;
  std::vector<Page> pages;
  std::vector<WorldTask> tasks;

  [[nodiscard]] const Page* find_page(std::string_view name) const;
  [[nodiscard]] const Page& page(std::string_view name) const;
  [[nodiscard]] const WorldTask* find_task(std::string_view goal) const;
  /// Targets exist, labels are unique, at most one field per page, tasks reachable.
  /// Throws Error(validation).
  void validate() const;
  bool operator==(const WorldSpec&) const = default;
};

struct WorldState {
  std::string page;
  std::map<std::string, std::string> vars;  // "page.widget" -> value
  bool operator==(const WorldState&) const = default;
};

std::string var_key(std::string_view page, std::string_view widget);

WorldState initial_state(const WorldSpec& spec);
/// "world://page/<name>/state/<token>", the token being a percent-encoded rendering of the
/// variables ("0" when there are none). Decodable without any side table.
std::string screen_locator(const WorldState& state);
ScreenRef screen_ref(const WorldSpec& spec, const WorldState& state);
/// Throws Error(invalid_argument) for foreign or malformed locators.
WorldState parse_screen_locator(const WorldSpec& spec, std::string_view locator);

/// Widgets are laid out left to right in equal-width columns across the middle band.
Rect widget_bbox(const Page& page, std::size_t index);
Action tap_widget(const Page& page, std::size_t index);
/// Index of the widget under a point, if any.
std::optional<std::size_t> widget_at(const Page& page, Point p);
std::optional<std::size_t> widget_index(const Page& page, std::string_view widget_id);

bool transition_allowed(const Page& page, const Widget& widget, const WorldState& state);
bool goal_satisfied(const WorldTask& task, const WorldState& state);

struct ApplyResult {
  bool terminal = false;
  bool page_changed = false;
};
/// Applies an action in place. Unknown targets and blocked transitions are no-ops.
ApplyResult apply_action(const WorldSpec& spec, WorldState& state, const Action& action);

/// Canonical natural-language description of an action taken on `before`.
std::string describe_action(const WorldSpec& spec, const WorldState& before, const Action& action);

/// Next step of the shortest solution (requirements in order, then the target page), or
/// StatusComplete when the goal already holds. nullopt when the goal is unreachable.
std::optional<Action> next_gold_action(const WorldSpec& spec, const WorldTask& task, const WorldState& state);

/// Taps the leftmost enabled navigating widget; the unguided fallback policy.
Action left_to_right_action(const WorldSpec& spec, const WorldTask& task, const WorldState& state);

/// Shortest-path episodes, one per task, ending with a StatusComplete step. The seed is
/// mixed into the episode ids. Throws Error(invalid_argument) for unreachable goals.
std::vector<Episode> generate_episodes(const WorldSpec& spec, std::span<const WorldTask> tasks,
                                       std::uint64_t seed);

/// One episode per transition: walk from the start page, then take that transition. Each
/// episode ends with a final screen so the last tap is an observed tuple.
std::vector<Episode> coverage_episodes(const WorldSpec& spec);

/// Shortest-path episode for one task from an arbitrary state; ends with StatusComplete.
Episode solve_task(const WorldSpec& spec, const WorldTask& task, WorldState start, std::string episode_id);

/// Walks that take every transition exactly once, starting pages in seeded order.
std::vector<Episode> walk_episodes(const WorldSpec& spec, std::uint64_t seed);

/// Reference page graph: one node per page, one edge per transition.
PageGraph true_page_graph(const WorldSpec& spec);

/// Task label used for transitions in coverage episodes and the reference graph.
std::string transition_task(std::string_view page, std::string_view widget);

/// The eight-page shopping/settings demo with ten tasks.
WorldSpec demo_world();

struct RandomWorldOptions {
  std::size_t pages = 20;
  std::size_t transitions = 30;  // at least pages - 1; capped by max_out_degree
  std::size_t max_out_degree = 4;
  double field_probability = 0.3;
  std::size_t tasks = 5;
};
/// Random reachable world: a spanning tree from the start page plus random forward and back
/// edges, no self-loops or duplicate transitions.
WorldSpec random_world(std::uint64_t seed, const RandomWorldOptions& options);

/// Environment over a world instance.
class WorldEnvironment final : public Environment {
 public:
  explicit WorldEnvironment(const WorldSpec& spec);
  WorldEnvironment(const WorldSpec& spec, WorldState start);
  [[nodiscard]] ScreenRef current_screen() const override;
  StepOutcome apply(const Action& action) override;
  [[nodiscard]] const WorldState& state() const noexcept { return state_; }

 private:
  const WorldSpec& spec_;
  WorldState state_;
};

/// Bounded draw in [0, bound) from a 64-bit generator, portable across standard libraries.
std::uint64_t uniform_below(std::uint64_t& state, std::uint64_t bound);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace pgagent::world
