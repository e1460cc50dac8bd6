#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pgagent/oracle.hpp"
#include "pgagent/world.hpp"

namespace pgagent {

/// Ground-truth backend over a synthetic world. Every answer is a pure function of the
/// request: screens are decoded from their world locators and goals are read from the
/// prompt fields. Foreign locators are reported as oracle-unavailable.
///
/// Decision policy: when guidelines are rendered, follow the first guideline recorded for
/// the current goal whose next unexecuted step names a widget on this page, otherwise take
/// the shortest-path step. With no guidelines, tap the leftmost enabled navigating widget.
class ScriptedBackend final : public ModelBackend {
 public:
  explicit ScriptedBackend(world::WorldSpec spec);

  [[nodiscard]] std::string name() const override { return "scripted:" + spec_.name; }
  std::string complete(const OracleRequest& request) override;

  [[nodiscard]] const world::WorldSpec& world() const noexcept { return spec_; }

  /// The action the policy takes on a screen for a goal given rendered guidelines, with a
  /// one-line reason.
  struct Choice {
    Action action;
    std::string reason;
  };
  [[nodiscard]] Choice choose(const world::WorldState& state, std::string_view goal,
                              std::string_view rendered_guidelines) const;

 private:
  [[nodiscard]] world::WorldState state_of(const std::string& locator) const;
  [[nodiscard]] std::optional<Action> map_step(const world::WorldState& state, std::string_view step) const;
  [[nodiscard]] bool step_done(const world::WorldState& state, const Action& action) const;
  [[nodiscard]] std::string plan_for(std::string_view goal) const;

  world::WorldSpec spec_;
};

/// Goal recorded on the "Task:" line of an observation, or empty.
std::string goal_from_observation(std::string_view observation);

}  // namespace pgagent
