#pragma once

#include "pgagent/action.hpp"
#include "pgagent/model.hpp"

namespace pgagent {

struct StepOutcome {
  bool terminal = false;
};

/// GUI the agent acts on. Implementations own all mutable per-run state.
class Environment {
 public:
  virtual ~Environment() = default;
  [[nodiscard]] virtual ScreenRef current_screen() const = 0;
  /// Applies an action. StatusComplete and StatusImpossible are terminal.
  virtual StepOutcome apply(const Action& action) = 0;
};

/// Teacher-forcing replayer: ignores the predicted action and advances along the gold steps.
class EpisodeReplayEnvironment final : public Environment {
 public:
  explicit EpisodeReplayEnvironment(const Episode& episode);
  [[nodiscard]] ScreenRef current_screen() const override;
  StepOutcome apply(const Action& action) override;
  [[nodiscard]] std::size_t position() const noexcept { return position_; }

 private:
  const Episode& episode_;
  std::size_t position_ = 0;
};

}  // namespace pgagent
