#include "pgagent/environment.hpp"

#include "pgagent/error.hpp"

namespace pgagent {

EpisodeReplayEnvironment::EpisodeReplayEnvironment(const Episode& episode) : episode_(episode) {
  episode_.validate();
}

ScreenRef EpisodeReplayEnvironment::current_screen() const {
  if (position_ < episode_.steps.size()) return episode_.steps[position_].screen;
  if (episode_.final_screen) return *episode_.final_screen;
  return episode_.steps.back().screen;
}

StepOutcome EpisodeReplayEnvironment::apply(const Action& action) {
  if (is_status(action)) return {true};
  if (position_ < episode_.steps.size()) ++position_;
  return {position_ >= episode_.steps.size()};
}

}  // namespace pgagent
