#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <vector>

#include "gdqn/rng.hpp"

namespace gdqn {

enum class TerminalCause {
  goal_reached,  // gridworld
  collision,     // stacking: sideways contact or no room to spawn
  collapse,      // stacking: unstable placement
  finished,      // stacking: all blocks placed stably
  step_cap,      // evaluation episode force-terminated
  truncated,     // epoch budget ran out mid-episode
};

std::string_view to_string(TerminalCause cause);
TerminalCause terminal_cause_from_string(std::string_view name);

struct EpisodeRecord {
  std::size_t index = 0;
  std::size_t steps = 0;
  TerminalCause cause = TerminalCause::truncated;
  double reward = 0.0;       // sum of per-step rewards, shaping included
  double task_reward = 0.0;  // sum of unshaped task rewards
  std::size_t goal_id = 0;
  bool success = false;
  long optimal_steps = -1;  // gridworld only
  double overlap = std::numeric_limits<double>::quiet_NaN();  // stacking only
  bool finished = false;    // stacking only

  bool completed() const { return cause != TerminalCause::truncated; }
  bool operator==(const EpisodeRecord& o) const;
};

struct StepResult {
  double reward = 0.0;       // task + shaping
  double task_reward = 0.0;
  bool done = false;
  TerminalCause cause = TerminalCause::truncated;  // meaningful when done
};

// Episodic environment with a per-episode goal, driven by run_epoch.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t action_count() const = 0;
  virtual std::size_t observation_size() const = 0;
  virtual std::size_t goal_size() const = 0;

  virtual void reset(Rng& rng) = 0;
  virtual StepResult step(std::size_t action, Rng& rng) = 0;
  virtual void encode(std::vector<double>& obs, std::vector<double>& goal) const = 0;

  virtual std::size_t goal_id() const = 0;
  // Evaluation episodes longer than this are cut off and count as failures.
  virtual std::size_t evaluation_step_cap() const = 0;
  // Fills the environment-specific fields of a record for the episode that
  // just ended (success, optimal_steps, overlap, finished).
  virtual void finalize_record(EpisodeRecord& record) const = 0;
};

}  // namespace gdqn
