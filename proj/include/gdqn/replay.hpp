#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gdqn/rng.hpp"

namespace gdqn {

struct Transition {
  std::vector<double> obs;
  std::vector<double> goal;  // empty for plain DQN
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;

  bool operator==(const Transition&) const = default;
};

// Fixed-capacity FIFO ring of transitions with uniform sampling.
//
// Observations are stored at single precision; every encoding produced by the
// environments here ({0, 0.5, 1} rasters, one-hot codes) is exact in float.
// Goal vectors are interned since a run only ever sees a handful of goals.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);

  // k independent uniform draws with replacement. Throws PreconditionError
  // when empty.
  std::vector<Transition> sample(std::size_t k, Rng& rng) const;

  // Sample indices only; `at` materializes them. Used by the training loop to
  // avoid building Transition objects.
  std::vector<std::size_t> sample_indices(std::size_t k, Rng& rng) const;

  // i-th oldest live transition, 0 <= i < size().
  Transition at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_size() const { return obs_size_; }
  std::size_t goal_size() const { return goal_size_; }

  // Raw slot access for the training loop (slot = physical ring index).
  std::size_t slot_of(std::size_t i) const;
  const float* obs_slot(std::size_t slot) const { return obs_.data() + slot * obs_size_; }
  const float* next_obs_slot(std::size_t slot) const { return next_obs_.data() + slot * obs_size_; }
  const std::vector<double>& goal_slot(std::size_t slot) const { return goals_[goal_ids_[slot]].values; }
  std::size_t action_slot(std::size_t slot) const { return actions_[slot]; }
  double reward_slot(std::size_t slot) const { return rewards_[slot]; }
  bool terminal_slot(std::size_t slot) const { return terminals_[slot] != 0; }

  std::size_t distinct_goals() const;

 private:
  struct GoalEntry {
    std::vector<double> values;
    std::size_t refs = 0;
  };

  std::uint32_t intern_goal(const std::vector<double>& goal);
  void release_goal(std::uint32_t id);

  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;  // next slot to write
  std::size_t obs_size_ = 0;
  std::size_t goal_size_ = 0;
  bool shaped_ = false;

  std::vector<float> obs_;
  std::vector<float> next_obs_;
  std::vector<std::uint32_t> goal_ids_;
  std::vector<std::uint32_t> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> terminals_;

  std::vector<GoalEntry> goals_;
  std::vector<std::uint32_t> free_goals_;
  std::uint32_t last_goal_ = 0;
};

}  // namespace gdqn
