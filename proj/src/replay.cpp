#include "gdqn/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdqn/error.hpp"

namespace gdqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidConfig("replay capacity must be positive");
}

std::uint32_t ReplayBuffer::intern_goal(const std::vector<double>& goal) {
  if (last_goal_ < goals_.size() && goals_[last_goal_].refs > 0 &&
      goals_[last_goal_].values == goal) {
    ++goals_[last_goal_].refs;
    return last_goal_;
  }
  for (std::uint32_t id = 0; id < goals_.size(); ++id) {
    if (goals_[id].refs > 0 && goals_[id].values == goal) {
      ++goals_[id].refs;
      last_goal_ = id;
      return id;
    }
  }
  std::uint32_t id;
  if (!free_goals_.empty()) {
    id = free_goals_.back();
    free_goals_.pop_back();
    goals_[id].values = goal;
  } else {
    id = static_cast<std::uint32_t>(goals_.size());
    goals_.push_back({goal, 0});
  }
  goals_[id].refs = 1;
  last_goal_ = id;
  return id;
}

void ReplayBuffer::release_goal(std::uint32_t id) {
  if (--goals_[id].refs == 0) free_goals_.push_back(id);
}

std::size_t ReplayBuffer::distinct_goals() const {
  return static_cast<std::size_t>(
      std::count_if(goals_.begin(), goals_.end(), [](const GoalEntry& g) { return g.refs > 0; }));
}

void ReplayBuffer::push(const Transition& t) {
  if (!shaped_) {
    obs_size_ = t.obs.size();
    goal_size_ = t.goal.size();
    shaped_ = true;
  }
  if (t.obs.size() != obs_size_ || t.next_obs.size() != obs_size_ ||
      t.goal.size() != goal_size_) {
    throw ShapeError("transition shape differs from earlier transitions in the buffer");
  }
  if (!std::isfinite(t.reward)) throw NumericError("non-finite reward");

  const std::uint32_t goal_id = intern_goal(t.goal);
  if (size_ < capacity_) {
    obs_.insert(obs_.end(), t.obs.begin(), t.obs.end());
    next_obs_.insert(next_obs_.end(), t.next_obs.begin(), t.next_obs.end());
    goal_ids_.push_back(goal_id);
    actions_.push_back(static_cast<std::uint32_t>(t.action));
    rewards_.push_back(t.reward);
    terminals_.push_back(t.terminal ? 1 : 0);
    ++size_;
  } else {
    const std::size_t slot = cursor_;
    std::copy(t.obs.begin(), t.obs.end(), obs_.begin() + slot * obs_size_);
    std::copy(t.next_obs.begin(), t.next_obs.end(), next_obs_.begin() + slot * obs_size_);
    release_goal(goal_ids_[slot]);
    goal_ids_[slot] = goal_id;
    actions_[slot] = static_cast<std::uint32_t>(t.action);
    rewards_[slot] = t.reward;
    terminals_[slot] = t.terminal ? 1 : 0;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::size_t ReplayBuffer::slot_of(std::size_t i) const {
  if (i >= size_) throw IndexError("replay index " + std::to_string(i) + " out of range");
  // Until the ring wraps the oldest entry is slot 0.
  return size_ < capacity_ ? i : (cursor_ + i) % capacity_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  const std::size_t slot = slot_of(i);
  Transition t;
  t.obs.assign(obs_slot(slot), obs_slot(slot) + obs_size_);
  t.next_obs.assign(next_obs_slot(slot), next_obs_slot(slot) + obs_size_);
  t.goal = goal_slot(slot);
  t.action = actions_[slot];
  t.reward = rewards_[slot];
  t.terminal = terminals_[slot] != 0;
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k, Rng& rng) const {
  if (size_ == 0) throw PreconditionError("cannot sample from an empty replay buffer");
  std::vector<std::size_t> idx(k);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_index(size_));
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(std::size_t k, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(k);
  for (std::size_t i : sample_indices(k, rng)) out.push_back(at(i));
  return out;
}

}  // namespace gdqn
