#include "gdqn/grid_world.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "gdqn/error.hpp"

namespace gdqn {
namespace {

void check_dims(int width, int height) {
  if (width < 2 || height < 2) {
    throw InvalidConfig("grid must be at least 2x2, got " + std::to_string(width) + "x" +
                        std::to_string(height));
  }
}

Cell random_cell(int width, int height, Rng& rng) {
  const auto i = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(width) * height));
  return {i % width, i / width};
}

}  // namespace

GridState grid_reset(int width, int height, Rng& rng) {
  check_dims(width, height);
  GridState s{width, height, {}, {}};
  do {
    s.agent = random_cell(width, height, rng);
    s.goal = random_cell(width, height, rng);
  } while (s.agent == s.goal);
  return s;
}

GridStep grid_step(const GridState& state, GridAction action) {
  GridStep out{state, 0.0, false};
  Cell next = state.agent;
  switch (action) {
    case GridAction::left: --next.x; break;
    case GridAction::right: ++next.x; break;
    case GridAction::up: --next.y; break;
    case GridAction::down: ++next.y; break;
  }
  if (next.x >= 0 && next.y >= 0 && next.x < state.width && next.y < state.height) {
    out.state.agent = next;
  }
  if (out.state.agent == state.goal) {
    out.reward = 1.0;
    out.done = true;
  }
  return out;
}

GridEncoding grid_encode(const GridState& state) {
  const std::size_t n = static_cast<std::size_t>(state.width) * state.height;
  GridEncoding e{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  e.obs[static_cast<std::size_t>(state.agent.y) * state.width + state.agent.x] = 1.0;
  e.goal[static_cast<std::size_t>(state.goal.y) * state.width + state.goal.x] = 1.0;
  return e;
}

int shortest_distance(const GridState& state) {
  return std::abs(state.agent.x - state.goal.x) + std::abs(state.agent.y - state.goal.y);
}

GridWorld::GridWorld(int width, int height, std::size_t eval_cap) {
  check_dims(width, height);
  eval_cap_ = eval_cap > 0 ? eval_cap : static_cast<std::size_t>(width) * height;
  state_ = {width, height, {0, 0}, {1, 0}};
  initial_distance_ = shortest_distance(state_);
}

std::size_t GridWorld::observation_size() const {
  return static_cast<std::size_t>(state_.width) * state_.height;
}

std::size_t GridWorld::goal_size() const { return observation_size(); }

void GridWorld::reset(Rng& rng) {
  state_ = grid_reset(state_.width, state_.height, rng);
  initial_distance_ = shortest_distance(state_);
  reached_ = false;
}

void GridWorld::set_state(const GridState& s) {
  check_dims(s.width, s.height);
  state_ = s;
  initial_distance_ = shortest_distance(state_);
  reached_ = false;
}

StepResult GridWorld::step(std::size_t action, Rng&) {
  if (action >= kGridActionCount) {
    throw IndexError("grid action " + std::to_string(action) + " out of range");
  }
  if (reached_) throw ContractViolation("step after the goal was reached");
  const GridStep s = grid_step(state_, static_cast<GridAction>(action));
  state_ = s.state;
  reached_ = s.done;
  return {s.reward, s.reward, s.done, TerminalCause::goal_reached};
}

void GridWorld::encode(std::vector<double>& obs, std::vector<double>& goal) const {
  auto e = grid_encode(state_);
  obs = std::move(e.obs);
  goal = std::move(e.goal);
}

std::size_t GridWorld::goal_id() const {
  return static_cast<std::size_t>(state_.goal.y) * state_.width + state_.goal.x;
}

std::size_t GridWorld::evaluation_step_cap() const {
  return eval_cap_;
}

void GridWorld::finalize_record(EpisodeRecord& record) const {
  record.optimal_steps = initial_distance_;
  record.success = record.cause == TerminalCause::goal_reached &&
                   record.steps == static_cast<std::size_t>(initial_distance_);
}

}  // namespace gdqn
