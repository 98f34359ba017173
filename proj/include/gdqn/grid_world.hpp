#pragma once

#include <cstddef>
#include <vector>

#include "gdqn/environment.hpp"
#include "gdqn/rng.hpp"

namespace gdqn {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

// x grows rightward, y downward; cells flatten row-major.
struct GridState {
  int width = 0;
  int height = 0;
  Cell agent;
  Cell goal;

  bool operator==(const GridState&) const = default;
};

enum class GridAction { left = 0, right = 1, up = 2, down = 3 };
inline constexpr std::size_t kGridActionCount = 4;

struct GridStep {
  GridState state;
  double reward = 0.0;
  bool done = false;
};

// Agent and goal uniform over cells, resampled until distinct.
GridState grid_reset(int width, int height, Rng& rng);
GridStep grid_step(const GridState& state, GridAction action);

struct GridEncoding {
  std::vector<double> obs;   // one-hot agent cell
  std::vector<double> goal;  // one-hot goal cell
};
GridEncoding grid_encode(const GridState& state);

// Manhattan distance from agent to goal.
int shortest_distance(const GridState& state);

class GridWorld final : public Environment {
 public:
  // `eval_cap` 0 selects the default of one step per cell.
  GridWorld(int width, int height, std::size_t eval_cap = 0);

  std::size_t action_count() const override { return kGridActionCount; }
  std::size_t observation_size() const override;
  std::size_t goal_size() const override;

  void reset(Rng& rng) override;
  StepResult step(std::size_t action, Rng& rng) override;
  void encode(std::vector<double>& obs, std::vector<double>& goal) const override;

  std::size_t goal_id() const override;
  std::size_t evaluation_step_cap() const override;
  void finalize_record(EpisodeRecord& record) const override;

  const GridState& state() const { return state_; }
  void set_state(const GridState& s);

 private:
  GridState state_;
  std::size_t eval_cap_ = 0;
  int initial_distance_ = 0;
  bool reached_ = false;
};

}  // namespace gdqn
