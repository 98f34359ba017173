#include "gdqn/stacking.hpp"

#include <algorithm>
#include <string>

#include "gdqn/error.hpp"

namespace gdqn {
namespace {

// Spawns the next block of the orientation sequence. Returns false when no
// column at the top boundary is free.
bool spawn_next(StackScene& scene, Rng& rng) {
  const Orientation o = scene.target->orientations[scene.blocks_spawned];
  std::vector<int> columns;
  Block b{0, 0, o};
  for (int x = 0; x + b.width() <= scene.width; ++x) {
    b.x = x;
    if (block_fits(scene.occupancy, b)) columns.push_back(x);
  }
  if (columns.empty()) return false;
  b.x = columns[rng.uniform_index(columns.size())];
  scene.active = b;
  ++scene.blocks_spawned;
  return true;
}

bool resting(const Raster& occupancy, const Block& b) {
  if (b.bottom() + 1 >= occupancy.height) return true;
  for (int x = b.x; x < b.x + b.width(); ++x) {
    if (occupancy.at(x, b.bottom() + 1)) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(Orientation o) {
  return o == Orientation::horizontal ? "horizontal" : "vertical";
}

Orientation orientation_from_string(std::string_view name) {
  if (name == "horizontal") return Orientation::horizontal;
  if (name == "vertical") return Orientation::vertical;
  throw InvalidConfig("unknown orientation '" + std::string(name) + "'");
}

std::string_view to_string(StackOutcome o) {
  switch (o) {
    case StackOutcome::continuing: return "continuing";
    case StackOutcome::collision: return "collision";
    case StackOutcome::collapse: return "collapse";
    case StackOutcome::finished: return "finished";
  }
  return "continuing";
}

bool block_fits(const Raster& occupancy, const Block& b) {
  if (b.x < 0 || b.y < 0 || b.x + b.width() > occupancy.width ||
      b.y + b.height() > occupancy.height) {
    return false;
  }
  for (int y = b.y; y < b.y + b.height(); ++y) {
    for (int x = b.x; x < b.x + b.width(); ++x) {
      if (occupancy.at(x, y)) return false;
    }
  }
  return true;
}

bool paint_block(Raster& r, const Block& b) {
  if (!block_fits(r, b)) return false;
  for (int y = b.y; y < b.y + b.height(); ++y) {
    for (int x = b.x; x < b.x + b.width(); ++x) r.at(x, y) = 1;
  }
  return true;
}

StackScene stack_reset(int width, int height, std::shared_ptr<const TargetSpec> target, Rng& rng) {
  if (!target) throw InvalidConfig("stacking scene needs a target");
  if (width < kBlockLength || height < kBlockLength) {
    throw InvalidConfig("scene must be at least " + std::to_string(kBlockLength) + " cells each way");
  }
  if (target->raster.width != width || target->raster.height != height) {
    throw InvalidConfig("target raster " + std::to_string(target->raster.width) + "x" +
                        std::to_string(target->raster.height) + " does not fit scene " +
                        std::to_string(width) + "x" + std::to_string(height));
  }
  if (target->n_blocks() == 0) throw InvalidConfig("target has no blocks");
  StackScene scene;
  scene.width = width;
  scene.height = height;
  scene.target = std::move(target);
  scene.occupancy = Raster(width, height);
  if (!spawn_next(scene, rng)) throw InvalidConfig("first block does not fit the scene");
  return scene;
}

StackOutcome stack_step(StackScene& scene, StackAction action, Rng& rng) {
  if (scene.ended || !scene.active) throw ContractViolation("step after the episode ended");
  Block& active = *scene.active;

  auto end = [&](StackOutcome o) {
    scene.ended = o;
    return o;
  };

  if (action == StackAction::left || action == StackAction::right) {
    Block moved = active;
    moved.x += action == StackAction::left ? -1 : 1;
    if (!block_fits(scene.occupancy, moved)) return end(StackOutcome::collision);
    active = moved;
    return StackOutcome::continuing;
  }

  if (!resting(scene.occupancy, active)) {
    ++active.y;
    return StackOutcome::continuing;
  }

  // Placement.
  paint_block(scene.occupancy, active);
  scene.placed.push_back(active);
  scene.active.reset();
  if (!stability(scene.placed, scene.width, scene.height)) return end(StackOutcome::collapse);
  if (scene.blocks_spawned == scene.target->n_blocks()) return end(StackOutcome::finished);
  // A structure that reaches the top boundary leaves the next block nowhere
  // to appear; it is treated as colliding with the structure.
  if (!spawn_next(scene, rng)) return end(StackOutcome::collision);
  return StackOutcome::continuing;
}

bool stability(std::span<const Block> placed, int width, int height) {
  const int n = static_cast<int>(placed.size());
  // Cell owner labels; -1 is empty.
  std::vector<int> owner(static_cast<std::size_t>(width) * height, -1);
  for (int i = 0; i < n; ++i) {
    const Block& b = placed[i];
    if (b.x < 0 || b.y < 0 || b.x + b.width() > width || b.y + b.height() > height) {
      throw InvalidState("block " + std::to_string(i) + " lies outside the scene");
    }
    for (int y = b.y; y < b.y + b.height(); ++y) {
      for (int x = b.x; x < b.x + b.width(); ++x) {
        int& cell = owner[static_cast<std::size_t>(y) * width + x];
        if (cell >= 0) {
          throw InvalidState("blocks " + std::to_string(cell) + " and " + std::to_string(i) +
                             " overlap");
        }
        cell = i;
      }
    }
  }

  // carriers[k] lists the blocks resting directly on block k.
  std::vector<std::vector<int>> carriers(n);
  std::vector<int> contact_lo(n), contact_hi(n);
  for (int i = 0; i < n; ++i) {
    const Block& b = placed[i];
    const int below = b.bottom() + 1;
    int lo = width, hi = -1;
    for (int x = b.x; x < b.x + b.width(); ++x) {
      int support = -1;  // floor
      if (below < height) {
        support = owner[static_cast<std::size_t>(below) * width + x];
        if (support < 0) continue;
      }
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      if (support >= 0) {
        auto& c = carriers[support];
        if (std::find(c.begin(), c.end(), i) == c.end()) c.push_back(i);
      }
    }
    if (hi < 0) return false;  // nothing underneath
    contact_lo[i] = lo;
    contact_hi[i] = hi + 1;
  }

  std::vector<char> seen(n);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(1, i);
    seen[i] = 1;
    long count = 0;
    long twice_com_sum = 0;  // sum of 2 * center x over the group
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      ++count;
      twice_com_sum += 2L * placed[k].x + placed[k].width();
      for (int up : carriers[k]) {
        if (!seen[up]) {
          seen[up] = 1;
          stack.push_back(up);
        }
      }
    }
    // Strictly inside (lo, hi), scaled by 2 * count to stay in integers.
    if (!(2L * contact_lo[i] * count < twice_com_sum && twice_com_sum < 2L * contact_hi[i] * count)) {
      return false;
    }
  }
  return true;
}

Raster render_placed(const StackScene& scene) {
  Raster r(scene.width, scene.height);
  for (const Block& b : scene.placed) paint_block(r, b);
  return r;
}

Raster render(const StackScene& scene) {
  Raster r = render_placed(scene);
  if (scene.active) paint_block(r, *scene.active);
  return r;
}

bool match_target(const Raster& placed, const TargetSpec& target) {
  if (!placed.same_shape(target.raster)) {
    throw ShapeError("raster dimensions differ from the target's");
  }
  return placed == target.raster;
}

StackEncoding stack_encode(const StackScene& scene, const TargetSpec& target) {
  const std::size_t n = static_cast<std::size_t>(scene.width) * scene.height;
  if (target.raster.size() != n) throw ShapeError("target raster does not match the scene");
  StackEncoding e{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (scene.occupancy.cells[i]) e.obs[i] = 0.5;
    if (target.raster.cells[i]) e.goal[i] = 1.0;
  }
  if (scene.active) {
    const Block& b = *scene.active;
    for (int y = b.y; y < b.y + b.height(); ++y) {
      for (int x = b.x; x < b.x + b.width(); ++x) {
        e.obs[static_cast<std::size_t>(y) * scene.width + x] = 1.0;
      }
    }
  }
  return e;
}

StackAction scripted_action(const StackScene& scene) {
  if (!scene.active || !scene.target) throw ContractViolation("no active block to steer");
  const Block& goal = scene.target->blocks.at(scene.blocks_spawned - 1);
  if (scene.active->x < goal.x) return StackAction::right;
  if (scene.active->x > goal.x) return StackAction::left;
  return StackAction::down;
}

StackingEnv::StackingEnv(int width, int height, std::vector<TargetSpec> targets, Shaping shaping,
                         DistanceMetric metric, std::size_t eval_cap)
    : width_(width), height_(height), shaping_(shaping), eval_cap_(eval_cap) {
  if (eval_cap_ == 0) throw InvalidConfig("evaluation step cap must be positive");
  if (targets.empty()) throw InvalidConfig("stacking environment needs at least one target");
  for (auto& t : targets) {
    if (t.raster.width != width || t.raster.height != height) {
      throw InvalidConfig("target " + std::to_string(t.id) + " does not fit the scene");
    }
    distance_maps_.push_back(distance_transform(t.raster, metric));
    targets_.push_back(std::make_shared<const TargetSpec>(std::move(t)));
  }
  Rng rng(0);
  scene_ = stack_reset(width_, height_, targets_.front(), rng);
}

std::size_t StackingEnv::observation_size() const {
  return static_cast<std::size_t>(width_) * height_;
}

std::size_t StackingEnv::goal_size() const { return observation_size(); }

void StackingEnv::reset(Rng& rng) { reset_to(rng.uniform_index(targets_.size()), rng); }

void StackingEnv::reset_to(std::size_t target_index, Rng& rng) {
  current_ = target_index;
  scene_ = stack_reset(width_, height_, targets_.at(target_index), rng);
}

StepResult StackingEnv::step(std::size_t action, Rng& rng) {
  if (action >= kStackActionCount) {
    throw IndexError("stacking action " + std::to_string(action) + " out of range");
  }
  const TargetSpec& target = *targets_[current_];
  const std::size_t placed_before = scene_.placed.size();
  Raster prev_placed;
  Raster prev_full;
  if (shaping_ == Shaping::overlap) prev_placed = scene_.occupancy;
  if (shaping_ == Shaping::distance) prev_full = render(scene_);

  const StackOutcome outcome = stack_step(scene_, static_cast<StackAction>(action), rng);

  StepResult r;
  if (outcome == StackOutcome::finished && match_target(scene_.occupancy, target)) {
    r.task_reward = 1.0;
  }
  double shaped = 0.0;
  if (shaping_ == Shaping::overlap) {
    shaped = overlap_reward(prev_placed, scene_.occupancy, target.raster);
  } else if (shaping_ == Shaping::distance) {
    // On a placement step the comparison uses the structure as placed, before
    // the next block appears at the top.
    const Raster next = scene_.placed.size() != placed_before ? scene_.occupancy : render(scene_);
    shaped = distance_reward(prev_full, next, distance_maps_[current_]);
  }
  r.reward = r.task_reward + shaped;
  r.done = outcome != StackOutcome::continuing;
  switch (outcome) {
    case StackOutcome::collision: r.cause = TerminalCause::collision; break;
    case StackOutcome::collapse: r.cause = TerminalCause::collapse; break;
    case StackOutcome::finished: r.cause = TerminalCause::finished; break;
    case StackOutcome::continuing: break;
  }
  return r;
}

void StackingEnv::encode(std::vector<double>& obs, std::vector<double>& goal) const {
  auto e = stack_encode(scene_, *targets_[current_]);
  obs = std::move(e.obs);
  goal = std::move(e.goal);
}

std::size_t StackingEnv::goal_id() const { return targets_[current_]->id; }

void StackingEnv::finalize_record(EpisodeRecord& record) const {
  const TargetSpec& target = *targets_[current_];
  record.overlap = overlap_ratio(scene_.occupancy, target.raster);
  record.finished = record.cause == TerminalCause::finished;
  record.success = record.finished && match_target(scene_.occupancy, target);
}

}  // namespace gdqn
