#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gdqn/environment.hpp"
#include "gdqn/raster.hpp"
#include "gdqn/rng.hpp"
#include "gdqn/shaping.hpp"

namespace gdqn {

enum class Orientation { horizontal, vertical };

std::string_view to_string(Orientation o);
Orientation orientation_from_string(std::string_view name);

// Blocks are 5x1 cells lying down and 1x5 standing up.
inline constexpr int kBlockLength = 5;
inline constexpr int kDefaultSceneSize = 20;

struct Block {
  int x = 0;  // top-left cell
  int y = 0;
  Orientation orientation = Orientation::horizontal;

  int width() const { return orientation == Orientation::horizontal ? kBlockLength : 1; }
  int height() const { return orientation == Orientation::horizontal ? 1 : kBlockLength; }
  int bottom() const { return y + height() - 1; }

  bool operator==(const Block&) const = default;
};

struct TargetSpec {
  std::size_t id = 0;
  Raster raster;
  std::vector<Block> blocks;  // placements, in build order
  std::vector<Orientation> orientations;

  std::size_t n_blocks() const { return orientations.size(); }
  bool operator==(const TargetSpec&) const = default;
};

enum class StackAction { left = 0, right = 1, down = 2 };
inline constexpr std::size_t kStackActionCount = 3;

enum class StackOutcome { continuing, collision, collapse, finished };

std::string_view to_string(StackOutcome o);

struct StackScene {
  int width = kDefaultSceneSize;
  int height = kDefaultSceneSize;
  std::vector<Block> placed;
  std::optional<Block> active;
  std::shared_ptr<const TargetSpec> target;
  std::size_t blocks_spawned = 0;
  Raster occupancy;  // placed blocks only
  std::optional<StackOutcome> ended;
};

// Empty scene with the first block of the target's orientation sequence
// spawned at y = 0 in a uniformly chosen column.
StackScene stack_reset(int width, int height, std::shared_ptr<const TargetSpec> target, Rng& rng);

// Advances the scene by one action. Sideways contact with the boundary or a
// placed block is a collision; a down move onto the floor or a placed block
// places the active block. Throws ContractViolation once the episode ended.
StackOutcome stack_step(StackScene& scene, StackAction action, Rng& rng);

// Quasi-static verdict: for every block, the center of mass of the block plus
// everything resting on it (transitively) must lie strictly inside the span of
// its contact cells below (the floor or supporting blocks). Throws
// InvalidState if blocks overlap or leave the scene.
bool stability(std::span<const Block> placed, int width, int height);

// Placed and active blocks.
Raster render(const StackScene& scene);
Raster render_placed(const StackScene& scene);

// Throws ShapeError on dimension mismatch.
bool match_target(const Raster& placed, const TargetSpec& target);

struct StackEncoding {
  std::vector<double> obs;   // placed 0.5, active 1.0
  std::vector<double> goal;  // target raster in {0, 1}
};
StackEncoding stack_encode(const StackScene& scene, const TargetSpec& target);

// Next action of a scripted builder that reproduces the scene's target by
// moving each block over its target column and dropping it.
StackAction scripted_action(const StackScene& scene);

// Paints a block into a raster. Returns false (leaving the raster untouched)
// if the block leaves the raster or overlaps a set cell.
bool paint_block(Raster& r, const Block& b);
bool block_fits(const Raster& occupancy, const Block& b);

class StackingEnv final : public Environment {
 public:
  StackingEnv(int width, int height, std::vector<TargetSpec> targets,
              Shaping shaping = Shaping::none,
              DistanceMetric metric = DistanceMetric::manhattan,
              std::size_t eval_cap = kEvaluationStepCap);

  std::size_t action_count() const override { return kStackActionCount; }
  std::size_t observation_size() const override;
  std::size_t goal_size() const override;

  void reset(Rng& rng) override;
  StepResult step(std::size_t action, Rng& rng) override;
  void encode(std::vector<double>& obs, std::vector<double>& goal) const override;

  std::size_t goal_id() const override;
  std::size_t evaluation_step_cap() const override { return eval_cap_; }
  void finalize_record(EpisodeRecord& record) const override;

  // Starts an episode on a specific target.
  void reset_to(std::size_t target_index, Rng& rng);

  const StackScene& scene() const { return scene_; }
  const std::vector<std::shared_ptr<const TargetSpec>>& targets() const { return targets_; }

  static constexpr std::size_t kEvaluationStepCap = 400;

 private:
  int width_;
  int height_;
  std::vector<std::shared_ptr<const TargetSpec>> targets_;
  std::vector<DistanceMap> distance_maps_;
  std::size_t current_ = 0;
  Shaping shaping_;
  std::size_t eval_cap_;
  StackScene scene_;
};

}  // namespace gdqn
