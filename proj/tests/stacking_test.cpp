#include <gtest/gtest.h>

#include <set>

#include "gdqn/error.hpp"
#include "gdqn/stacking.hpp"
#include "gdqn/targets.hpp"
#include "oracles.hpp"

using namespace gdqn;

namespace {

constexpr auto H = Orientation::horizontal;
constexpr auto V = Orientation::vertical;

std::shared_ptr<const TargetSpec> target_of(std::vector<Block> blocks, int w = 20, int h = 20) {
  TargetSpec t;
  t.raster = Raster(w, h);
  for (const auto& b : blocks) {
    EXPECT_TRUE(paint_block(t.raster, b));
    t.orientations.push_back(b.orientation);
  }
  t.blocks = std::move(blocks);
  return std::make_shared<const TargetSpec>(std::move(t));
}

// Runs a scripted episode to the end; returns the outcome.
StackOutcome build(StackScene& scene, Rng& rng) {
  for (int i = 0; i < 1000 && !scene.ended; ++i) stack_step(scene, scripted_action(scene), rng);
  return scene.ended.value_or(StackOutcome::continuing);
}

}  // namespace

TEST(Stability, Examples) {
  const std::vector<Block> one{{3, 19, H}};
  EXPECT_TRUE(stability(one, 20, 20));
  const std::vector<Block> aligned{{3, 19, H}, {3, 18, H}};
  EXPECT_TRUE(stability(aligned, 20, 20));
  const std::vector<Block> offset2{{3, 19, H}, {5, 18, H}};
  EXPECT_TRUE(stability(offset2, 20, 20));
  const std::vector<Block> offset3{{3, 19, H}, {6, 18, H}};
  EXPECT_FALSE(stability(offset3, 20, 20));
  const std::vector<Block> floating{{3, 10, H}};
  EXPECT_FALSE(stability(floating, 20, 20));
  const std::vector<Block> pillar{{3, 15, V}, {3, 10, V}};
  EXPECT_TRUE(stability(pillar, 20, 20));
  // Vertical on the last cell of a horizontal block: one contact cell whose
  // span still contains the pillar's center.
  const std::vector<Block> edge{{3, 19, H}, {7, 14, V}};
  EXPECT_TRUE(stability(edge, 20, 20));
  // A lintel over two pillars: each pillar carries the whole lintel in the
  // group rule, and the group's center falls outside either pillar.
  const std::vector<Block> bridge{{3, 15, V}, {7, 15, V}, {3, 14, H}};
  EXPECT_FALSE(stability(bridge, 20, 20));
  EXPECT_FALSE(oracle::stable(bridge, 20));
}

TEST(Stability, InvalidInput) {
  const std::vector<Block> overlap{{3, 19, H}, {5, 19, H}};
  EXPECT_THROW(stability(overlap, 20, 20), InvalidState);
  const std::vector<Block> outside{{17, 19, H}};
  EXPECT_THROW(stability(outside, 20, 20), InvalidState);
}

TEST(Stability, AlignedAdditionPreservesStability) {
  std::vector<Block> tower{{8, 19, H}};
  for (int y = 18; y >= 10; --y) {
    tower.push_back({8, y, H});
    EXPECT_TRUE(stability(tower, 20, 20));
  }
}

TEST(Stability, AgreesWithOracleOnAllTwoBlockLayouts) {
  const auto layouts = oracle::all_two_block_layouts(12);
  ASSERT_GT(layouts.size(), 30000u);
  std::size_t stable = 0;
  for (const auto& l : layouts) {
    const bool got = stability(l, 12, 12);
    ASSERT_EQ(got, oracle::stable(l, 12))
        << l[0].x << "," << l[0].y << " / " << l[1].x << "," << l[1].y;
    stable += got;
  }
  EXPECT_GT(stable, 0u);
}

TEST(Stability, AgreesWithOracleOnDroppedThreeBlockTowers) {
  const auto towers = oracle::dropped_towers(12, 3);
  ASSERT_GT(towers.size(), 5000u);
  std::size_t stable = 0;
  for (const auto& t : towers) {
    const bool got = stability(t, 12, 12);
    ASSERT_EQ(got, oracle::stable(t, 12));
    stable += got;
  }
  EXPECT_GT(stable, 0u);
  EXPECT_LT(stable, towers.size());
}

TEST(Scene, ResetSpawnsAtTop) {
  auto t = target_of({{0, 19, H}, {0, 14, V}});
  Rng rng(3);
  std::set<int> columns;
  for (int i = 0; i < 10000; ++i) {
    const StackScene s = stack_reset(20, 20, t, rng);
    ASSERT_TRUE(s.active);
    EXPECT_EQ(s.active->y, 0);
    EXPECT_EQ(s.active->orientation, H);
    EXPECT_GE(s.active->x, 0);
    EXPECT_LE(s.active->x, 15);
    EXPECT_EQ(s.blocks_spawned, 1u);
    EXPECT_TRUE(s.placed.empty());
    columns.insert(s.active->x);
  }
  EXPECT_EQ(columns.size(), 16u);
  Rng a(7), b(7);
  EXPECT_EQ(stack_reset(20, 20, t, a).active, stack_reset(20, 20, t, b).active);
}

TEST(Scene, ResetRejectsMismatchedTarget) {
  Rng rng(3);
  EXPECT_THROW(stack_reset(20, 20, target_of({{0, 11, H}}, 12, 12), rng), InvalidConfig);
  EXPECT_THROW(stack_reset(20, 20, nullptr, rng), InvalidConfig);
}

TEST(Scene, SidewaysContactIsCollision) {
  auto t = target_of({{0, 19, H}});
  Rng rng(3);
  StackScene s = stack_reset(20, 20, t, rng);
  s.active->x = 0;
  EXPECT_EQ(stack_step(s, StackAction::left, rng), StackOutcome::collision);
  EXPECT_THROW(stack_step(s, StackAction::down, rng), ContractViolation);

  s = stack_reset(20, 20, t, rng);
  s.active->x = 15;
  EXPECT_EQ(stack_step(s, StackAction::right, rng), StackOutcome::collision);
}

TEST(Scene, CollisionWithStructure) {
  auto t = target_of({{0, 19, H}, {0, 14, V}});
  Rng rng(3);
  StackScene s = stack_reset(20, 20, t, rng);
  s.active->x = 0;
  EXPECT_EQ(build(s, rng), StackOutcome::finished);
  // Place the first block, then slide the vertical one into it from the side.
  s = stack_reset(20, 20, t, rng);
  s.active->x = 6;
  while (s.placed.empty()) stack_step(s, StackAction::down, rng);
  s.active = Block{11, 15, V};
  EXPECT_EQ(stack_step(s, StackAction::left, rng), StackOutcome::collision);
}

TEST(Scene, DescendAndPlace) {
  auto t = target_of({{4, 19, H}, {4, 18, H}});
  Rng rng(3);
  StackScene s = stack_reset(20, 20, t, rng);
  s.active->x = 4;
  int prev_y = 0;
  for (int i = 0; i < 19; ++i) {
    EXPECT_EQ(stack_step(s, StackAction::down, rng), StackOutcome::continuing);
    EXPECT_GE(s.active->y, prev_y);
    prev_y = s.active->y;
  }
  EXPECT_EQ(s.active->y, 19);
  EXPECT_EQ(s.occupancy.count(), 0u);
  EXPECT_EQ(stack_step(s, StackAction::down, rng), StackOutcome::continuing);
  EXPECT_EQ(s.placed.size(), 1u);
  EXPECT_EQ(s.occupancy.count(), 5u);
  EXPECT_EQ(s.blocks_spawned, 2u);
  ASSERT_TRUE(s.active);
  EXPECT_EQ(s.active->y, 0);
}

TEST(Scene, OffsetThreeCollapses) {
  auto t = target_of({{4, 19, H}, {4, 18, H}});
  Rng rng(3);
  StackScene s = stack_reset(20, 20, t, rng);
  s.active->x = 4;
  while (s.placed.empty()) stack_step(s, StackAction::down, rng);
  s.active->x = 7;
  while (!s.ended) stack_step(s, StackAction::down, rng);
  EXPECT_EQ(*s.ended, StackOutcome::collapse);
  const std::vector<Block> placed{{4, 19, H}, {7, 18, H}};
  EXPECT_FALSE(oracle::stable(placed, 20));
}

TEST(Scene, RenderAndEncode) {
  auto t = target_of({{2, 19, H}, {2, 14, V}});
  Rng rng(3);
  StackScene s = stack_reset(20, 20, t, rng);
  EXPECT_EQ(render_placed(s).count(), 0u);
  EXPECT_EQ(render(s).count(), 5u);
  StackEncoding e = stack_encode(s, *t);
  EXPECT_EQ(e.obs.size(), 400u);
  EXPECT_EQ(e.goal.size(), 400u);
  for (std::size_t i = 0; i < 400; ++i) {
    EXPECT_EQ(e.goal[i], t->raster.cells[i] ? 1.0 : 0.0);
    EXPECT_EQ(e.obs[i], render(s).cells[i] ? 1.0 : 0.0);
  }
  s.active->x = 2;
  while (s.placed.empty()) stack_step(s, StackAction::down, rng);
  const Raster placed = render_placed(s);
  EXPECT_EQ(placed.count(), 5u);
  for (int x = 2; x < 7; ++x) EXPECT_EQ(placed.at(x, 19), 1);
  EXPECT_EQ(render(s).count(), 10u);
  e = stack_encode(s, *t);
  EXPECT_EQ(e.obs[19 * 20 + 2], 0.5);
  EXPECT_EQ(e.obs[s.active->y * 20 + s.active->x], 1.0);
}

TEST(Scene, MatchTarget) {
  auto t = target_of({{2, 19, H}});
  Raster r = t->raster;
  EXPECT_TRUE(match_target(r, *t));
  r.at(0, 0) = 1;
  EXPECT_FALSE(match_target(r, *t));
  EXPECT_THROW(match_target(Raster(5, 5), *t), ShapeError);
}

TEST(Scene, TerminalExclusivityUnderRandomPolicy) {
  const TargetSet set = make_target_set(3, 1);
  Rng rng(11);
  std::size_t ended = 0;
  for (int ep = 0; ep < 500; ++ep) {
    auto t = std::make_shared<const TargetSpec>(set.targets[ep % set.targets.size()]);
    StackScene s = stack_reset(20, 20, t, rng);
    std::size_t mass = 0;
    for (int step = 0; step < 2000 && !s.ended; ++step) {
      const auto a = static_cast<StackAction>(rng.uniform_index(3));
      const auto before_y = s.active->y;
      const auto out = stack_step(s, a, rng);
      if (s.placed.size() * 5 != mass) {
        EXPECT_EQ(s.occupancy.count(), mass + 5);
        mass = s.occupancy.count();
      } else if (out == StackOutcome::continuing) {
        EXPECT_GE(s.active->y, before_y);
      }
      EXPECT_EQ(out != StackOutcome::continuing, s.ended.has_value());
    }
    ASSERT_TRUE(s.ended);
    ++ended;
  }
  EXPECT_EQ(ended, 500u);
}

TEST(Env, ScriptedBuilderEarnsTaskReward) {
  const TargetSet set = make_target_set(2, 0);
  StackingEnv env(20, 20, set.targets);
  Rng rng(2);
  for (std::size_t k = 0; k < set.targets.size(); ++k) {
    env.reset_to(k, rng);
    EXPECT_EQ(env.goal_id(), k);
    StepResult r;
    double total = 0.0;
    std::size_t steps = 0;
    while (!r.done) {
      r = env.step(static_cast<std::size_t>(scripted_action(env.scene())), rng);
      total += r.reward;
      ++steps;
    }
    EXPECT_EQ(r.cause, TerminalCause::finished);
    EXPECT_EQ(total, 1.0);
    EpisodeRecord rec;
    rec.cause = r.cause;
    rec.steps = steps;
    env.finalize_record(rec);
    EXPECT_TRUE(rec.success);
    EXPECT_EQ(rec.overlap, 1.0);
  }
}

TEST(Env, WrongBuildFinishesWithoutReward) {
  auto t = target_of({{2, 19, H}});
  StackingEnv env(20, 20, {*t});
  Rng rng(2);
  env.reset(rng);
  StepResult r;
  // Drop wherever it spawned unless that happens to be the target column.
  if (env.scene().active->x == 2) r = env.step(1, rng);
  while (!r.done) r = env.step(2, rng);
  EXPECT_EQ(r.cause, TerminalCause::finished);
  EXPECT_EQ(r.reward, 0.0);
}

TEST(Env, ShapedRewardsAreTriValued) {
  const TargetSet set = make_target_set(4, 0);
  for (auto shaping : {Shaping::overlap, Shaping::distance}) {
    StackingEnv env(20, 20, set.targets, shaping);
    Rng rng(5);
    for (int ep = 0; ep < 200; ++ep) {
      env.reset(rng);
      StepResult r;
      while (!r.done) {
        r = env.step(rng.uniform_index(3), rng);
        const double shaped = r.reward - r.task_reward;
        EXPECT_TRUE(shaped == -1.0 || shaped == 0.0 || shaped == 1.0);
      }
    }
  }
}

TEST(Env, DistanceShapingRewardsMovingTowardTarget) {
  auto t = target_of({{2, 19, H}});
  StackingEnv env(20, 20, {*t}, Shaping::distance);
  Rng rng(2);
  env.reset(rng);
  while (env.scene().active->x < 10) env.step(1, rng);
  EXPECT_EQ(env.step(0, rng).reward, 1.0);   // left, toward the target
  EXPECT_EQ(env.step(1, rng).reward, -1.0);  // and back
}

TEST(Env, OverlapShapingIgnoresFlight) {
  auto t = target_of({{2, 19, H}, {2, 18, H}});
  StackingEnv env(20, 20, {*t}, Shaping::overlap);
  Rng rng(2);
  env.reset(rng);
  while (env.scene().active->x > 2) EXPECT_EQ(env.step(0, rng).reward, 0.0);
  while (env.scene().active->x < 2) EXPECT_EQ(env.step(1, rng).reward, 0.0);
  StepResult r;
  while (env.scene().placed.empty()) r = env.step(2, rng);
  EXPECT_EQ(r.reward, 1.0);
}

TEST(Env, EncodingsDistinctAcrossTargets) {
  const TargetSet set = make_target_set(4, 0);
  // Scenes along the scripted builds of every target.
  std::vector<StackScene> scenes;
  Rng rng(1);
  for (const auto& t : set.targets) {
    StackScene s = stack_reset(20, 20, std::make_shared<const TargetSpec>(t), rng);
    while (!s.ended) {
      scenes.push_back(s);
      stack_step(s, scripted_action(s), rng);
    }
  }
  std::set<std::vector<double>> seen;
  std::size_t pairs = 0;
  std::set<std::pair<std::vector<std::uint8_t>, std::size_t>> distinct_pairs;
  for (const auto& s : scenes) {
    const Raster full = render(s);
    std::vector<std::uint8_t> key = full.cells;
    for (std::size_t i = 0; i < key.size(); ++i) key[i] += s.occupancy.cells[i];
    for (const auto& t : set.targets) {
      if (!distinct_pairs.insert({key, t.id}).second) continue;
      const StackEncoding e = stack_encode(s, t);
      std::vector<double> both = e.obs;
      both.insert(both.end(), e.goal.begin(), e.goal.end());
      EXPECT_TRUE(seen.insert(both).second);
      ++pairs;
    }
  }
  EXPECT_GT(pairs, 1000u);
}
