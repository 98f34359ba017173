#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdqn/rng.hpp"
#include "gdqn/stacking.hpp"

namespace gdqn {

// Rows at the top of the scene that a target never occupies, so every block
// can spawn and travel sideways to its column.
inline constexpr int kSpawnClearance = kBlockLength;

// 4, 6 and 8 targets for 2, 3 and 4 blocks.
std::size_t default_group_size(std::size_t n_blocks);

// Distinct, connected towers: each block after the first rests on an earlier
// one, every build prefix is stable, and a scripted replay reproduces the
// raster exactly. Deterministic per generator state. `count` 0 selects the
// default group size.
std::vector<TargetSpec> generate_targets(std::size_t n_blocks, int width, int height, Rng& rng,
                                         std::size_t count = 0);

struct TargetSet {
  int width = kDefaultSceneSize;
  int height = kDefaultSceneSize;
  std::size_t n_blocks = 0;
  std::uint64_t seed = 0;
  std::vector<TargetSpec> targets;

  bool operator==(const TargetSet&) const = default;
};

TargetSet make_target_set(std::size_t n_blocks, std::uint64_t seed,
                          int width = kDefaultSceneSize, int height = kDefaultSceneSize);

nlohmann::json target_set_to_json(const TargetSet& set);
// Validates dimensions, block footprints and that the raster equals the union
// of the listed blocks.
TargetSet target_set_from_json(const nlohmann::json& j);

void write_target_set(const std::string& path, const TargetSet& set);
TargetSet read_target_set(const std::string& path);

}  // namespace gdqn
