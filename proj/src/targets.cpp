#include "gdqn/targets.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include "gdqn/error.hpp"

namespace gdqn {
namespace {

constexpr std::size_t kMaxAttemptsPerTarget = 100000;

// Drops a block straight down from the top row. Returns false if it cannot
// even appear at the top.
bool drop(const Raster& occupancy, Block& b) {
  b.y = 0;
  if (!block_fits(occupancy, b)) return false;
  Block next = b;
  ++next.y;
  while (block_fits(occupancy, next)) {
    b = next;
    ++next.y;
  }
  return true;
}

bool replay_builds(const TargetSpec& target, int width, int height) {
  Rng rng(0);
  auto shared = std::make_shared<const TargetSpec>(target);
  StackScene scene = stack_reset(width, height, shared, rng);
  const std::size_t cap = target.n_blocks() * static_cast<std::size_t>(width + height) * 2;
  for (std::size_t i = 0; i < cap && !scene.ended; ++i) {
    stack_step(scene, scripted_action(scene), rng);
  }
  return scene.ended == StackOutcome::finished && match_target(scene.occupancy, target);
}

std::optional<TargetSpec> candidate(std::size_t n_blocks, int width, int height, Rng& rng) {
  TargetSpec t;
  t.raster = Raster(width, height);
  for (std::size_t k = 0; k < n_blocks; ++k) {
    Block b;
    b.orientation = rng.uniform_index(2) == 0 ? Orientation::horizontal : Orientation::vertical;
    b.x = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(width - b.width() + 1)));
    if (!drop(t.raster, b)) return std::nullopt;
    if (b.y < kSpawnClearance) return std::nullopt;
    if (k > 0 && b.bottom() == height - 1) return std::nullopt;  // must sit on the tower
    paint_block(t.raster, b);
    t.blocks.push_back(b);
    t.orientations.push_back(b.orientation);
    if (!stability(t.blocks, width, height)) return std::nullopt;
  }
  return t;
}

}  // namespace

std::size_t default_group_size(std::size_t n_blocks) { return 2 * n_blocks; }

std::vector<TargetSpec> generate_targets(std::size_t n_blocks, int width, int height, Rng& rng,
                                         std::size_t count) {
  if (n_blocks == 0) throw InvalidConfig("targets need at least one block");
  if (width < kBlockLength || height < kBlockLength + kSpawnClearance) {
    throw InvalidConfig("scene too small for stacking targets");
  }
  if (count == 0) count = default_group_size(n_blocks);
  std::vector<TargetSpec> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > kMaxAttemptsPerTarget * count) {
      throw InvalidConfig("could not generate " + std::to_string(count) + " distinct " +
                          std::to_string(n_blocks) + "-block targets");
    }
    auto t = candidate(n_blocks, width, height, rng);
    if (!t) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(),
                                       [&](const TargetSpec& o) { return o.raster == t->raster; });
    if (duplicate || !replay_builds(*t, width, height)) continue;
    t->id = out.size();
    out.push_back(std::move(*t));
  }
  return out;
}

TargetSet make_target_set(std::size_t n_blocks, std::uint64_t seed, int width, int height) {
  Rng rng(derive_seed(seed, "targets"));
  TargetSet set;
  set.width = width;
  set.height = height;
  set.n_blocks = n_blocks;
  set.seed = seed;
  set.targets = generate_targets(n_blocks, width, height, rng);
  return set;
}

nlohmann::json target_set_to_json(const TargetSet& set) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : set.targets) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : t.blocks) {
      blocks.push_back({{"x", b.x}, {"y", b.y}, {"orientation", to_string(b.orientation)}});
    }
    nlohmann::json seq = nlohmann::json::array();
    for (auto o : t.orientations) seq.push_back(to_string(o));
    targets.push_back({{"id", t.id},
                       {"n_blocks", t.n_blocks()},
                       {"orientation_sequence", seq},
                       {"blocks", blocks},
                       {"raster", raster_to_rows(t.raster)}});
  }
  return {{"format", "gdqn-targets"},
          {"version", 1},
          {"width", set.width},
          {"height", set.height},
          {"n_blocks", set.n_blocks},
          {"seed", set.seed},
          {"targets", targets}};
}

TargetSet target_set_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "gdqn-targets") {
      throw InvalidConfig("not a gdqn target file");
    }
    if (j.at("version").get<int>() != 1) throw InvalidConfig("unsupported target file version");
    TargetSet set;
    set.width = j.at("width").get<int>();
    set.height = j.at("height").get<int>();
    set.n_blocks = j.at("n_blocks").get<std::size_t>();
    set.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& jt : j.at("targets")) {
      TargetSpec t;
      t.id = jt.at("id").get<std::size_t>();
      for (const auto& o : jt.at("orientation_sequence")) {
        t.orientations.push_back(orientation_from_string(o.get<std::string>()));
      }
      Raster painted(set.width, set.height);
      for (const auto& jb : jt.at("blocks")) {
        Block b{jb.at("x").get<int>(), jb.at("y").get<int>(),
                orientation_from_string(jb.at("orientation").get<std::string>())};
        if (!paint_block(painted, b)) {
          throw InvalidConfig("target " + std::to_string(t.id) + " has an invalid block");
        }
        t.blocks.push_back(b);
      }
      t.raster = raster_from_rows(jt.at("raster").get<std::vector<std::string>>());
      if (t.raster.width != set.width || t.raster.height != set.height) {
        throw InvalidConfig("target " + std::to_string(t.id) + " raster has wrong dimensions");
      }
      if (t.raster != painted) {
        throw InvalidConfig("target " + std::to_string(t.id) + " raster disagrees with its blocks");
      }
      if (t.blocks.size() != t.orientations.size() || t.blocks.size() != set.n_blocks) {
        throw InvalidConfig("target " + std::to_string(t.id) + " block count mismatch");
      }
      for (std::size_t k = 0; k < t.blocks.size(); ++k) {
        if (t.blocks[k].orientation != t.orientations[k]) {
          throw InvalidConfig("target " + std::to_string(t.id) + " orientation sequence mismatch");
        }
      }
      set.targets.push_back(std::move(t));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("malformed target file: ") + e.what());
  }
}

void write_target_set(const std::string& path, const TargetSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << target_set_to_json(set).dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

TargetSet read_target_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig("target file '" + path + "' is not valid JSON: " + e.what());
  }
  return target_set_from_json(j);
}

}  // namespace gdqn
