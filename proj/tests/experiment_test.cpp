#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "gdqn/checkpoint.hpp"
#include "gdqn/error.hpp"
#include "gdqn/experiment.hpp"
#include "gdqn/grid_world.hpp"
#include "gdqn/stacking.hpp"

using namespace gdqn;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_grid() {
  ExperimentConfig c = ExperimentConfig::defaults(EnvKind::grid, 4);
  c.epochs = 3;
  c.train_epoch_steps = 200;
  c.test_epoch_steps = 50;
  c.anneal_epochs = 2;
  c.buffer_capacity = 400;
  c.seed = 12;
  return c;
}

ExperimentConfig tiny_stack() {
  ExperimentConfig c = ExperimentConfig::defaults(EnvKind::stack, 5, 2);
  c.epochs = 2;
  c.train_epoch_steps = 150;
  c.test_epoch_steps = 100;
  c.anneal_epochs = 1;
  c.buffer_capacity = 150;
  c.seed = 3;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

EpisodeRecord rec(TerminalCause cause, bool success, double overlap = 0.0) {
  EpisodeRecord r;
  r.cause = cause;
  r.success = success;
  r.overlap = overlap;
  r.finished = cause == TerminalCause::finished;
  return r;
}

}  // namespace

TEST(Config, ProtocolDefaults) {
  const auto g5 = ExperimentConfig::defaults(EnvKind::grid, 5);
  EXPECT_EQ(g5.train_epoch_steps, 1000u);
  EXPECT_EQ(g5.test_epoch_steps, 100u);
  EXPECT_EQ(g5.buffer_capacity, 20000u);
  EXPECT_EQ(g5.epochs, 100u);
  const auto g7 = ExperimentConfig::defaults(EnvKind::grid, 7);
  EXPECT_EQ(g7.train_epoch_steps, 3000u);
  EXPECT_EQ(g7.buffer_capacity, 60000u);
  const auto s = ExperimentConfig::defaults(EnvKind::stack, 5, 4);
  EXPECT_EQ(s.train_epoch_steps, 10000u);
  EXPECT_EQ(s.test_epoch_steps, 1000u);
  EXPECT_EQ(s.buffer_capacity, 200000u);
  EXPECT_EQ(s.agent_config().epsilon.anneal_steps, 200000u);
  EXPECT_EQ(s.layer_dims(), (std::vector<std::size_t>{800, 64, 64, 3}));
  ExperimentConfig dqn = s;
  dqn.goal_conditioned = false;
  EXPECT_EQ(dqn.layer_dims(), (std::vector<std::size_t>{400, 64, 64, 3}));
}

TEST(Config, RejectsShapingOnGrid) {
  ExperimentConfig c = tiny_grid();
  c.shaping = Shaping::overlap;
  EXPECT_THROW(c.validate(), InvalidConfig);
  EXPECT_THROW(run_experiment(c), InvalidConfig);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = tiny_stack();
  c.shaping = Shaping::distance;
  c.metric = DistanceMetric::euclidean;
  c.optimizer.rule = UpdateRule::sgd;
  c.clip_td_error = true;
  c.out_dir = "/tmp/x";
  EXPECT_EQ(config_from_json(to_json(c)), c);
  auto j = to_json(c);
  j["agent"] = "ppo";
  EXPECT_THROW(config_from_json(j), InvalidConfig);
  j = to_json(c);
  j.erase("seed");
  EXPECT_THROW(config_from_json(j), InvalidConfig);
}

TEST(Metrics, SuccessRatio) {
  std::vector<EpisodeRecord> all{rec(TerminalCause::goal_reached, true),
                                 rec(TerminalCause::goal_reached, true)};
  EXPECT_EQ(success_ratio(all), 1.0);
  std::vector<EpisodeRecord> detours{rec(TerminalCause::goal_reached, false),
                                     rec(TerminalCause::goal_reached, false)};
  EXPECT_EQ(success_ratio(detours), 0.0);
  std::vector<EpisodeRecord> mixed{rec(TerminalCause::goal_reached, true),
                                   rec(TerminalCause::step_cap, false),
                                   rec(TerminalCause::truncated, false)};
  EXPECT_EQ(success_ratio(mixed), 0.5);
  EXPECT_THROW(success_ratio({}), UndefinedMetric);
  std::vector<EpisodeRecord> only_truncated{rec(TerminalCause::truncated, false)};
  EXPECT_THROW(success_ratio(only_truncated), UndefinedMetric);
}

TEST(Metrics, StackingMetrics) {
  std::vector<EpisodeRecord> eps{rec(TerminalCause::finished, true, 1.0),
                                 rec(TerminalCause::finished, false, 0.5),
                                 rec(TerminalCause::collision, false, 0.25),
                                 rec(TerminalCause::truncated, false, 0.9)};
  const StackingMetrics m = stacking_metrics(eps);
  EXPECT_EQ(m.episodes, 3u);
  EXPECT_EQ(m.finished, 2u);
  EXPECT_DOUBLE_EQ(m.overlap, 1.75 / 3);
  EXPECT_DOUBLE_EQ(m.overlap_finished, 0.75);
  EXPECT_DOUBLE_EQ(m.success, 1.0 / 3);
  EXPECT_THROW(stacking_metrics({}), UndefinedMetric);
}

TEST(Metrics, ScriptedPoliciesOnStacking) {
  const TargetSet set = make_target_set(2, 0);
  StackingEnv env(20, 20, set.targets);
  Rng env_rng(1), policy_rng(2);

  auto perfect = [](const Environment& e, Rng&) {
    return static_cast<std::size_t>(scripted_action(static_cast<const StackingEnv&>(e).scene()));
  };
  EpochLog log = run_policy_epoch(env, perfect, 3000, env_rng, policy_rng);
  StackingMetrics m = stacking_metrics(log.episodes);
  EXPECT_EQ(m.overlap, 1.0);
  EXPECT_EQ(m.success, 1.0);

  // Moves toward the nearer wall until it hits it.
  auto crash = [](const Environment& e, Rng&) -> std::size_t {
    return static_cast<const StackingEnv&>(e).scene().active->x < 8 ? 0 : 1;
  };
  log = run_policy_epoch(env, crash, 3000, env_rng, policy_rng);
  m = stacking_metrics(log.episodes);
  EXPECT_EQ(m.overlap, 0.0);
  EXPECT_EQ(m.success, 0.0);
  EXPECT_EQ(m.finished, 0u);

  // Builds targets with an even id exactly; for odd ids places the first
  // block correctly and then steers the second into the wall.
  auto half = [](const Environment& e, Rng&) -> std::size_t {
    const auto& s = static_cast<const StackingEnv&>(e).scene();
    if (s.target->id % 2 == 1 && !s.placed.empty()) return 0;
    return static_cast<std::size_t>(scripted_action(s));
  };
  log = run_policy_epoch(env, half, 5000, env_rng, policy_rng);
  m = stacking_metrics(log.episodes);
  double expected_or = 0.0;
  std::size_t even = 0;
  for (const auto& r : log.episodes) {
    if (!r.completed()) continue;
    const TargetSpec& t = set.targets[r.goal_id];
    if (t.id % 2 == 0) {
      ++even;
      expected_or += 1.0;
    } else {
      Raster first(20, 20);
      paint_block(first, t.blocks[0]);
      std::size_t hit = 0;
      for (std::size_t i = 0; i < first.size(); ++i) hit += first.cells[i] && t.raster.cells[i];
      expected_or += static_cast<double>(hit) / static_cast<double>(t.raster.count());
    }
  }
  EXPECT_DOUBLE_EQ(m.success, static_cast<double>(even) / m.episodes);
  EXPECT_NEAR(m.overlap, expected_or / m.episodes, 1e-12);
  EXPECT_NEAR(m.success, 0.5, 0.1);
}

TEST(Run, OneEpochWritesOneTrainAndOneTestEpoch) {
  ExperimentConfig c = tiny_grid();
  c.epochs = 1;
  const fs::path dir = fresh_dir("gdqn_run_one");
  c.out_dir = dir.string();
  const RunReport r = run_experiment(c);
  ASSERT_EQ(r.epochs.size(), 1u);
  std::ifstream in(dir / "log.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# gdqn-log v1");
  std::getline(in, line);  // column names
  std::map<std::string, int> epoch_rows;
  std::map<std::string, std::size_t> steps;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string kind, epoch, mode, episode, nsteps;
    std::getline(ss, kind, ',');
    std::getline(ss, epoch, ',');
    std::getline(ss, mode, ',');
    std::getline(ss, episode, ',');
    std::getline(ss, nsteps, ',');
    if (kind == "epoch") epoch_rows[mode]++;
    if (kind == "episode") steps[mode] += std::stoul(nsteps);
  }
  EXPECT_EQ(epoch_rows["train"], 1);
  EXPECT_EQ(epoch_rows["test"], 1);
  EXPECT_EQ(steps["train"], c.train_epoch_steps);
  EXPECT_EQ(steps["test"], c.test_epoch_steps);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "best.gdqn"));
  EXPECT_TRUE(fs::exists(dir / "best.gdqn.json"));
  fs::remove_all(dir);
}

TEST(Run, DeterministicAndEchoesConfig) {
  const ExperimentConfig c = tiny_grid();
  const RunReport a = run_experiment(c);
  const RunReport b = run_experiment(c);
  EXPECT_TRUE(a.same_results(b));
  EXPECT_EQ(a.config, c);
  ExperimentConfig other = c;
  other.seed = 13;
  EXPECT_FALSE(run_experiment(other).same_results(a));
  for (const auto& e : a.epochs) {
    EXPECT_GE(e.success, 0.0);
    EXPECT_LE(e.success, 1.0);
  }
}

TEST(Run, StackingDeterministicWithShaping) {
  ExperimentConfig c = tiny_stack();
  c.shaping = Shaping::distance;
  const fs::path dir = fresh_dir("gdqn_run_stack");
  c.out_dir = dir.string();
  const RunReport a = run_experiment(c);
  c.out_dir.clear();
  const RunReport b = run_experiment(c);
  EXPECT_EQ(a.epochs, b.epochs);
  EXPECT_EQ(read_target_set((dir / "targets.json").string()), make_target_set(2, 0));
  for (const auto& e : a.epochs) {
    EXPECT_GE(e.overlap, 0.0);
    EXPECT_LE(e.overlap, 1.0);
  }
  fs::remove_all(dir);
}

TEST(Run, UnwritableOutputDirectory) {
  ExperimentConfig c = tiny_grid();
  const fs::path file = fresh_dir("gdqn_not_a_dir");
  std::ofstream(file) << "x";
  c.out_dir = (file / "sub").string();
  EXPECT_THROW(run_experiment(c), IoError);
  fs::remove(file);
}

TEST(Checkpoints, SaveLoadRoundTrip) {
  const ExperimentConfig c = tiny_grid();
  auto env = make_environment(c);
  Rng rng(1);
  const DenseNet net = init_net(c.layer_dims(), rng);
  const fs::path dir = fresh_dir("gdqn_ck");
  fs::create_directories(dir);
  const std::string path = (dir / "net.gdqn").string();
  save_checkpoint(path, net, c);
  const DenseNet back = load_checkpoint(path, c);
  EXPECT_EQ(back, net);
  std::vector<double> obs, goal;
  env->reset(rng);
  env->encode(obs, goal);
  const auto x = encode_input(obs, goal, true);
  EXPECT_EQ(forward(back, x), forward(net, x));

  const LoadedCheckpoint full = load_checkpoint(path);
  EXPECT_EQ(full.config, c);
  EXPECT_EQ(full.net, net);

  ExperimentConfig bigger = c;
  bigger.grid_size = 5;
  EXPECT_THROW(load_checkpoint(path, bigger), InvalidConfig);

  auto bytes = encode_net(net);
  bytes.resize(bytes.size() / 2);
  std::ofstream(path, std::ios::binary | std::ios::trunc)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  EXPECT_THROW(load_checkpoint(path, c), ParseError);
  fs::remove_all(dir);
}

TEST(Evaluate, OracleGridPolicyViaEvaluateEpsilonZero) {
  // A random net is not optimal; evaluate still yields exactly K completed
  // episodes, each capped.
  ExperimentConfig c = tiny_grid();
  auto env = make_environment(c);
  Rng rng(4);
  const DenseNet net = init_net(c.layer_dims(), rng);
  Rng env_rng(1), policy_rng(2);
  const auto records = evaluate(*env, net, true, 0.0, 20, env_rng, policy_rng);
  ASSERT_EQ(records.size(), 20u);
  for (const auto& r : records) {
    EXPECT_TRUE(r.completed());
    EXPECT_LE(r.steps, env->evaluation_step_cap());
  }
}
