#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gdqn/error.hpp"
#include "gdqn/experiment.hpp"
#include "gdqn/grid_world.hpp"
#include "gdqn/kernels.hpp"
#include "gdqn/stacking.hpp"

using namespace gdqn;

namespace {

struct TrainArgs {
  std::string env = "grid";
  std::string agent = "gdqn";
  std::string shaping = "none";
  std::string metric = "manhattan";
  int grid_size = 5;
  std::size_t blocks = 2;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::uint64_t targets_seed = 0;
  std::string targets_file;
  std::string out;
  std::size_t train_steps = 0;
  std::size_t test_steps = 0;
  std::size_t anneal_epochs = 0;
  std::size_t buffer = 0;
  std::size_t eval_cap = 0;
  std::string optimizer = "rmsprop";
  double lr = 0.0;
  bool clip = false;
  bool serial = false;
  bool quiet = false;
};

int train(const TrainArgs& a) {
  const EnvKind env = env_kind_from_string(a.env);
  ExperimentConfig cfg = ExperimentConfig::defaults(env, a.grid_size, a.blocks);
  cfg.goal_conditioned = a.agent == "gdqn";
  cfg.shaping = shaping_from_string(a.shaping);
  cfg.metric = a.metric == "euclidean" ? DistanceMetric::euclidean : DistanceMetric::manhattan;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.targets_seed = a.targets_seed;
  cfg.targets_file = a.targets_file;
  cfg.out_dir = a.out;
  if (a.train_steps) cfg.train_epoch_steps = a.train_steps;
  if (a.test_steps) cfg.test_epoch_steps = a.test_steps;
  if (a.anneal_epochs) cfg.anneal_epochs = a.anneal_epochs;
  cfg.buffer_capacity = a.buffer ? a.buffer : cfg.anneal_epochs * cfg.train_epoch_steps;
  cfg.eval_step_cap = a.eval_cap;
  if (a.optimizer == "sgd") cfg.optimizer.rule = UpdateRule::sgd;
  else if (a.optimizer == "adam") cfg.optimizer = {UpdateRule::adam, 1e-3, 0.9, 1e-8};
  if (a.lr > 0.0) cfg.optimizer.learning_rate = a.lr;
  cfg.clip_td_error = a.clip;
  cfg.backend = a.serial ? Backend::serial : Backend::parallel;

  const bool stack = env == EnvKind::stack;
  auto progress = [&](const EpochMetrics& m) {
    if (a.quiet) return;
    std::fprintf(stderr, "epoch %3zu  loss %.5f  test episodes %zu", m.epoch, m.train_mean_loss,
                 m.test_episodes);
    if (!m.defined) {
      std::fprintf(stderr, "  (no completed test episode)\n");
    } else if (stack) {
      std::fprintf(stderr, "  OR %.3f  OR(finished) %.3f  SR %.3f\n", m.overlap,
                   m.overlap_finished, m.success);
    } else {
      std::fprintf(stderr, "  success %.3f\n", m.success);
    }
  };
  const RunReport r = run_experiment(cfg, progress);
  if (stack) {
    std::printf("best epoch %zu: OR %.4f  OR(finished) %.4f  SR %.4f  (%.1f s)\n", r.best_epoch,
                r.best_overlap, r.best_overlap_finished, r.best_success, r.wall_clock_seconds);
  } else {
    std::printf("best epoch %zu: success ratio %.4f  (%.1f s)\n", r.best_epoch, r.best_success,
                r.wall_clock_seconds);
  }
  return 0;
}

int eval(const std::string& path, std::size_t episodes, double eps, std::uint64_t seed) {
  LoadedCheckpoint ck = load_checkpoint(path);
  auto env = make_environment(ck.config);
  Rng env_rng(derive_seed(seed, "eval-env"));
  Rng policy_rng(derive_seed(seed, "eval-policy"));
  if (eps < 0.0) eps = ck.config.test_epsilon;
  const auto records = evaluate(*env, ck.net, ck.config.goal_conditioned, eps, episodes, env_rng,
                                policy_rng);
  if (ck.config.env == EnvKind::grid) {
    std::printf("episodes %zu  success ratio %.4f\n", records.size(), success_ratio(records));
  } else {
    const StackingMetrics m = stacking_metrics(records);
    std::printf("episodes %zu  OR %.4f  OR(finished) %.4f  SR %.4f  finished %zu\n", m.episodes,
                m.overlap, m.overlap_finished, m.success, m.finished);
  }
  return 0;
}

int targets(std::size_t blocks, std::uint64_t seed, const std::string& out) {
  const TargetSet set = make_target_set(blocks, seed);
  if (out.empty() || out == "-") {
    std::cout << target_set_to_json(set).dump(2) << '\n';
  } else {
    write_target_set(out, set);
  }
  return 0;
}

void print_grid(const GridState& s) {
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const Cell c{x, y};
      std::putchar(c == s.agent ? 'A' : c == s.goal ? 'G' : '.');
    }
    std::putchar('\n');
  }
}

// Scene on the left, target on the right. '#' placed, '@' falling block.
void print_scene(const StackScene& s) {
  const Raster full = render(s);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      char ch = '.';
      if (s.occupancy.at(x, y)) ch = '#';
      else if (full.at(x, y)) ch = '@';
      std::putchar(ch);
    }
    std::fputs("   ", stdout);
    for (int x = 0; x < s.width; ++x) std::putchar(s.target->raster.at(x, y) ? '#' : '.');
    std::putchar('\n');
  }
}

const char* grid_action_name(std::size_t a) {
  static const char* names[] = {"left", "right", "up", "down"};
  return names[a];
}

const char* stack_action_name(std::size_t a) {
  static const char* names[] = {"left", "right", "down"};
  return names[a];
}

int replay(const std::string& path, std::size_t target, double eps, std::uint64_t seed) {
  LoadedCheckpoint ck = load_checkpoint(path);
  const ExperimentConfig& cfg = ck.config;
  Rng env_rng(derive_seed(seed, "replay-env"));
  Rng policy_rng(derive_seed(seed, "replay-policy"));
  std::vector<double> obs, goal;

  if (cfg.env == EnvKind::grid) {
    GridWorld env(cfg.grid_size, cfg.grid_size, cfg.eval_step_cap);
    const std::size_t cells = static_cast<std::size_t>(cfg.grid_size) * cfg.grid_size;
    if (target >= cells) throw IndexError("goal cell id out of range");
    const Cell g{static_cast<int>(target % cfg.grid_size), static_cast<int>(target / cfg.grid_size)};
    GridState s;
    do {
      env.reset(env_rng);
      s = env.state();
    } while (s.agent == g);
    s.goal = g;
    env.set_state(s);
    std::printf("start (%d,%d) goal (%d,%d) shortest %d\n", s.agent.x, s.agent.y, g.x, g.y,
                shortest_distance(s));
    print_grid(env.state());
    for (std::size_t t = 1; t <= env.evaluation_step_cap(); ++t) {
      env.encode(obs, goal);
      const std::size_t a =
          select_action(ck.net, encode_input(obs, goal, cfg.goal_conditioned), eps, policy_rng);
      const StepResult r = env.step(a, env_rng);
      std::printf("\nstep %zu  %s  reward %g\n", t, grid_action_name(a), r.reward);
      print_grid(env.state());
      if (r.done) {
        std::printf("\ngoal reached in %zu steps\n", t);
        return 0;
      }
    }
    std::printf("\nstep cap reached\n");
    return 0;
  }

  TargetSet set = load_targets(cfg);
  StackingEnv env(set.width, set.height, set.targets, cfg.shaping, cfg.metric,
                  cfg.eval_step_cap > 0 ? cfg.eval_step_cap : StackingEnv::kEvaluationStepCap);
  if (target >= env.targets().size()) throw IndexError("target id out of range");
  env.reset_to(target, env_rng);
  std::printf("target %zu (%zu blocks)\n", target, set.targets[target].n_blocks());
  print_scene(env.scene());
  for (std::size_t t = 1; t <= env.evaluation_step_cap(); ++t) {
    env.encode(obs, goal);
    const std::size_t a =
        select_action(ck.net, encode_input(obs, goal, cfg.goal_conditioned), eps, policy_rng);
    const StepResult r = env.step(a, env_rng);
    std::printf("\nstep %zu  %s  reward %g\n", t, stack_action_name(a), r.reward);
    print_scene(env.scene());
    if (r.done) {
      const bool exact = match_target(env.scene().occupancy, set.targets[target]);
      std::printf("\n%s after %zu steps, overlap %.3f, %s\n",
                  std::string(to_string(r.cause)).c_str(), t,
                  overlap_ratio(env.scene().occupancy, set.targets[target].raster),
                  exact ? "exact match" : "no match");
      return 0;
    }
  }
  std::printf("\nstep cap reached\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-conditioned DQN experiments"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train an agent and log test metrics per epoch");
  tr->add_option("--env", ta.env)->check(CLI::IsMember({"grid", "stack"}));
  tr->add_option("--agent", ta.agent)->check(CLI::IsMember({"dqn", "gdqn"}));
  tr->add_option("--shaping", ta.shaping)->check(CLI::IsMember({"none", "or", "dt"}));
  tr->add_option("--metric", ta.metric, "Distance metric for dt shaping")
      ->check(CLI::IsMember({"manhattan", "euclidean"}));
  tr->add_option("--grid-size", ta.grid_size)->check(CLI::Range(2, 64));
  tr->add_option("--blocks", ta.blocks)->check(CLI::Range(1, 8));
  tr->add_option("--epochs", ta.epochs)->check(CLI::PositiveNumber);
  tr->add_option("--seed", ta.seed);
  tr->add_option("--targets-seed", ta.targets_seed);
  tr->add_option("--targets", ta.targets_file, "Target set JSON (overrides generation)");
  tr->add_option("--out", ta.out, "Output directory");
  tr->add_option("--train-steps", ta.train_steps, "Steps per training epoch");
  tr->add_option("--test-steps", ta.test_steps, "Steps per test epoch");
  tr->add_option("--anneal-epochs", ta.anneal_epochs, "Epochs of epsilon annealing");
  tr->add_option("--buffer", ta.buffer, "Replay capacity");
  tr->add_option("--eval-cap", ta.eval_cap,
                 "Test episode step cap (default: cells of the grid, 400 for stacking)");
  tr->add_option("--optimizer", ta.optimizer)->check(CLI::IsMember({"rmsprop", "adam", "sgd"}));
  tr->add_option("--lr", ta.lr);
  tr->add_flag("--clip-td", ta.clip, "Clip the TD error (Huber loss)");
  tr->add_flag("--serial", ta.serial, "Use the serial reference kernels");
  tr->add_flag("--quiet", ta.quiet);

  std::string ck_path;
  std::size_t episodes = 100;
  double eps = -1.0;
  std::uint64_t seed = 0;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", ck_path)->required();
  ev->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  ev->add_option("--epsilon", eps, "Exploration rate (default: test epsilon of the run)");
  ev->add_option("--seed", seed);

  std::size_t blocks = 2;
  std::string out;
  auto* tg = app.add_subcommand("targets", "Generate a target set as JSON");
  tg->add_option("--blocks", blocks)->check(CLI::Range(1, 8));
  tg->add_option("--seed", seed);
  tg->add_option("--out", out, "Output file (stdout when omitted)");

  std::size_t target = 0;
  double replay_eps = 0.0;
  auto* rp = app.add_subcommand("replay", "Print one greedy episode as text frames");
  rp->add_option("--checkpoint", ck_path)->required();
  rp->add_option("--target", target, "Stacking target id, or goal cell id for gridworld");
  rp->add_option("--epsilon", replay_eps);
  rp->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*tr) return train(ta);
    if (*ev) return eval(ck_path, episodes, eps, seed);
    if (*tg) return targets(blocks, seed, out);
    if (*rp) return replay(ck_path, target, replay_eps, seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
