#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gdqn/environment.hpp"
#include "gdqn/nn.hpp"
#include "gdqn/replay.hpp"
#include "gdqn/rng.hpp"
#include "gdqn/shaping.hpp"

namespace gdqn {

// Linear from `start` to `end` over `anneal_steps`, then constant.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  std::uint64_t anneal_steps = 20000;
};

double epsilon_at(const EpsilonSchedule& schedule, std::uint64_t step);

enum class EpochMode { train, test };

struct AgentConfig {
  double gamma = 0.95;
  std::size_t batch_size = 32;
  std::size_t target_sync_period = 1000;
  std::size_t train_epoch_steps = 1000;
  std::size_t test_epoch_steps = 100;
  std::size_t epochs = 100;
  bool goal_conditioned = true;  // GDQN when true, DQN otherwise
  Shaping shaping = Shaping::none;
  double test_epsilon = 0.05;
  EpsilonSchedule epsilon;
  std::size_t replay_capacity = 20000;
  OptimizerConfig optimizer;
  LossOptions loss;

  // Throws InvalidConfig.
  void validate() const;
};

// Network input: the observation, followed by the goal when goal-conditioned.
std::vector<double> encode_input(std::span<const double> obs, std::span<const double> goal,
                                 bool goal_conditioned);

// Index of the largest value, lowest index on ties.
std::size_t greedy_action(std::span<const double> q);

// With probability eps a uniform action, otherwise the greedy action of the
// net on `input` (already encoded).
std::size_t select_action(const DenseNet& net, std::span<const double> input, double eps, Rng& rng);

// r for terminal transitions, r + gamma * max_a' Q_target(s', g, a') otherwise.
std::vector<double> td_targets(std::span<const Transition> batch, const DenseNet& target_net,
                               double gamma, bool goal_conditioned,
                               Backend backend = Backend::parallel);

struct AgentState {
  DenseNet online;
  DenseNet target;
  OptimizerState optimizer;
  ReplayBuffer replay;
  std::uint64_t train_steps = 0;
  std::uint64_t updates = 0;
  Rng explore_rng;
  Rng replay_rng;
  GradientSet grads;  // scratch for the learning step
};

// Fresh agent for an environment: net init from `init_rng`, target synced.
AgentState make_agent(const Environment& env, const AgentConfig& config, Rng& init_rng,
                      std::uint64_t explore_seed, std::uint64_t replay_seed);

struct EpochLog {
  std::size_t epoch = 0;
  EpochMode mode = EpochMode::train;
  std::vector<EpisodeRecord> episodes;
  std::size_t env_steps = 0;
  std::size_t decisions = 0;
  std::size_t updates = 0;
  double mean_loss = 0.0;

  bool operator==(const EpochLog&) const = default;
};

// Runs exactly the configured number of environment steps, one decision per
// step. Episodes reset on termination; the episode running when the budget
// ends is recorded as truncated. Training pushes every transition, performs
// one update per step once the buffer holds a batch and syncs the target net
// periodically. Testing uses the fixed test epsilon, cuts episodes at the
// environment's evaluation cap and never learns.
EpochLog run_epoch(Environment& env, AgentState& agent, const AgentConfig& config,
                   EpochMode mode, Rng& env_rng, std::size_t epoch_index = 0);

// Same episode bookkeeping as a test epoch, driven by an arbitrary policy.
using Policy = std::function<std::size_t(const Environment&, Rng&)>;
EpochLog run_policy_epoch(Environment& env, const Policy& policy, std::size_t steps,
                          Rng& env_rng, Rng& policy_rng, std::size_t epoch_index = 0);

}  // namespace gdqn
