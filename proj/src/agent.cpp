#include "gdqn/agent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "gdqn/error.hpp"
#include "gdqn/kernels.hpp"

namespace gdqn {

std::string_view to_string(TerminalCause cause) {
  switch (cause) {
    case TerminalCause::goal_reached: return "goal";
    case TerminalCause::collision: return "collision";
    case TerminalCause::collapse: return "collapse";
    case TerminalCause::finished: return "finished";
    case TerminalCause::step_cap: return "cap";
    case TerminalCause::truncated: return "truncated";
  }
  return "truncated";
}

TerminalCause terminal_cause_from_string(std::string_view name) {
  for (auto c : {TerminalCause::goal_reached, TerminalCause::collision, TerminalCause::collapse,
                 TerminalCause::finished, TerminalCause::step_cap, TerminalCause::truncated}) {
    if (to_string(c) == name) return c;
  }
  throw InvalidConfig("unknown terminal cause '" + std::string(name) + "'");
}

bool EpisodeRecord::operator==(const EpisodeRecord& o) const {
  // overlap is NaN for gridworld episodes; compare bit patterns.
  return index == o.index && steps == o.steps && cause == o.cause && reward == o.reward &&
         task_reward == o.task_reward && goal_id == o.goal_id && success == o.success &&
         optimal_steps == o.optimal_steps &&
         std::bit_cast<std::uint64_t>(overlap) == std::bit_cast<std::uint64_t>(o.overlap) &&
         finished == o.finished;
}

double epsilon_at(const EpsilonSchedule& schedule, std::uint64_t step) {
  if (schedule.anneal_steps == 0 || step >= schedule.anneal_steps) return schedule.end;
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.anneal_steps);
  return schedule.start + (schedule.end - schedule.start) * frac;
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidConfig("gamma must lie in [0, 1]");
  if (batch_size == 0 || target_sync_period == 0 || train_epoch_steps == 0 ||
      test_epoch_steps == 0 || epochs == 0 || replay_capacity == 0) {
    throw InvalidConfig("step counts, batch size and capacity must be at least 1");
  }
  if (!(test_epsilon >= 0.0 && test_epsilon <= 1.0)) {
    throw InvalidConfig("test epsilon must lie in [0, 1]");
  }
  if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 &&
        epsilon.end <= epsilon.start)) {
    throw InvalidConfig("epsilon schedule must be non-increasing within [0, 1]");
  }
  if (!(optimizer.learning_rate > 0.0)) throw InvalidConfig("learning rate must be positive");
}

std::vector<double> encode_input(std::span<const double> obs, std::span<const double> goal,
                                 bool goal_conditioned) {
  std::vector<double> x(obs.begin(), obs.end());
  if (goal_conditioned) x.insert(x.end(), goal.begin(), goal.end());
  return x;
}

std::size_t greedy_action(std::span<const double> q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

std::size_t select_action(const DenseNet& net, std::span<const double> input, double eps, Rng& rng) {
  if (input.size() != net.input_size()) {
    throw ShapeError("encoded input has " + std::to_string(input.size()) + " entries, net expects " +
                     std::to_string(net.input_size()));
  }
  if (rng.uniform01() < eps) return static_cast<std::size_t>(rng.uniform_index(net.output_size()));
  const std::vector<double> q = forward(net, input);
  return greedy_action(q);
}

namespace {

std::vector<double> targets_from_next(const DenseNet& target_net, const InputBatch& next,
                                      std::span<const double> rewards,
                                      const std::vector<char>& terminal, double gamma,
                                      Backend backend) {
  std::vector<double> q;
  kernels::batch_forward(target_net, next, backend, q);
  const std::size_t n_out = target_net.output_size();
  std::vector<double> y(next.size);
  for (std::size_t b = 0; b < next.size; ++b) {
    if (terminal[b]) {
      y[b] = rewards[b];
      continue;
    }
    const double* row = q.data() + b * n_out;
    y[b] = rewards[b] + gamma * *std::max_element(row, row + n_out);
  }
  return y;
}

}  // namespace

std::vector<double> td_targets(std::span<const Transition> batch, const DenseNet& target_net,
                               double gamma, bool goal_conditioned, Backend backend) {
  if (batch.empty()) throw PreconditionError("empty batch");
  InputBatch next(batch.size(), target_net.input_size());
  std::vector<double> rewards(batch.size());
  std::vector<char> terminal(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto x = encode_input(batch[b].next_obs, batch[b].goal, goal_conditioned);
    if (x.size() != next.width) throw ShapeError("transition encoding does not match the net");
    std::copy(x.begin(), x.end(), next.row(b).begin());
    rewards[b] = batch[b].reward;
    terminal[b] = batch[b].terminal;
  }
  return targets_from_next(target_net, next, rewards, terminal, gamma, backend);
}

AgentState make_agent(const Environment& env, const AgentConfig& config, Rng& init_rng,
                      std::uint64_t explore_seed, std::uint64_t replay_seed) {
  config.validate();
  const std::size_t input =
      env.observation_size() + (config.goal_conditioned ? env.goal_size() : 0);
  const auto dims = default_layer_dims(input, env.action_count());
  DenseNet online = init_net(dims, init_rng);
  DenseNet target = sync_target(online);
  OptimizerState opt = make_optimizer(online, config.optimizer);
  GradientSet grads = zero_gradients_like(online);
  return AgentState{std::move(online),        std::move(target),  std::move(opt),
                    ReplayBuffer(config.replay_capacity), 0, 0, Rng(explore_seed),
                    Rng(replay_seed),      std::move(grads)};
}

namespace {

// One gradient step on a uniformly sampled minibatch.
double learn_step(AgentState& agent, const AgentConfig& config) {
  const ReplayBuffer& replay = agent.replay;
  const std::size_t n = config.batch_size;
  const std::size_t obs_size = replay.obs_size();
  const std::size_t width = agent.online.input_size();
  InputBatch now(n, width);
  InputBatch next(n, width);
  std::vector<std::size_t> actions(n);
  std::vector<double> rewards(n);
  std::vector<char> terminal(n);
  const auto picks = replay.sample_indices(n, agent.replay_rng);
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t slot = replay.slot_of(picks[b]);
    auto row = now.row(b);
    auto next_row = next.row(b);
    std::copy(replay.obs_slot(slot), replay.obs_slot(slot) + obs_size, row.begin());
    std::copy(replay.next_obs_slot(slot), replay.next_obs_slot(slot) + obs_size, next_row.begin());
    if (config.goal_conditioned) {
      const auto& goal = replay.goal_slot(slot);
      std::copy(goal.begin(), goal.end(), row.begin() + obs_size);
      std::copy(goal.begin(), goal.end(), next_row.begin() + obs_size);
    }
    actions[b] = replay.action_slot(slot);
    rewards[b] = replay.reward_slot(slot);
    terminal[b] = replay.terminal_slot(slot);
  }
  const auto y = targets_from_next(agent.target, next, rewards, terminal, config.gamma,
                                   config.loss.backend);
  const double loss = kernels::batch_loss_grad(agent.online, now, actions, y,
                                              config.loss.clip_td_error, config.loss.backend,
                                              agent.grads);
  apply_update(agent.online, agent.grads, agent.optimizer);
  ++agent.updates;
  return loss;
}

struct EpisodeCursor {
  EpisodeRecord record;
  std::size_t next_index = 0;

  void begin(const Environment& env) {
    record = EpisodeRecord{};
    record.index = next_index++;
    record.goal_id = env.goal_id();
  }
};

// Shared loop: `choose(obs, goal)` picks an action, `observe(...)` sees each
// transition.
template <typename Choose, typename Observe>
EpochLog episode_loop(Environment& env, std::size_t steps, bool capped, EpochMode mode,
                      std::size_t epoch_index, Rng& env_rng, Choose&& choose, Observe&& observe) {
  EpochLog log;
  log.epoch = epoch_index;
  log.mode = mode;
  env.reset(env_rng);
  EpisodeCursor cursor;
  cursor.begin(env);
  std::vector<double> obs, goal, next_obs, next_goal;
  env.encode(obs, goal);
  const std::size_t cap = env.evaluation_step_cap();

  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t action = choose(obs, goal);
    ++log.decisions;
    const StepResult r = env.step(action, env_rng);
    ++log.env_steps;
    EpisodeRecord& rec = cursor.record;
    ++rec.steps;
    rec.reward += r.reward;
    rec.task_reward += r.task_reward;
    env.encode(next_obs, next_goal);
    observe(obs, goal, action, r, next_obs);

    bool done = r.done;
    if (done) {
      rec.cause = r.cause;
    } else if (capped && rec.steps >= cap) {
      done = true;
      rec.cause = TerminalCause::step_cap;
    }
    if (done) {
      env.finalize_record(rec);
      log.episodes.push_back(rec);
      env.reset(env_rng);
      cursor.begin(env);
      env.encode(obs, goal);
    } else {
      std::swap(obs, next_obs);
      std::swap(goal, next_goal);
    }
  }
  if (cursor.record.steps > 0) {
    cursor.record.cause = TerminalCause::truncated;
    env.finalize_record(cursor.record);
    log.episodes.push_back(cursor.record);
  }
  return log;
}

}  // namespace

EpochLog run_epoch(Environment& env, AgentState& agent, const AgentConfig& config,
                   EpochMode mode, Rng& env_rng, std::size_t epoch_index) {
  config.validate();
  const bool train = mode == EpochMode::train;
  const std::size_t steps = train ? config.train_epoch_steps : config.test_epoch_steps;
  double loss_sum = 0.0;
  std::size_t updates = 0;

  auto choose = [&](const std::vector<double>& obs, const std::vector<double>& goal) {
    const double eps = train ? epsilon_at(config.epsilon, agent.train_steps) : config.test_epsilon;
    const auto x = encode_input(obs, goal, config.goal_conditioned);
    return select_action(agent.online, x, eps, agent.explore_rng);
  };
  auto observe = [&](const std::vector<double>& obs, const std::vector<double>& goal,
                     std::size_t action, const StepResult& r, const std::vector<double>& next_obs) {
    if (!train) return;
    Transition tr;
    tr.obs = obs;
    if (config.goal_conditioned) tr.goal = goal;
    tr.action = action;
    tr.reward = r.reward;
    tr.next_obs = next_obs;
    tr.terminal = r.done;
    agent.replay.push(tr);
    if (agent.replay.size() >= config.batch_size) {
      loss_sum += learn_step(agent, config);
      ++updates;
    }
    ++agent.train_steps;
    if (agent.train_steps % config.target_sync_period == 0) {
      agent.target = sync_target(agent.online);
    }
  };

  EpochLog log = episode_loop(env, steps, !train, mode, epoch_index, env_rng, choose, observe);
  log.updates = updates;
  log.mean_loss = updates > 0 ? loss_sum / static_cast<double>(updates) : 0.0;
  return log;
}

EpochLog run_policy_epoch(Environment& env, const Policy& policy, std::size_t steps,
                          Rng& env_rng, Rng& policy_rng, std::size_t epoch_index) {
  auto choose = [&](const std::vector<double>&, const std::vector<double>&) {
    return policy(env, policy_rng);
  };
  auto observe = [](const auto&...) {};
  return episode_loop(env, steps, true, EpochMode::test, epoch_index, env_rng, choose, observe);
}

}  // namespace gdqn
