#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdqn/agent.hpp"
#include "gdqn/environment.hpp"
#include "gdqn/nn.hpp"
#include "gdqn/shaping.hpp"
#include "gdqn/targets.hpp"

namespace gdqn {

enum class EnvKind { grid, stack };

struct ExperimentConfig {
  EnvKind env = EnvKind::grid;
  int grid_size = 5;
  std::size_t n_blocks = 2;
  bool goal_conditioned = true;  // gdqn; false is plain dqn
  Shaping shaping = Shaping::none;
  DistanceMetric metric = DistanceMetric::manhattan;
  std::size_t epochs = 100;
  std::size_t train_epoch_steps = 1000;
  std::size_t test_epoch_steps = 100;
  std::size_t anneal_epochs = 20;
  std::size_t buffer_capacity = 20000;
  std::size_t eval_step_cap = 0;  // 0: environment default (W*H grid, 400 stacking)
  std::uint64_t seed = 0;
  std::uint64_t targets_seed = 0;
  std::string targets_file;  // overrides generation when set
  std::string out_dir;       // nothing is written when empty

  double gamma = 0.95;
  std::size_t batch_size = 32;
  std::size_t target_sync_period = 1000;
  double test_epsilon = 0.05;
  OptimizerConfig optimizer;
  bool clip_td_error = false;
  Backend backend = Backend::parallel;

  // Protocol defaults: gridworld 1000 (5x5) / 3000 (7x7) training steps and
  // 100 test steps per epoch; stacking 10000 / 1000. Replay capacity equals
  // the annealing length.
  static ExperimentConfig defaults(EnvKind env, int grid_size = 5, std::size_t n_blocks = 2);

  AgentConfig agent_config() const;
  std::vector<std::size_t> layer_dims() const;
  // Throws InvalidConfig.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

std::string_view to_string(EnvKind e);
EnvKind env_kind_from_string(std::string_view name);

TargetSet load_targets(const ExperimentConfig& cfg);
std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t train_episodes = 0;
  double train_mean_loss = 0.0;
  std::size_t test_episodes = 0;  // completed (not truncated)
  bool defined = false;           // false when no test episode completed
  double success = 0.0;           // gridworld success ratio or stacking SR
  double overlap = 0.0;           // stacking OR over all completed episodes
  double overlap_finished = 0.0;  // stacking OR over finished episodes only
  std::size_t finished_episodes = 0;

  bool operator==(const EpochMetrics&) const = default;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;
  double best_success = 0.0;
  double best_overlap = 0.0;
  double best_overlap_finished = 0.0;
  double wall_clock_seconds = 0.0;

  // Everything except wall-clock time.
  bool same_results(const RunReport& other) const;
};

nlohmann::json to_json(const RunReport& report);

// Called after every epoch with the metrics so far.
using ProgressFn = std::function<void(const EpochMetrics&)>;

// Alternates one training and one test epoch `epochs` times. Deterministic for
// a given config. When out_dir is set writes log.csv, report.json, the best
// test-epoch checkpoint (best.gdqn + best.gdqn.json) and, for stacking,
// targets.json.
RunReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// Fraction of completed episodes that reached the goal in exactly the
// shortest number of steps. Throws UndefinedMetric with no completed episode.
double success_ratio(std::span<const EpisodeRecord> episodes);

struct StackingMetrics {
  double overlap = 0.0;           // OR, mean over completed episodes
  double success = 0.0;           // SR
  double overlap_finished = 0.0;  // OR over finished episodes (0 if none)
  std::size_t episodes = 0;
  std::size_t finished = 0;
};
StackingMetrics stacking_metrics(std::span<const EpisodeRecord> episodes);

// Network checkpoint plus a JSON sidecar (`path` + ".json") echoing the
// experiment config.
void save_checkpoint(const std::string& path, const DenseNet& net, const ExperimentConfig& cfg);
// Validates magic, version and that the layer dimensions match `cfg`.
DenseNet load_checkpoint(const std::string& path, const ExperimentConfig& cfg);

struct LoadedCheckpoint {
  DenseNet net;
  ExperimentConfig config;
};
// Reads the config from the sidecar, then the network.
LoadedCheckpoint load_checkpoint(const std::string& path);

// Runs `episodes` complete evaluation episodes with the given exploration rate.
std::vector<EpisodeRecord> evaluate(Environment& env, const DenseNet& net, bool goal_conditioned,
                                    double eps, std::size_t episodes, Rng& env_rng,
                                    Rng& policy_rng);

inline constexpr std::string_view kCsvSchema = "gdqn-log v1";
void write_csv_header(std::ostream& out);
void write_csv_rows(std::ostream& out, const EpochLog& log, const EpochMetrics* metrics);

}  // namespace gdqn
