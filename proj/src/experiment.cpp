#include "gdqn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "gdqn/checkpoint.hpp"
#include "gdqn/error.hpp"
#include "gdqn/grid_world.hpp"
#include "gdqn/stacking.hpp"

namespace gdqn {
namespace {

std::string_view to_string(UpdateRule r) {
  switch (r) {
    case UpdateRule::sgd: return "sgd";
    case UpdateRule::rmsprop: return "rmsprop";
    case UpdateRule::adam: return "adam";
  }
  return "rmsprop";
}

UpdateRule rule_from_string(std::string_view s) {
  if (s == "sgd") return UpdateRule::sgd;
  if (s == "rmsprop") return UpdateRule::rmsprop;
  if (s == "adam") return UpdateRule::adam;
  throw InvalidConfig("unknown optimizer '" + std::string(s) + "'");
}

std::string_view to_string(DistanceMetric m) {
  return m == DistanceMetric::manhattan ? "manhattan" : "euclidean";
}

DistanceMetric metric_from_string(std::string_view s) {
  if (s == "manhattan") return DistanceMetric::manhattan;
  if (s == "euclidean") return DistanceMetric::euclidean;
  throw InvalidConfig("unknown distance metric '" + std::string(s) + "'");
}

std::string_view to_string(Backend b) { return b == Backend::serial ? "serial" : "parallel"; }

Backend backend_from_string(std::string_view s) {
  if (s == "serial") return Backend::serial;
  if (s == "parallel") return Backend::parallel;
  throw InvalidConfig("unknown backend '" + std::string(s) + "'");
}

// Higher success first, then higher overlap.
bool better(const EpochMetrics& a, const EpochMetrics& b) {
  if (!a.defined) return false;
  if (!b.defined) return true;
  if (a.success != b.success) return a.success > b.success;
  return a.overlap > b.overlap;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

std::string_view to_string(EnvKind e) { return e == EnvKind::grid ? "grid" : "stack"; }

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "grid") return EnvKind::grid;
  if (name == "stack") return EnvKind::stack;
  throw InvalidConfig("unknown environment '" + std::string(name) + "' (expected grid or stack)");
}

ExperimentConfig ExperimentConfig::defaults(EnvKind env, int grid_size, std::size_t n_blocks) {
  ExperimentConfig c;
  c.env = env;
  c.grid_size = grid_size;
  c.n_blocks = n_blocks;
  c.anneal_epochs = 20;
  if (env == EnvKind::grid) {
    c.train_epoch_steps = grid_size <= 5 ? 1000 : 3000;
    c.test_epoch_steps = 100;
  } else {
    c.train_epoch_steps = 10000;
    c.test_epoch_steps = 1000;
  }
  c.buffer_capacity = c.anneal_epochs * c.train_epoch_steps;
  return c;
}

AgentConfig ExperimentConfig::agent_config() const {
  AgentConfig a;
  a.gamma = gamma;
  a.batch_size = batch_size;
  a.target_sync_period = target_sync_period;
  a.train_epoch_steps = train_epoch_steps;
  a.test_epoch_steps = test_epoch_steps;
  a.epochs = epochs;
  a.goal_conditioned = goal_conditioned;
  a.shaping = shaping;
  a.test_epsilon = test_epsilon;
  a.epsilon = {1.0, 0.1, static_cast<std::uint64_t>(anneal_epochs * train_epoch_steps)};
  a.replay_capacity = buffer_capacity;
  a.optimizer = optimizer;
  a.loss = {clip_td_error, backend};
  return a;
}

std::vector<std::size_t> ExperimentConfig::layer_dims() const {
  std::size_t cells;
  std::size_t actions;
  if (env == EnvKind::grid) {
    cells = static_cast<std::size_t>(grid_size) * grid_size;
    actions = kGridActionCount;
  } else {
    cells = static_cast<std::size_t>(kDefaultSceneSize) * kDefaultSceneSize;
    actions = kStackActionCount;
  }
  return default_layer_dims(goal_conditioned ? 2 * cells : cells, actions);
}

void ExperimentConfig::validate() const {
  if (env == EnvKind::grid) {
    if (grid_size < 2) throw InvalidConfig("grid size must be at least 2");
    if (shaping != Shaping::none) {
      throw InvalidConfig("reward shaping applies to the stacking environment only");
    }
  } else if (n_blocks == 0) {
    throw InvalidConfig("stacking needs at least one block");
  }
  agent_config().validate();
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"env", to_string(c.env)},
          {"grid_size", c.grid_size},
          {"n_blocks", c.n_blocks},
          {"agent", c.goal_conditioned ? "gdqn" : "dqn"},
          {"shaping", to_string(c.shaping)},
          {"metric", to_string(c.metric)},
          {"epochs", c.epochs},
          {"train_epoch_steps", c.train_epoch_steps},
          {"test_epoch_steps", c.test_epoch_steps},
          {"anneal_epochs", c.anneal_epochs},
          {"buffer_capacity", c.buffer_capacity},
          {"eval_step_cap", c.eval_step_cap},
          {"seed", c.seed},
          {"targets_seed", c.targets_seed},
          {"targets_file", c.targets_file},
          {"out_dir", c.out_dir},
          {"gamma", c.gamma},
          {"batch_size", c.batch_size},
          {"target_sync_period", c.target_sync_period},
          {"test_epsilon", c.test_epsilon},
          {"optimizer",
           {{"rule", to_string(c.optimizer.rule)},
            {"learning_rate", c.optimizer.learning_rate},
            {"decay", c.optimizer.decay},
            {"epsilon", c.optimizer.epsilon}}},
          {"clip_td_error", c.clip_td_error},
          {"backend", to_string(c.backend)}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    c.env = env_kind_from_string(j.at("env").get<std::string>());
    c.grid_size = j.at("grid_size").get<int>();
    c.n_blocks = j.at("n_blocks").get<std::size_t>();
    const auto agent = j.at("agent").get<std::string>();
    if (agent != "gdqn" && agent != "dqn") throw InvalidConfig("unknown agent '" + agent + "'");
    c.goal_conditioned = agent == "gdqn";
    c.shaping = shaping_from_string(j.at("shaping").get<std::string>());
    c.metric = metric_from_string(j.at("metric").get<std::string>());
    c.epochs = j.at("epochs").get<std::size_t>();
    c.train_epoch_steps = j.at("train_epoch_steps").get<std::size_t>();
    c.test_epoch_steps = j.at("test_epoch_steps").get<std::size_t>();
    c.anneal_epochs = j.at("anneal_epochs").get<std::size_t>();
    c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
    c.eval_step_cap = j.at("eval_step_cap").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.targets_seed = j.at("targets_seed").get<std::uint64_t>();
    c.targets_file = j.at("targets_file").get<std::string>();
    c.out_dir = j.at("out_dir").get<std::string>();
    c.gamma = j.at("gamma").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.target_sync_period = j.at("target_sync_period").get<std::size_t>();
    c.test_epsilon = j.at("test_epsilon").get<double>();
    const auto& o = j.at("optimizer");
    c.optimizer.rule = rule_from_string(o.at("rule").get<std::string>());
    c.optimizer.learning_rate = o.at("learning_rate").get<double>();
    c.optimizer.decay = o.at("decay").get<double>();
    c.optimizer.epsilon = o.at("epsilon").get<double>();
    c.clip_td_error = j.at("clip_td_error").get<bool>();
    c.backend = backend_from_string(j.at("backend").get<std::string>());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("malformed experiment config: ") + e.what());
  }
}

TargetSet load_targets(const ExperimentConfig& cfg) {
  if (!cfg.targets_file.empty()) {
    TargetSet set = read_target_set(cfg.targets_file);
    if (set.n_blocks != cfg.n_blocks) {
      throw InvalidConfig("target file holds " + std::to_string(set.n_blocks) +
                          "-block targets, config asks for " + std::to_string(cfg.n_blocks));
    }
    return set;
  }
  return make_target_set(cfg.n_blocks, cfg.targets_seed);
}

std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg) {
  if (cfg.env == EnvKind::grid) {
    return std::make_unique<GridWorld>(cfg.grid_size, cfg.grid_size, cfg.eval_step_cap);
  }
  TargetSet set = load_targets(cfg);
  return std::make_unique<StackingEnv>(
      set.width, set.height, std::move(set.targets), cfg.shaping, cfg.metric,
      cfg.eval_step_cap > 0 ? cfg.eval_step_cap : StackingEnv::kEvaluationStepCap);
}

double success_ratio(std::span<const EpisodeRecord> episodes) {
  std::size_t completed = 0;
  std::size_t hits = 0;
  for (const auto& e : episodes) {
    if (!e.completed()) continue;
    ++completed;
    if (e.success) ++hits;
  }
  if (completed == 0) throw UndefinedMetric("success ratio needs at least one completed episode");
  return static_cast<double>(hits) / static_cast<double>(completed);
}

StackingMetrics stacking_metrics(std::span<const EpisodeRecord> episodes) {
  StackingMetrics m;
  double overlap_sum = 0.0;
  double finished_sum = 0.0;
  std::size_t successes = 0;
  for (const auto& e : episodes) {
    if (!e.completed()) continue;
    ++m.episodes;
    overlap_sum += e.overlap;
    if (e.success) ++successes;
    if (e.finished) {
      ++m.finished;
      finished_sum += e.overlap;
    }
  }
  if (m.episodes == 0) throw UndefinedMetric("stacking metrics need at least one completed episode");
  m.overlap = overlap_sum / static_cast<double>(m.episodes);
  m.success = static_cast<double>(successes) / static_cast<double>(m.episodes);
  m.overlap_finished = m.finished > 0 ? finished_sum / static_cast<double>(m.finished) : 0.0;
  return m;
}

bool RunReport::same_results(const RunReport& o) const {
  return config == o.config && epochs == o.epochs && best_epoch == o.best_epoch &&
         best_success == o.best_success && best_overlap == o.best_overlap &&
         best_overlap_finished == o.best_overlap_finished;
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_episodes", e.train_episodes},
                      {"train_mean_loss", e.train_mean_loss},
                      {"test_episodes", e.test_episodes},
                      {"defined", e.defined},
                      {"success", e.success},
                      {"overlap", e.overlap},
                      {"overlap_finished", e.overlap_finished},
                      {"finished_episodes", e.finished_episodes}});
  }
  return {{"config", to_json(r.config)},
          {"epochs", epochs},
          {"best",
           {{"epoch", r.best_epoch},
            {"success", r.best_success},
            {"overlap", r.best_overlap},
            {"overlap_finished", r.best_overlap_finished}}},
          {"wall_clock_seconds", r.wall_clock_seconds}};
}

void write_csv_header(std::ostream& out) {
  out << "# " << kCsvSchema << '\n'
      << "kind,epoch,mode,episode,steps,terminal_cause,reward,goal_id,success,overlap,"
         "episodes,success_rate,or_all,or_finished,mean_loss\n";
}

void write_csv_rows(std::ostream& out, const EpochLog& log, const EpochMetrics* metrics) {
  const char* mode = log.mode == EpochMode::train ? "train" : "test";
  for (const auto& e : log.episodes) {
    out << "episode," << log.epoch << ',' << mode << ',' << e.index << ',' << e.steps << ','
        << to_string(e.cause) << ',' << fmt(e.reward) << ',' << e.goal_id << ','
        << (e.success ? 1 : 0) << ',' << fmt(e.overlap) << ",,,,,\n";
  }
  std::size_t completed = 0;
  for (const auto& e : log.episodes) completed += e.completed() ? 1 : 0;
  out << "epoch," << log.epoch << ',' << mode << ",," << log.env_steps << ",,,,,," << completed
      << ',';
  if (metrics && metrics->defined) {
    out << fmt(metrics->success) << ',' << fmt(metrics->overlap) << ','
        << fmt(metrics->overlap_finished);
  } else {
    out << ",,";
  }
  out << ',' << fmt(log.mean_loss) << '\n';
}

RunReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const AgentConfig agent_cfg = cfg.agent_config();

  std::unique_ptr<Environment> env = make_environment(cfg);
  Rng init_rng(derive_seed(cfg.seed, "net"));
  AgentState agent = make_agent(*env, agent_cfg, init_rng, derive_seed(cfg.seed, "explore"),
                                derive_seed(cfg.seed, "replay"));
  Rng env_rng(derive_seed(cfg.seed, "env"));

  std::ofstream csv;
  std::filesystem::path dir;
  if (!cfg.out_dir.empty()) {
    dir = cfg.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    csv.open(dir / "log.csv", std::ios::trunc);
    if (ec || !csv) throw IoError("cannot write to output directory '" + cfg.out_dir + "'");
    write_csv_header(csv);
    if (cfg.env == EnvKind::stack) {
      write_json_file(dir / "targets.json", target_set_to_json(load_targets(cfg)));
    }
  }

  RunReport report;
  report.config = cfg;
  std::optional<std::size_t> best;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const EpochLog train = run_epoch(*env, agent, agent_cfg, EpochMode::train, env_rng, epoch);
    const EpochLog test = run_epoch(*env, agent, agent_cfg, EpochMode::test, env_rng, epoch);

    EpochMetrics m;
    m.epoch = epoch;
    m.train_episodes = train.episodes.size();
    m.train_mean_loss = train.mean_loss;
    for (const auto& e : test.episodes) m.test_episodes += e.completed() ? 1 : 0;
    m.defined = m.test_episodes > 0;
    if (m.defined) {
      if (cfg.env == EnvKind::grid) {
        m.success = success_ratio(test.episodes);
      } else {
        const StackingMetrics s = stacking_metrics(test.episodes);
        m.success = s.success;
        m.overlap = s.overlap;
        m.overlap_finished = s.overlap_finished;
        m.finished_episodes = s.finished;
      }
    }
    report.epochs.push_back(m);

    if (!best || better(m, report.epochs[*best])) {
      best = epoch;
      if (!cfg.out_dir.empty()) save_checkpoint((dir / "best.gdqn").string(), agent.online, cfg);
    }
    if (csv.is_open()) {
      write_csv_rows(csv, train, nullptr);
      write_csv_rows(csv, test, &m);
    }
    if (progress) progress(m);
  }

  const EpochMetrics& b = report.epochs[*best];
  report.best_epoch = b.epoch;
  report.best_success = b.success;
  report.best_overlap = b.overlap;
  report.best_overlap_finished = b.overlap_finished;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.out_dir.empty()) write_json_file(dir / "report.json", to_json(report));
  return report;
}

void save_checkpoint(const std::string& path, const DenseNet& net, const ExperimentConfig& cfg) {
  write_net_file(path, net);
  nlohmann::json side = {{"format", "gdqn-checkpoint"},
                         {"version", kCheckpointVersion},
                         {"layer_dims", net.layer_dims},
                         {"config", to_json(cfg)}};
  write_json_file(path + ".json", side);
}

DenseNet load_checkpoint(const std::string& path, const ExperimentConfig& cfg) {
  DenseNet net = read_net_file(path);
  const auto expected = cfg.layer_dims();
  if (net.layer_dims != expected) {
    std::string got, want;
    for (auto d : net.layer_dims) got += std::to_string(d) + " ";
    for (auto d : expected) want += std::to_string(d) + " ";
    throw InvalidConfig("checkpoint layer dims [ " + got + "] do not match config [ " + want + "]");
  }
  return net;
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) throw IoError("cannot open checkpoint sidecar '" + path + ".json'");
  nlohmann::json side;
  try {
    in >> side;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig("checkpoint sidecar is not valid JSON: " + std::string(e.what()));
  }
  if (side.value("format", "") != "gdqn-checkpoint") {
    throw InvalidConfig("'" + path + ".json' is not a checkpoint sidecar");
  }
  ExperimentConfig cfg = config_from_json(side.at("config"));
  DenseNet net = load_checkpoint(path, cfg);
  return {std::move(net), std::move(cfg)};
}

std::vector<EpisodeRecord> evaluate(Environment& env, const DenseNet& net, bool goal_conditioned,
                                    double eps, std::size_t episodes, Rng& env_rng,
                                    Rng& policy_rng) {
  std::vector<EpisodeRecord> out;
  std::vector<double> obs, goal;
  for (std::size_t k = 0; k < episodes; ++k) {
    env.reset(env_rng);
    EpisodeRecord rec;
    rec.index = k;
    rec.goal_id = env.goal_id();
    while (true) {
      env.encode(obs, goal);
      const auto x = encode_input(obs, goal, goal_conditioned);
      const StepResult r = env.step(select_action(net, x, eps, policy_rng), env_rng);
      ++rec.steps;
      rec.reward += r.reward;
      rec.task_reward += r.task_reward;
      if (r.done) {
        rec.cause = r.cause;
        break;
      }
      if (rec.steps >= env.evaluation_step_cap()) {
        rec.cause = TerminalCause::step_cap;
        break;
      }
    }
    env.finalize_record(rec);
    out.push_back(rec);
  }
  return out;
}

}  // namespace gdqn
