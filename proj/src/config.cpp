#include "dynafs/config.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace dynafs {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

long to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return (uint64_t)x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an unsigned integer: '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

Vec to_real_list(const std::string& key, const std::string& v) {
  Vec out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_real(key, item));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string v = trim(raw_value);
  if (key.empty()) throw ConfigError("config: empty key");

  if (key == "data.source") {
    if (v != "synthetic" && v != "csv")
      throw ConfigError("config key 'data.source': expected synthetic or csv, got '" + v + "'");
    cfg.source = v;
  } else if (key == "data.events") {
    cfg.events_path = v;
  } else if (key == "data.schema") {
    cfg.schema_path = v;
  } else if (key == "data.tick_hours") {
    cfg.tick_hours = to_real(key, v);
  } else if (key == "split.train") {
    cfg.f_train = to_real(key, v);
  } else if (key == "split.val") {
    cfg.f_val = to_real(key, v);
  } else if (key == "split.test") {
    cfg.f_test = to_real(key, v);
  } else if (key == "synth.n_subjects") {
    cfg.synth.n_subjects = (int)to_int(key, v);
  } else if (key == "synth.n_features") {
    cfg.synth.n_features = (int)to_int(key, v);
  } else if (key == "synth.n_informative") {
    cfg.synth.n_informative = (int)to_int(key, v);
  } else if (key == "synth.n_static") {
    cfg.synth.n_static = (int)to_int(key, v);
  } else if (key == "synth.tick_min") {
    cfg.synth.tick_min = (int)to_int(key, v);
  } else if (key == "synth.tick_max") {
    cfg.synth.tick_max = (int)to_int(key, v);
  } else if (key == "synth.ar_coeff") {
    cfg.synth.ar_coeff = to_real(key, v);
  } else if (key == "synth.noise_std") {
    cfg.synth.noise_std = to_real(key, v);
  } else if (key == "synth.time_varying") {
    cfg.synth.time_varying = to_bool(key, v);
  } else if (key == "task") {
    if (v == "regression") {
      cfg.trainer.task = Task::Regression;
      cfg.synth.task = Task::Regression;
    } else if (v == "classification") {
      cfg.trainer.task = Task::Classification;
      cfg.synth.task = Task::Classification;
    } else {
      throw ConfigError("config key 'task': expected regression or classification, got '" + v + "'");
    }
  } else if (key == "predictor") {
    if (v == "gbdt")
      cfg.trainer.predictor = PredictorKind::Gbdt;
    else if (v == "recurrent")
      cfg.trainer.predictor = PredictorKind::Recurrent;
    else
      throw ConfigError("config key 'predictor': expected gbdt or recurrent, got '" + v + "'");
  } else if (key == "cost_mode") {
    if (v == "simple")
      cfg.trainer.cost_mode = CostMode::Simple;
    else if (v == "complex")
      cfg.trainer.cost_mode = CostMode::Complex;
    else
      throw ConfigError("config key 'cost_mode': expected simple or complex, got '" + v + "'");
  } else if (key == "c_max") {
    cfg.trainer.c_max = v == "inf" ? std::numeric_limits<double>::infinity() : to_real(key, v);
  } else if (key == "val_episodes") {
    cfg.trainer.val_episodes = (int)to_int(key, v);
  } else if (key == "seed") {
    seed_run_config(cfg, to_u64(key, v));
  } else if (key == "out_dir") {
    cfg.out_dir = v;
  } else if (key == "gbdt.n_trees") {
    cfg.trainer.gbdt.n_trees = (int)to_int(key, v);
  } else if (key == "gbdt.max_depth") {
    cfg.trainer.gbdt.max_depth = (int)to_int(key, v);
  } else if (key == "gbdt.learning_rate") {
    cfg.trainer.gbdt.learning_rate = to_real(key, v);
  } else if (key == "gbdt.min_samples_leaf") {
    cfg.trainer.gbdt.min_samples_leaf = (int)to_int(key, v);
  } else if (key == "gbdt.ensemble") {
    cfg.trainer.gbdt.ensemble = (int)to_int(key, v);
  } else if (key == "recurrent.hidden") {
    cfg.trainer.recurrent.hidden = (int)to_int(key, v);
  } else if (key == "recurrent.epochs") {
    cfg.trainer.recurrent.epochs = (int)to_int(key, v);
  } else if (key == "recurrent.learning_rate") {
    cfg.trainer.recurrent.learning_rate = to_real(key, v);
  } else if (key == "recurrent.lr_floor") {
    cfg.trainer.recurrent.lr_floor = to_real(key, v);
  } else if (key == "ppo.gamma") {
    cfg.trainer.ppo.gamma = to_real(key, v);
  } else if (key == "ppo.lambda") {
    cfg.trainer.ppo.lambda = to_real(key, v);
  } else if (key == "ppo.clip_eps") {
    cfg.trainer.ppo.clip_eps = to_real(key, v);
  } else if (key == "ppo.learning_rate") {
    cfg.trainer.ppo.learning_rate = to_real(key, v);
  } else if (key == "ppo.adam_eps") {
    cfg.trainer.ppo.adam_eps = to_real(key, v);
  } else if (key == "ppo.epochs_per_batch") {
    cfg.trainer.ppo.epochs_per_batch = (int)to_int(key, v);
  } else if (key == "ppo.minibatches") {
    cfg.trainer.ppo.minibatches = (int)to_int(key, v);
  } else if (key == "ppo.grad_clip") {
    cfg.trainer.ppo.grad_clip = to_real(key, v);
  } else if (key == "ppo.hidden") {
    cfg.trainer.ppo.hidden = (int)to_int(key, v);
  } else if (key == "ppo.rollout_ticks") {
    cfg.trainer.ppo.rollout_ticks = (int)to_int(key, v);
  } else if (key == "ppo.min_steps") {
    cfg.trainer.ppo.min_steps = to_int(key, v);
  } else if (key == "ppo.max_steps") {
    cfg.trainer.ppo.max_steps = to_int(key, v);
  } else if (key == "ppo.init_select_prob") {
    cfg.trainer.ppo.init_select_prob = to_real(key, v);
  } else if (key == "reward.alpha") {
    cfg.trainer.reward.alpha = to_real(key, v);
  } else if (key == "reward.beta") {
    cfg.trainer.reward.beta = to_real(key, v);
  } else if (key == "reward.delta_beta") {
    cfg.trainer.reward.delta_beta = to_real(key, v);
  } else if (key == "reward.c_base") {
    cfg.trainer.reward.c_base = to_real(key, v);
  } else if (key == "reward.l_eps") {
    cfg.trainer.reward.l_eps = to_real(key, v);
  } else if (key == "reward.ema_coeff") {
    cfg.trainer.reward.ema_coeff = to_real(key, v);
  } else if (key == "reward.plateau_threshold") {
    cfg.trainer.reward.plateau_threshold = to_real(key, v);
  } else if (key == "reward.paper_literal_signs") {
    cfg.trainer.reward.paper_literal_signs = to_bool(key, v);
  } else if (key == "env.reveal_current_tick") {
    cfg.trainer.env.reveal_current_tick = to_bool(key, v);
  } else if (key == "flags.no_predictor_update") {
    cfg.trainer.flags.no_predictor_update = to_bool(key, v);
  } else if (key == "flags.no_baseline") {
    cfg.trainer.flags.no_baseline = to_bool(key, v);
  } else if (key == "flags.fixed_beta") {
    cfg.trainer.flags.fixed_beta = to_bool(key, v);
  } else if (key == "flags.no_gate") {
    cfg.trainer.flags.no_gate = to_bool(key, v);
  } else if (key == "flags.no_reward_norm") {
    cfg.trainer.flags.no_reward_norm = to_bool(key, v);
  } else if (key == "baseline.method") {
    if (v != "permutation" && v != "lasso" && v != "l1_logistic")
      throw ConfigError("config key 'baseline.method': unknown method '" + v + "'");
    cfg.baseline_method = v;
  } else if (key == "baseline.selector") {
    if (v != "topk" && v != "knapsack")
      throw ConfigError("config key 'baseline.selector': expected topk or knapsack, got '" + v + "'");
    cfg.baseline_selector = v;
  } else if (key == "baseline.predictor") {
    if (v != "gbdt" && v != "recurrent" && v != "linear" && v != "logistic")
      throw ConfigError("config key 'baseline.predictor': unknown predictor '" + v + "'");
    cfg.baseline_predictor = v;
  } else if (key == "baseline.n_repeats") {
    cfg.baseline_repeats = (int)to_int(key, v);
  } else if (key == "sweep.c_max_values") {
    cfg.sweep_c_max = to_real_list(key, v);
  } else if (key == "activation.t_max") {
    cfg.activation_t_max = (int)to_int(key, v);
  } else if (key == "activation.n_rollouts") {
    cfg.activation_rollouts = (int)to_int(key, v);
  } else {
    throw ConfigError("unknown config key: '" + key + "'");
  }
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    apply_config_entry(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void seed_run_config(RunConfig& cfg, uint64_t seed) {
  cfg.trainer.seed = seed;
  cfg.synth.seed = seed;
}

}  // namespace dynafs
