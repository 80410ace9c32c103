#pragma once

#include <string>

#include "dynafs/trainer.hpp"

namespace dynafs {

// Everything a CLI run needs, assembled from a flat key=value file plus
// command-line overrides.
struct RunConfig {
  std::string source = "synthetic";  // "synthetic" or "csv"
  SyntheticConfig synth;
  std::string events_path;
  std::string schema_path;
  double tick_hours = 1.0;
  double f_train = 0.7;
  double f_val = 0.15;
  double f_test = 0.15;

  TrainerConfig trainer;
  std::string out_dir = "out";

  // baseline verb
  std::string baseline_method = "permutation";  // permutation | lasso | l1_logistic
  std::string baseline_selector = "topk";       // topk | knapsack
  std::string baseline_predictor = "gbdt";      // gbdt | recurrent | linear | logistic
  int baseline_repeats = 3;

  // sweep verb
  Vec sweep_c_max;

  // viz verb
  int activation_t_max = 40;
  int activation_rollouts = 8;
};

// Parses one key=value line pair into the config. Unknown keys, malformed
// values, and out-of-vocabulary enum strings raise ConfigError.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// '#' starts a comment; blank lines are skipped; every other line must be
// key=value.
RunConfig parse_run_config(const std::string& path);

// Re-applies the single-seed convention: the run seed feeds the generator,
// the splitter, and the trainer.
void seed_run_config(RunConfig& cfg, uint64_t seed);

}  // namespace dynafs
