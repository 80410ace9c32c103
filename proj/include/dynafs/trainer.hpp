#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dynafs/cost.hpp"
#include "dynafs/data.hpp"
#include "dynafs/env.hpp"
#include "dynafs/evaluate.hpp"
#include "dynafs/gbdt.hpp"
#include "dynafs/recurrent.hpp"
#include "dynafs/reward.hpp"
#include "dynafs/rl.hpp"

namespace dynafs {

enum class PredictorKind { Gbdt, Recurrent };

struct PredictorHandle {
  PredictorKind kind = PredictorKind::Gbdt;
  Task task = Task::Regression;
  GbdtEnsemble gbdt;
  RecurrentPredictor recurrent;
};

// Per-tick predictions from a synthesized state matrix (n_features x
// (n_ticks+1), column 0 the constant initial column). The prediction for tick
// t uses the state column formed after the tick-t acquisition.
Vec predict_episode_states(const PredictorHandle& h, const Mat& s);

// Per-tick predictions from fully observed features (the pretraining regime).
Vec predict_episode_full(const PredictorHandle& h, const Mat& x);

struct AblationFlags {
  bool no_predictor_update = false;
  bool no_baseline = false;
  bool fixed_beta = false;
  bool no_gate = false;
  bool no_reward_norm = false;
};

struct TrainerConfig {
  Task task = Task::Regression;
  PredictorKind predictor = PredictorKind::Gbdt;
  CostMode cost_mode = CostMode::Simple;
  double c_max = 1.0;
  GbdtConfig gbdt;
  RecurrentConfig recurrent;
  PpoConfig ppo;
  RewardConfig reward;
  EnvConfig env;
  AblationFlags flags;
  // Validation episodes per cost evaluation during training; 0 means all.
  int val_episodes = 0;
  uint64_t seed = 0;
};

struct PretrainResult {
  PredictorHandle predictor;
  // Per-episode per-tick absolute errors on fully observed inputs for train
  // and val; filled for regression only, where they anchor the prediction
  // reward.
  std::vector<Vec> baseline_train;
  std::vector<Vec> baseline_val;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

PretrainResult pretrain_predictor(const DatasetSplits& splits, const TrainerConfig& cfg);

struct BatchLog {
  int batch = 0;
  long steps = 0;
  double mean_reward = 0.0;
  double mean_pred_reward = 0.0;
  double mean_cost_reward = 0.0;
  double batch_cost = 0.0;  // sampled train cost per tick
  double c_train = 0.0;     // smoothed
  double c_valid = 0.0;     // deterministic validation cost per tick
  double gate = 0.0;
  double beta = 0.0;
  PpoStats ppo;
};

std::string batch_log_json(const BatchLog& b);

struct PolicyTrainResult {
  ActorNet actor;
  CriticNet critic;
  std::vector<BatchLog> history;
  bool converged = false;
  long steps = 0;
  double final_beta = 0.0;
};

// Freezes the predictor, alternates rollout / reward / update batches, and
// stops once the deterministic validation cost is within budget (after
// min_steps) or at max_steps with converged = false.
PolicyTrainResult train_policy(const DatasetSplits& splits, const PretrainResult& pre,
                               const TrainerConfig& cfg, std::ostream* diag = nullptr);

// One fresh predictor fit on policy-synthesized states (sampled actions for
// train, thresholded for val). Returns the pretrained predictor unchanged
// under the no_predictor_update flag.
PredictorHandle retrain_predictor(const DatasetSplits& splits, const ActorNet& actor,
                                  const PretrainResult& pre, const TrainerConfig& cfg);

struct SplitEval {
  double cost = 0.0;  // mean per-tick acquisition cost
  double loss = 0.0;  // MAE or 1 - AUROC on synthesized states
};

// Deterministic policy rollout over a split: achieved per-tick cost plus the
// predictor's loss on the resulting states.
SplitEval evaluate_policy(const std::vector<EpisodeData>& episodes,
                          const std::vector<FeatureSpec>& specs, const ActorNet& actor,
                          const PredictorHandle& predictor, const TrainerConfig& cfg,
                          uint64_t seed, std::vector<ActionMatrix>* actions_out = nullptr);

// Sampled acquisition frequencies per feature and tick.
ActivationMap policy_activation(const std::vector<EpisodeData>& episodes,
                                const std::vector<FeatureSpec>& specs, const ActorNet& actor,
                                const TrainerConfig& cfg, int n_rollouts, int t_max,
                                uint64_t seed);

struct PipelineResult {
  bool converged = false;
  long steps = 0;
  double pretrain_val_loss = 0.0;
  double pretrain_test_loss = 0.0;
  SplitEval train_eval, val_eval, test_eval;
  double final_beta = 0.0;
  ActivationMap activation;
  std::vector<BatchLog> history;
};

// pretrain -> policy optimization -> predictor refresh -> split evaluation.
// out_dir, when non-empty, receives metrics.json, history.jsonl, model files,
// and activation.csv.
PipelineResult run_pipeline(const DatasetSplits& splits, const TrainerConfig& cfg,
                            const std::string& out_dir, std::ostream* diag = nullptr);

std::string predictor_to_json(const PredictorHandle& h);
PredictorHandle predictor_from_json(const std::string& text);

}  // namespace dynafs
