#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dynafs/trainer.hpp"
#include "json.hpp"

using namespace dynafs;

namespace {

DatasetSplits tiny_splits(Task task, uint64_t seed, int n_subjects = 40) {
  SyntheticConfig sc;
  sc.n_subjects = n_subjects;
  sc.n_features = 6;
  sc.n_informative = 2;
  sc.n_static = 1;
  sc.tick_min = 5;
  sc.tick_max = 10;
  sc.task = task;
  sc.seed = seed;
  SyntheticDataset d = generate_synthetic(sc);
  DatasetSplits s = split_dataset(d.data, 0.7, 0.15, 0.15, seed + 1);
  normalize_splits(s);
  return s;
}

TrainerConfig tiny_cfg(Task task) {
  TrainerConfig cfg;
  cfg.task = task;
  cfg.predictor = PredictorKind::Gbdt;
  cfg.c_max = 2.0;
  cfg.gbdt.n_trees = 30;
  cfg.gbdt.max_depth = 3;
  cfg.recurrent.epochs = 2;
  cfg.recurrent.hidden = 8;
  cfg.ppo.hidden = 16;
  cfg.ppo.rollout_ticks = 256;
  cfg.ppo.min_steps = 500;
  cfg.ppo.max_steps = 1200;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("pretraining fits the predictor on fully observed data") {
  DatasetSplits splits = tiny_splits(Task::Regression, 3);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  PretrainResult pre = pretrain_predictor(splits, cfg);
  CHECK(pre.predictor.kind == PredictorKind::Gbdt);
  CHECK(std::isfinite(pre.train_loss));
  CHECK(std::isfinite(pre.val_loss));
  CHECK(pre.train_loss < pre.val_loss * 1.5 + 1.0);
  // regression keeps per-episode baseline errors for the reward
  CHECK(pre.baseline_train.size() == splits.train.size());

  PretrainResult again = pretrain_predictor(splits, cfg);
  CHECK(pre.val_loss == again.val_loss);
}

TEST_CASE("state-column pairing: prediction for tick t sees columns up to t") {
  DatasetSplits splits = tiny_splits(Task::Regression, 4);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  PretrainResult pre = pretrain_predictor(splits, cfg);

  const EpisodeData& ep = splits.test[0];
  const int T = ep.x.cols;
  // synthesized states for an always-fetch run: column j+1 equals x column j
  Mat s(ep.x.rows, T + 1);
  for (int k = 0; k < ep.x.rows; ++k) s(k, 0) = kMaskFill;
  for (int j = 0; j < T; ++j)
    for (int k = 0; k < ep.x.rows; ++k) s(k, j + 1) = ep.x(k, j);

  Vec via_states = predict_episode_states(pre.predictor, s);
  Vec via_full = predict_episode_full(pre.predictor, ep.x);
  REQUIRE((int)via_states.size() == T);
  for (int t = 0; t < T; ++t) CHECK(via_states[(size_t)t] == via_full[(size_t)t]);
}

TEST_CASE("policy training runs, logs batches, and is seed-deterministic") {
  DatasetSplits splits = tiny_splits(Task::Regression, 6);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  PretrainResult pre = pretrain_predictor(splits, cfg);

  PolicyTrainResult a = train_policy(splits, pre, cfg);
  PolicyTrainResult b = train_policy(splits, pre, cfg);
  REQUIRE(!a.history.empty());
  CHECK(a.steps > 0);
  CHECK(a.history.size() == b.history.size());
  CHECK(a.actor.head_w == b.actor.head_w);
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].mean_reward == b.history[i].mean_reward);
    CHECK(a.history[i].c_valid == b.history[i].c_valid);
    CHECK(std::isfinite(a.history[i].mean_reward));
    CHECK(a.history[i].gate > 0.0);
    CHECK(a.history[i].gate < 1.0);
  }
  // batch log serialization is one json object per line
  nlohmann::json j = nlohmann::json::parse(batch_log_json(a.history[0]));
  CHECK(j.contains("beta"));
  CHECK(j.contains("c_valid"));
}

TEST_CASE("frozen-penalty flag pins beta, gate-off flag pins the gate") {
  DatasetSplits splits = tiny_splits(Task::Regression, 7);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  cfg.c_max = 0.5;  // tight budget so escalation would fire
  PretrainResult pre = pretrain_predictor(splits, cfg);

  TrainerConfig frozen = cfg;
  frozen.flags.fixed_beta = true;
  PolicyTrainResult f = train_policy(splits, pre, frozen);
  for (const BatchLog& b : f.history) CHECK(b.beta == cfg.reward.beta);

  TrainerConfig ungated = cfg;
  ungated.flags.no_gate = true;
  PolicyTrainResult g = train_policy(splits, pre, ungated);
  for (const BatchLog& b : g.history) CHECK(b.gate == 1.0);

  PolicyTrainResult plain = train_policy(splits, pre, cfg);
  bool escalated = false;
  for (const BatchLog& b : plain.history) escalated = escalated || b.beta > cfg.reward.beta;
  CHECK(escalated);
}

TEST_CASE("skipping the refit keeps the pretrained predictor") {
  DatasetSplits splits = tiny_splits(Task::Regression, 8);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  PretrainResult pre = pretrain_predictor(splits, cfg);
  PolicyTrainResult pt = train_policy(splits, pre, cfg);

  TrainerConfig skip = cfg;
  skip.flags.no_predictor_update = true;
  PredictorHandle same = retrain_predictor(splits, pt.actor, pre, skip);
  CHECK(predictor_to_json(same) == predictor_to_json(pre.predictor));

  PredictorHandle refit = retrain_predictor(splits, pt.actor, pre, cfg);
  CHECK(predictor_to_json(refit) != predictor_to_json(pre.predictor));
}

TEST_CASE("policy evaluation reports per-tick cost and pooled loss") {
  DatasetSplits splits = tiny_splits(Task::Regression, 9);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  PretrainResult pre = pretrain_predictor(splits, cfg);
  PolicyTrainResult pt = train_policy(splits, pre, cfg);

  std::vector<ActionMatrix> actions;
  SplitEval ev = evaluate_policy(splits.test, splits.specs, pt.actor, pre.predictor, cfg, 0,
                                 &actions);
  CHECK(std::isfinite(ev.loss));
  CHECK(ev.cost >= 0.0);
  REQUIRE(actions.size() == splits.test.size());
  // deterministic: same call, same numbers
  SplitEval ev2 = evaluate_policy(splits.test, splits.specs, pt.actor, pre.predictor, cfg, 0,
                                  nullptr);
  CHECK(ev.cost == ev2.cost);
  CHECK(ev.loss == ev2.loss);
}

TEST_CASE("full pipeline writes the artifact set and parseable metrics") {
  DatasetSplits splits = tiny_splits(Task::Regression, 10, 30);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  const std::string dir = "/tmp/dynafs_test_pipeline";
  std::filesystem::remove_all(dir);
  PipelineResult res = run_pipeline(splits, cfg, dir);

  CHECK(std::isfinite(res.test_eval.loss));
  CHECK((res.steps >= cfg.ppo.min_steps || !res.converged));
  for (const char* name :
       {"metrics.json", "history.jsonl", "actor.json", "critic.json",
        "predictor_pretrained.json", "predictor_final.json", "activation.csv"})
    CHECK(std::filesystem::exists(dir + std::string("/") + name));

  std::ifstream is(dir + std::string("/metrics.json"));
  nlohmann::json m = nlohmann::json::parse(is);
  CHECK(m["task"] == "regression");
  CHECK(m["splits"]["test"]["loss"].get<double>() == res.test_eval.loss);
  CHECK(m["pretrain"]["val_loss"].get<double>() == res.pretrain_val_loss);
  std::filesystem::remove_all(dir);
}

TEST_CASE("classification pipeline trains with margin rewards") {
  DatasetSplits splits = tiny_splits(Task::Classification, 11);
  TrainerConfig cfg = tiny_cfg(Task::Classification);
  PretrainResult pre = pretrain_predictor(splits, cfg);
  CHECK(pre.baseline_train.empty());  // pairing replaces the baseline predictor
  PolicyTrainResult pt = train_policy(splits, pre, cfg);
  CHECK(!pt.history.empty());
  for (const BatchLog& b : pt.history) CHECK(std::isfinite(b.mean_pred_reward));
  SplitEval ev = evaluate_policy(splits.test, splits.specs, pt.actor, pre.predictor, cfg, 0,
                                 nullptr);
  CHECK(ev.loss >= 0.0);
  CHECK(ev.loss <= 1.0);  // one minus ranking quality
}

TEST_CASE("recurrent predictor variant runs end to end") {
  DatasetSplits splits = tiny_splits(Task::Regression, 12, 24);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  cfg.predictor = PredictorKind::Recurrent;
  cfg.ppo.max_steps = 600;
  PretrainResult pre = pretrain_predictor(splits, cfg);
  CHECK(pre.predictor.kind == PredictorKind::Recurrent);
  PolicyTrainResult pt = train_policy(splits, pre, cfg);
  CHECK(!pt.history.empty());
  PredictorHandle refit = retrain_predictor(splits, pt.actor, pre, cfg);
  SplitEval ev = evaluate_policy(splits.test, splits.specs, pt.actor, refit, cfg, 0, nullptr);
  CHECK(std::isfinite(ev.loss));
}

TEST_CASE("predictor handle json round trip") {
  DatasetSplits splits = tiny_splits(Task::Regression, 13, 20);
  TrainerConfig cfg = tiny_cfg(Task::Regression);
  PretrainResult pre = pretrain_predictor(splits, cfg);
  PredictorHandle back = predictor_from_json(predictor_to_json(pre.predictor));
  const EpisodeData& ep = splits.test[0];
  Vec a = predict_episode_full(pre.predictor, ep.x);
  Vec b = predict_episode_full(back, ep.x);
  CHECK(a == b);
}
