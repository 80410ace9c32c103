#include "dynafs/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace dynafs {

using nlohmann::json;

Vec predict_episode_states(const PredictorHandle& h, const Mat& s) {
  const int n_ticks = s.cols - 1;
  Vec out((size_t)n_ticks);
  if (h.kind == PredictorKind::Gbdt) {
    for (int t = 0; t < n_ticks; ++t) out[(size_t)t] = h.gbdt.predict(s.col_ptr(t + 1));
  } else {
    PredictorCursor cur;
    for (int t = 0; t < n_ticks; ++t) out[(size_t)t] = predictor_step(h.recurrent, cur, s.col(t + 1));
  }
  return out;
}

Vec predict_episode_full(const PredictorHandle& h, const Mat& x) {
  if (h.kind == PredictorKind::Recurrent) return predict_sequence(h.recurrent, x);
  Vec out((size_t)x.cols);
  for (int t = 0; t < x.cols; ++t) out[(size_t)t] = h.gbdt.predict(x.col_ptr(t));
  return out;
}

namespace {

void pool_full_ticks(const std::vector<EpisodeData>& eps, Table& X, Vec& y) {
  const int rows = total_ticks(eps);
  const int n_f = eps.front().x.rows;
  X = Table(rows, n_f);
  y.resize((size_t)rows);
  int r = 0;
  for (const auto& ep : eps)
    for (int t = 0; t < ep.x.cols; ++t, ++r) {
      const double* col = ep.x.col_ptr(t);
      std::copy(col, col + n_f, X.row_ptr(r));
      y[(size_t)r] = ep.y[(size_t)t];
    }
}

// Pooled full-observation predictions across a split.
void full_predictions(const PredictorHandle& h, const std::vector<EpisodeData>& eps, Vec& pred,
                      Vec& truth, std::vector<Vec>* per_episode = nullptr) {
  std::vector<Vec> preds(eps.size());
  parallel_for((int)eps.size(), [&](int i) { preds[(size_t)i] = predict_episode_full(h, eps[(size_t)i].x); });
  pred.clear();
  truth.clear();
  for (size_t i = 0; i < eps.size(); ++i) {
    pred.insert(pred.end(), preds[i].begin(), preds[i].end());
    truth.insert(truth.end(), eps[i].y.begin(), eps[i].y.end());
  }
  if (per_episode) *per_episode = std::move(preds);
}

}  // namespace

PretrainResult pretrain_predictor(const DatasetSplits& splits, const TrainerConfig& cfg) {
  if (splits.train.empty() || splits.val.empty())
    throw DataError("pretraining: train and val splits must be non-empty");
  PretrainResult res;
  res.predictor.kind = cfg.predictor;
  res.predictor.task = cfg.task;

  if (cfg.predictor == PredictorKind::Gbdt) {
    Table X;
    Vec y;
    pool_full_ticks(splits.train, X, y);
    GbdtConfig gc = cfg.gbdt;
    gc.task = cfg.task;
    gc.seed = splitmix64(cfg.seed ^ 0x9bd1f3a2ULL);
    res.predictor.gbdt = fit_gbdt_ensemble(X, y, gc);
  } else {
    RecurrentConfig rc = cfg.recurrent;
    rc.task = cfg.task;
    rc.seed = splitmix64(cfg.seed ^ 0x1c8ef04bULL);
    std::vector<const EpisodeData*> tr, va;
    for (const auto& ep : splits.train) tr.push_back(&ep);
    for (const auto& ep : splits.val) va.push_back(&ep);
    res.predictor.recurrent = fit_recurrent(tr, va, (int)splits.specs.size(), rc);
  }

  std::vector<Vec> train_preds, val_preds;
  Vec pred, truth;
  full_predictions(res.predictor, splits.train, pred, truth, &train_preds);
  res.train_loss = pooled_loss(pred, truth, cfg.task);
  full_predictions(res.predictor, splits.val, pred, truth, &val_preds);
  res.val_loss = pooled_loss(pred, truth, cfg.task);

  if (cfg.task == Task::Regression) {
    res.baseline_train.resize(splits.train.size());
    for (size_t i = 0; i < splits.train.size(); ++i) {
      const Vec& y_ep = splits.train[i].y;
      Vec err(y_ep.size());
      for (size_t t = 0; t < y_ep.size(); ++t) err[t] = std::fabs(train_preds[i][t] - y_ep[t]);
      res.baseline_train[i] = std::move(err);
    }
    res.baseline_val.resize(splits.val.size());
    for (size_t i = 0; i < splits.val.size(); ++i) {
      const Vec& y_ep = splits.val[i].y;
      Vec err(y_ep.size());
      for (size_t t = 0; t < y_ep.size(); ++t) err[t] = std::fabs(val_preds[i][t] - y_ep[t]);
      res.baseline_val[i] = std::move(err);
    }
  }
  return res;
}

namespace {

struct RolloutExtras {
  std::vector<Vec> preds;                    // masked per-tick predictions per episode
  std::vector<std::vector<Vec>> step_costs;  // per episode, per tick, per feature
  double cost_total = 0.0;
  long ticks = 0;
};

void collect_rollout(const std::vector<EpisodeData>& train, const std::vector<FeatureSpec>& specs,
                     const std::vector<int>& chosen, long serial_base, const ActorNet& actor,
                     const CriticNet& critic, const PredictorHandle& pred,
                     const TrainerConfig& cfg, const Rng& root, RolloutBuffer& buffer,
                     RolloutExtras& extras) {
  const int n_ep = (int)chosen.size();
  buffer.episodes.assign((size_t)n_ep, RolloutEpisode{});
  extras.preds.assign((size_t)n_ep, Vec{});
  extras.step_costs.assign((size_t)n_ep, std::vector<Vec>{});
  Vec ep_cost((size_t)n_ep, 0.0);

  parallel_for(n_ep, [&](int e) {
    const EpisodeData& ep = train[(size_t)chosen[(size_t)e]];
    const int n_ticks = ep.x.cols;
    const int n_f = ep.x.rows;
    Rng rng = root.derive(0x10000000ULL + (uint64_t)(serial_base + e));
    AcquisitionEnv env(cfg.env);
    Vec obs = env.reset(ep);
    ActorCursor acur;
    acur.st = LstmState(actor.cell.n_hidden);
    CriticCursor ccur;
    ccur.st = LstmState(critic.cell.n_hidden);
    PredictorCursor pcur;
    std::vector<uint8_t> prev((size_t)n_f, 0), fetched((size_t)n_f, 0);

    RolloutEpisode& out = buffer.episodes[(size_t)e];
    out.episode_index = chosen[(size_t)e];
    std::vector<Vec>& costs_out = extras.step_costs[(size_t)e];
    Vec preds((size_t)n_ticks);
    double cost_sum = 0.0;

    for (int t = 0; t < n_ticks; ++t) {
      const Vec probs = actor_probs(actor, acur, obs, prev);
      auto [act, logp] = sample_actions(probs, rng);
      const double value = critic_value(critic, ccur, obs);
      Vec costs = step_cost_vector(act, fetched, specs, cfg.cost_mode);
      for (int k = 0; k < n_f; ++k)
        if (act[(size_t)k]) fetched[(size_t)k] = 1;
      for (double c : costs) cost_sum += c;

      const Vec next = env.step(act);
      preds[(size_t)t] = pred.kind == PredictorKind::Gbdt
                             ? pred.gbdt.predict(next.data())
                             : predictor_step(pred.recurrent, pcur, next);

      out.obs.push_back(std::move(obs));
      out.actions.push_back(act);
      out.logp.push_back(logp);
      out.values.push_back(value);
      costs_out.push_back(std::move(costs));
      obs = next;
      prev = std::move(act);
    }
    extras.preds[(size_t)e] = std::move(preds);
    ep_cost[(size_t)e] = cost_sum;
  });

  for (int e = 0; e < n_ep; ++e) {
    extras.cost_total += ep_cost[(size_t)e];
    extras.ticks += buffer.episodes[(size_t)e].ticks();
  }
}

double validation_cost(const std::vector<EpisodeData>& val, const std::vector<FeatureSpec>& specs,
                       const ActorNet& actor, const TrainerConfig& cfg) {
  ActorPolicy pol(&actor);
  const auto synth = synthesize_states(val, pol, RolloutMode::Deterministic, 0, cfg.env);
  double total = 0.0;
  long ticks = 0;
  for (const auto& s : synth) {
    total += episode_cost(s.actions, specs, cfg.cost_mode).total;
    ticks += s.actions.n_ticks;
  }
  return ticks > 0 ? total / (double)ticks : 0.0;
}

}  // namespace

std::string batch_log_json(const BatchLog& b) {
  json j;
  j["batch"] = b.batch;
  j["steps"] = b.steps;
  j["mean_reward"] = b.mean_reward;
  j["mean_pred_reward"] = b.mean_pred_reward;
  j["mean_cost_reward"] = b.mean_cost_reward;
  j["batch_cost"] = b.batch_cost;
  j["c_train"] = b.c_train;
  j["c_valid"] = b.c_valid;
  j["gate"] = b.gate;
  j["beta"] = b.beta;
  j["actor_loss"] = b.ppo.actor_loss;
  j["critic_loss"] = b.ppo.critic_loss;
  j["clip_fraction"] = b.ppo.clip_fraction;
  j["actor_grad_norm"] = b.ppo.actor_grad_norm;
  j["critic_grad_norm"] = b.ppo.critic_grad_norm;
  return j.dump();
}

PolicyTrainResult train_policy(const DatasetSplits& splits, const PretrainResult& pre,
                               const TrainerConfig& cfg, std::ostream* diag) {
  if (splits.train.empty() || splits.val.empty())
    throw DataError("policy training: train and val splits must be non-empty");
  if (cfg.c_max <= 0.0) throw ConfigError("policy training: c_max must be positive");
  const int n_f = (int)splits.specs.size();
  if (cfg.task == Task::Regression && !cfg.flags.no_baseline &&
      pre.baseline_train.size() != splits.train.size())
    throw DataError("policy training: baseline loss cache missing");

  Rng root(splitmix64(cfg.seed ^ 0x7e11c0deULL));
  Rng shuffle_rng = root.derive(1);
  Rng update_rng = root.derive(2);

  PolicyTrainResult res;
  res.actor = make_actor(n_f, cfg.ppo.hidden, cfg.ppo.init_select_prob, splitmix64(cfg.seed ^ 0xac0bULL));
  res.critic = make_critic(n_f, cfg.ppo.hidden, splitmix64(cfg.seed ^ 0xc41cULL));
  PpoOptimizers opt;

  std::vector<EpisodeData> val_subset;
  const std::vector<EpisodeData>* val_eval = &splits.val;
  if (cfg.val_episodes > 0 && cfg.val_episodes < (int)splits.val.size()) {
    val_subset.assign(splits.val.begin(), splits.val.begin() + cfg.val_episodes);
    val_eval = &val_subset;
  }

  RewardConfig rcfg = cfg.reward;
  if (cfg.flags.fixed_beta) rcfg.c_base = 0.0;
  double beta = rcfg.beta;
  double c_train = 0.0;
  bool has_c_train = false;
  bool warned_single_class = false;

  std::vector<int> order((size_t)splits.train.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng.shuffle(order);
  size_t order_pos = 0;

  struct EvalPoint {
    long steps;
    double cost;
  };
  std::vector<EvalPoint> window;

  long steps = 0;
  long episode_serial = 0;
  int batch_index = 0;
  while (true) {
    ++batch_index;
    std::vector<int> chosen;
    long batch_ticks = 0;
    while (batch_ticks < cfg.ppo.rollout_ticks) {
      if (order_pos == order.size()) {
        shuffle_rng.shuffle(order);
        order_pos = 0;
      }
      const int idx = order[order_pos++];
      chosen.push_back(idx);
      batch_ticks += splits.train[(size_t)idx].x.cols;
    }

    RolloutBuffer buffer;
    RolloutExtras extras;
    collect_rollout(splits.train, splits.specs, chosen, episode_serial, res.actor, res.critic,
                    pre.predictor, cfg, root, buffer, extras);
    episode_serial += (long)chosen.size();

    const double batch_cost = extras.ticks > 0 ? extras.cost_total / (double)extras.ticks : 0.0;
    c_train = update_c_train(c_train, batch_cost, has_c_train, rcfg);
    has_c_train = true;
    const double gate = cfg.flags.no_gate ? 1.0 : cost_gate(c_train, cfg.c_max, rcfg.alpha);

    // Prediction rewards, pooled over the batch in episode order.
    Vec pred_pool;
    pred_pool.reserve((size_t)extras.ticks);
    if (cfg.task == Task::Regression) {
      for (size_t e = 0; e < buffer.episodes.size(); ++e) {
        const RolloutEpisode& ep = buffer.episodes[e];
        const Vec& y = splits.train[(size_t)ep.episode_index].y;
        for (int t = 0; t < ep.ticks(); ++t) {
          const double l_pred = std::fabs(extras.preds[e][(size_t)t] - y[(size_t)t]);
          pred_pool.push_back(cfg.flags.no_baseline
                                  ? -l_pred
                                  : regression_reward(
                                        pre.baseline_train[(size_t)ep.episode_index][(size_t)t],
                                        l_pred, rcfg));
        }
      }
    } else {
      Vec labels, probs;
      for (size_t e = 0; e < buffer.episodes.size(); ++e) {
        const RolloutEpisode& ep = buffer.episodes[e];
        const Vec& y = splits.train[(size_t)ep.episode_index].y;
        for (int t = 0; t < ep.ticks(); ++t) {
          labels.push_back(y[(size_t)t]);
          probs.push_back(extras.preds[e][(size_t)t]);
        }
      }
      Rng pair_rng = root.derive(0x70000000ULL + (uint64_t)batch_index);
      const std::vector<int> partner = pair_assignments(labels, pair_rng);
      pred_pool.resize(labels.size(), 0.0);
      bool any_pair = false;
      for (size_t i = 0; i < labels.size(); ++i) {
        if (partner[i] >= 0) {
          pred_pool[i] = classification_reward(probs[i], probs[(size_t)partner[i]], labels[i], rcfg);
          any_pair = true;
        }
      }
      if (!any_pair && !warned_single_class) {
        std::fprintf(stderr, "warning: rollout batch holds a single class; prediction rewards are zero\n");
        warned_single_class = true;
      }
    }
    if (!cfg.flags.no_reward_norm) pred_pool = normalize_pred_rewards(pred_pool);

    RewardConfig batch_rcfg = rcfg;
    batch_rcfg.beta = beta;
    double sum_pred_r = 0.0, sum_cost_r = 0.0;
    size_t pool_pos = 0;
    for (size_t e = 0; e < buffer.episodes.size(); ++e) {
      RolloutEpisode& ep = buffer.episodes[e];
      const int n_ticks = ep.ticks();
      ep.pred_rewards.resize((size_t)n_ticks);
      ep.cost_rewards.resize((size_t)n_ticks);
      ep.rewards.resize((size_t)n_ticks);
      for (int t = 0; t < n_ticks; ++t, ++pool_pos) {
        const double pr = pred_pool[pool_pos];
        const double cr =
            cost_reward(ep.actions[(size_t)t], extras.step_costs[e][(size_t)t], gate, batch_rcfg);
        ep.pred_rewards[(size_t)t] = pr;
        ep.cost_rewards[(size_t)t] = cr;
        ep.rewards[(size_t)t] = pr + cr;
        sum_pred_r += pr;
        sum_cost_r += cr;
      }
      if (n_ticks == 0) continue;
      std::vector<uint8_t> terminal((size_t)n_ticks, 0);
      terminal.back() = 1;
      gae(ep.rewards, ep.values, terminal, cfg.ppo.gamma, cfg.ppo.lambda, ep.advantages,
          ep.returns);
    }

    const PpoStats stats = ppo_update(buffer, res.actor, res.critic, opt, cfg.ppo, update_rng);
    steps += extras.ticks;

    const double c_valid = validation_cost(*val_eval, splits.specs, res.actor, cfg);
    window.push_back({steps, c_valid});
    if (window.size() > 3) window.erase(window.begin());
    // Escalation exists to break plateaus on the way down to the budget;
    // once the validation cost fits, the gate alone balances the pressure.
    if (!cfg.flags.fixed_beta && window.size() == 3 && c_valid > cfg.c_max) {
      Vec last3{window[0].cost, window[1].cost, window[2].cost};
      const double span = (double)(window[2].steps - window[0].steps);
      RewardConfig beta_cfg = rcfg;
      beta_cfg.beta = beta;
      const double nb = update_beta(beta, last3, span, beta_cfg);
      if (nb != beta) {
        beta = nb;
        window.clear();
      }
    }

    BatchLog log;
    log.batch = batch_index;
    log.steps = steps;
    log.mean_reward = extras.ticks > 0 ? (sum_pred_r + sum_cost_r) / (double)extras.ticks : 0.0;
    log.mean_pred_reward = extras.ticks > 0 ? sum_pred_r / (double)extras.ticks : 0.0;
    log.mean_cost_reward = extras.ticks > 0 ? sum_cost_r / (double)extras.ticks : 0.0;
    log.batch_cost = batch_cost;
    log.c_train = c_train;
    log.c_valid = c_valid;
    log.gate = gate;
    log.beta = beta;
    log.ppo = stats;
    res.history.push_back(log);
    if (diag) (*diag) << batch_log_json(log) << '\n';

    if (c_valid <= cfg.c_max && steps >= cfg.ppo.min_steps) {
      res.converged = true;
      break;
    }
    if (steps >= cfg.ppo.max_steps) break;
  }

  res.steps = steps;
  res.final_beta = beta;
  return res;
}

PredictorHandle retrain_predictor(const DatasetSplits& splits, const ActorNet& actor,
                                  const PretrainResult& pre, const TrainerConfig& cfg) {
  if (cfg.flags.no_predictor_update) return pre.predictor;

  ActorPolicy pol(&actor);
  const uint64_t synth_seed = splitmix64(cfg.seed ^ 0x8e74a11bULL);
  const auto synth_tr = synthesize_states(splits.train, pol, RolloutMode::Sample, synth_seed, cfg.env);

  PredictorHandle out;
  out.kind = cfg.predictor;
  out.task = cfg.task;
  if (cfg.predictor == PredictorKind::Gbdt) {
    const int rows = total_ticks(splits.train);
    const int n_f = (int)splits.specs.size();
    Table X(rows, n_f);
    Vec y((size_t)rows);
    int r = 0;
    for (size_t i = 0; i < splits.train.size(); ++i) {
      const Mat& s = synth_tr[i].s;
      for (int t = 0; t + 1 < s.cols; ++t, ++r) {
        const double* col = s.col_ptr(t + 1);
        std::copy(col, col + n_f, X.row_ptr(r));
        y[(size_t)r] = splits.train[i].y[(size_t)t];
      }
    }
    GbdtConfig gc = cfg.gbdt;
    gc.task = cfg.task;
    gc.seed = splitmix64(cfg.seed ^ 0x3f91d20cULL);
    out.gbdt = fit_gbdt_ensemble(X, y, gc);
  } else {
    const auto synth_va = synthesize_states(splits.val, pol, RolloutMode::Deterministic, 0, cfg.env);
    auto to_episodes = [](const std::vector<SynthesizedEpisode>& synth,
                          const std::vector<EpisodeData>& src) {
      std::vector<EpisodeData> out_eps(src.size());
      for (size_t i = 0; i < src.size(); ++i) {
        const Mat& s = synth[i].s;
        Mat x(s.rows, s.cols - 1);
        for (int t = 0; t + 1 < s.cols; ++t)
          for (int k = 0; k < s.rows; ++k) x(k, t) = s(k, t + 1);
        out_eps[i] = EpisodeData{src[i].subject_id, std::move(x), src[i].y};
      }
      return out_eps;
    };
    const std::vector<EpisodeData> tr_eps = to_episodes(synth_tr, splits.train);
    const std::vector<EpisodeData> va_eps = to_episodes(synth_va, splits.val);
    std::vector<const EpisodeData*> tr, va;
    for (const auto& ep : tr_eps) tr.push_back(&ep);
    for (const auto& ep : va_eps) va.push_back(&ep);
    RecurrentConfig rc = cfg.recurrent;
    rc.task = cfg.task;
    rc.seed = splitmix64(cfg.seed ^ 0x64b7cc01ULL);
    out.recurrent = fit_recurrent(tr, va, (int)splits.specs.size(), rc);
  }
  return out;
}

SplitEval evaluate_policy(const std::vector<EpisodeData>& episodes,
                          const std::vector<FeatureSpec>& specs, const ActorNet& actor,
                          const PredictorHandle& predictor, const TrainerConfig& cfg,
                          uint64_t seed, std::vector<ActionMatrix>* actions_out) {
  ActorPolicy pol(&actor);
  const auto synth = synthesize_states(episodes, pol, RolloutMode::Deterministic, seed, cfg.env);

  std::vector<Vec> preds(episodes.size());
  parallel_for((int)episodes.size(),
               [&](int i) { preds[(size_t)i] = predict_episode_states(predictor, synth[(size_t)i].s); });

  SplitEval res;
  double cost_total = 0.0;
  long ticks = 0;
  Vec pred_pool, truth_pool;
  for (size_t i = 0; i < episodes.size(); ++i) {
    cost_total += episode_cost(synth[i].actions, specs, cfg.cost_mode).total;
    ticks += synth[i].actions.n_ticks;
    pred_pool.insert(pred_pool.end(), preds[i].begin(), preds[i].end());
    truth_pool.insert(truth_pool.end(), episodes[i].y.begin(), episodes[i].y.end());
    if (actions_out) actions_out->push_back(synth[i].actions);
  }
  res.cost = ticks > 0 ? cost_total / (double)ticks : 0.0;
  res.loss = pooled_loss(pred_pool, truth_pool, cfg.task);
  return res;
}

ActivationMap policy_activation(const std::vector<EpisodeData>& episodes,
                                const std::vector<FeatureSpec>& specs, const ActorNet& actor,
                                const TrainerConfig& cfg, int n_rollouts, int t_max,
                                uint64_t seed) {
  if (n_rollouts < 1) throw ConfigError("activation map: n_rollouts must be positive");
  ActorPolicy pol(&actor);
  std::vector<ActionMatrix> actions;
  actions.reserve(episodes.size() * (size_t)n_rollouts);
  Rng root(seed);
  for (int r = 0; r < n_rollouts; ++r) {
    const auto synth =
        synthesize_states(episodes, pol, RolloutMode::Sample, root.derive((uint64_t)r).next_u64(), cfg.env);
    for (const auto& s : synth) actions.push_back(s.actions);
  }
  std::vector<std::string> names;
  for (const auto& sp : specs) names.push_back(sp.name);
  return activation_map(actions, names, t_max);
}

namespace {

const char* task_name(Task t) { return t == Task::Regression ? "regression" : "classification"; }
const char* predictor_name(PredictorKind k) { return k == PredictorKind::Gbdt ? "gbdt" : "recurrent"; }
const char* cost_mode_name(CostMode m) { return m == CostMode::Simple ? "simple" : "complex"; }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

}  // namespace

PipelineResult run_pipeline(const DatasetSplits& splits, const TrainerConfig& cfg,
                            const std::string& out_dir, std::ostream* diag) {
  PipelineResult res;
  PretrainResult pre;
  try {
    pre = pretrain_predictor(splits, cfg);
  } catch (const std::exception& e) {
    throw DataError(std::string("pipeline stage pretrain: ") + e.what());
  }
  res.pretrain_val_loss = pre.val_loss;
  {
    Vec pred, truth;
    full_predictions(pre.predictor, splits.test, pred, truth);
    res.pretrain_test_loss = pooled_loss(pred, truth, cfg.task);
  }

  PolicyTrainResult pt;
  try {
    pt = train_policy(splits, pre, cfg, diag);
  } catch (const std::exception& e) {
    throw DataError(std::string("pipeline stage policy: ") + e.what());
  }
  res.converged = pt.converged;
  res.steps = pt.steps;
  res.final_beta = pt.final_beta;
  res.history = pt.history;

  PredictorHandle fin;
  try {
    fin = retrain_predictor(splits, pt.actor, pre, cfg);
  } catch (const std::exception& e) {
    throw DataError(std::string("pipeline stage retrain: ") + e.what());
  }

  std::vector<ActionMatrix> test_actions;
  try {
    res.train_eval = evaluate_policy(splits.train, splits.specs, pt.actor, fin, cfg, 0, nullptr);
    res.val_eval = evaluate_policy(splits.val, splits.specs, pt.actor, fin, cfg, 0, nullptr);
    res.test_eval = evaluate_policy(splits.test, splits.specs, pt.actor, fin, cfg, 0, &test_actions);
    int max_ticks = 0;
    for (const auto& ep : splits.test) max_ticks = std::max(max_ticks, ep.x.cols);
    res.activation = policy_activation(splits.test, splits.specs, pt.actor, cfg, 8,
                                       std::min(40, max_ticks), splitmix64(cfg.seed ^ 0xa11ac1ULL));
  } catch (const std::exception& e) {
    throw DataError(std::string("pipeline stage evaluate: ") + e.what());
  }

  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);

    json m;
    m["task"] = task_name(cfg.task);
    m["predictor"] = predictor_name(cfg.predictor);
    m["cost_mode"] = cost_mode_name(cfg.cost_mode);
    m["c_max"] = cfg.c_max;
    m["seed"] = cfg.seed;
    m["converged"] = res.converged;
    m["steps"] = res.steps;
    m["beta_final"] = res.final_beta;
    m["ablations"] = {{"no_predictor_update", cfg.flags.no_predictor_update},
                      {"no_baseline", cfg.flags.no_baseline},
                      {"fixed_beta", cfg.flags.fixed_beta},
                      {"no_gate", cfg.flags.no_gate},
                      {"no_reward_norm", cfg.flags.no_reward_norm}};
    m["pretrain"] = {{"val_loss", res.pretrain_val_loss}, {"test_loss", res.pretrain_test_loss}};
    m["splits"] = {{"train", {{"cost", res.train_eval.cost}, {"loss", res.train_eval.loss}}},
                   {"val", {{"cost", res.val_eval.cost}, {"loss", res.val_eval.loss}}},
                   {"test", {{"cost", res.test_eval.cost}, {"loss", res.test_eval.loss}}}};
    write_text_file(dir / "metrics.json", m.dump(2) + "\n");

    std::ostringstream hist;
    for (const BatchLog& b : res.history) hist << batch_log_json(b) << '\n';
    write_text_file(dir / "history.jsonl", hist.str());

    write_text_file(dir / "actor.json", actor_to_json(pt.actor));
    write_text_file(dir / "critic.json", critic_to_json(pt.critic));
    write_text_file(dir / "predictor_pretrained.json", predictor_to_json(pre.predictor));
    write_text_file(dir / "predictor_final.json", predictor_to_json(fin));
    write_text_file(dir / "activation.csv", activation_csv(res.activation));
  }
  return res;
}

std::string predictor_to_json(const PredictorHandle& h) {
  json j;
  j["kind"] = predictor_name(h.kind);
  j["task"] = task_name(h.task);
  j["model"] = json::parse(h.kind == PredictorKind::Gbdt ? gbdt_to_json(h.gbdt)
                                                         : recurrent_to_json(h.recurrent));
  return j.dump();
}

PredictorHandle predictor_from_json(const std::string& text) {
  const json j = json::parse(text);
  PredictorHandle h;
  h.kind = j.at("kind").get<std::string>() == "gbdt" ? PredictorKind::Gbdt : PredictorKind::Recurrent;
  h.task = j.at("task").get<std::string>() == "regression" ? Task::Regression : Task::Classification;
  if (h.kind == PredictorKind::Gbdt)
    h.gbdt = gbdt_from_json(j.at("model").dump());
  else
    h.recurrent = recurrent_from_json(j.at("model").dump());
  return h;
}

}  // namespace dynafs
