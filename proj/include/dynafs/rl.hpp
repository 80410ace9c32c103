#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dynafs/core.hpp"
#include "dynafs/env.hpp"
#include "dynafs/optim.hpp"
#include "dynafs/recurrent.hpp"

namespace dynafs {

struct PpoConfig {
  double gamma = 0.8;
  double lambda = 0.95;
  double clip_eps = 0.2;
  double learning_rate = 1e-3;
  double adam_eps = 1e-5;
  int epochs_per_batch = 5;
  int minibatches = 2;
  double grad_clip = 0.5;
  int hidden = 64;
  // Ticks collected per policy update batch (whole episodes).
  int rollout_ticks = 4096;
  long min_steps = 20000;
  long max_steps = 200000;
  // Fresh-policy per-feature selection probability.
  double init_select_prob = 0.8;
  uint64_t seed = 0;
};

// Recurrent policy over acquisition decisions. Input is the latest
// observation column concatenated with the previous action vector; the head
// emits two logits per feature whose softmax is that feature's keep/fetch
// distribution.
struct ActorNet {
  int n_features = 0;
  LstmCell cell;
  Vec head_w;  // (2*n_features x H) row-major
  Vec head_b;  // 2*n_features, per feature [skip, select]
};

// Recurrent value function over observation columns only.
struct CriticNet {
  int n_features = 0;
  LstmCell cell;
  Vec head_w;  // (1 x H)
  Vec head_b;  // 1
};

ActorNet make_actor(int n_features, int hidden, double init_select_prob, uint64_t seed);
CriticNet make_critic(int n_features, int hidden, uint64_t seed);

struct ActorCursor {
  LstmState st;
};
struct CriticCursor {
  LstmState st;
};

// Per-feature selection probabilities for the next decision.
Vec actor_probs(const ActorNet& net, ActorCursor& cur, const Vec& obs,
                const std::vector<uint8_t>& prev_action);
double critic_value(const CriticNet& net, CriticCursor& cur, const Vec& obs);

// Independent per-feature draws; returns the action and its joint log
// probability.
std::pair<std::vector<uint8_t>, double> sample_actions(const Vec& probs, Rng& rng);
std::vector<uint8_t> deterministic_actions(const Vec& probs);
double joint_log_prob(const Vec& probs, const std::vector<uint8_t>& actions);

// Generalized advantage estimation over flat arrays with terminal flags. The
// value after a terminal step is taken as zero and the accumulator resets.
void gae(const Vec& rewards, const Vec& values, const std::vector<uint8_t>& terminal,
         double gamma, double lambda, Vec& advantages, Vec& returns);

struct RolloutEpisode {
  int episode_index = 0;
  std::vector<Vec> obs;  // observation column seen at each decision, 0..T-1
  std::vector<std::vector<uint8_t>> actions;
  Vec logp;
  Vec values;
  Vec pred_rewards;
  Vec cost_rewards;
  Vec rewards;
  Vec advantages;
  Vec returns;

  int ticks() const { return (int)obs.size(); }
};

struct RolloutBuffer {
  std::vector<RolloutEpisode> episodes;

  int total_ticks() const {
    int n = 0;
    for (const RolloutEpisode& e : episodes) n += e.ticks();
    return n;
  }
};

struct PpoStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double clip_fraction = 0.0;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
};

struct PpoOptimizers {
  AdamOpt actor;
  AdamOpt critic;
};

// Clipped-surrogate update: epochs_per_batch passes, each splitting the
// buffer's episodes (never ticks) into minibatches.
PpoStats ppo_update(const RolloutBuffer& buffer, ActorNet& actor, CriticNet& critic,
                    PpoOptimizers& opt, const PpoConfig& cfg, Rng& rng);

// Minibatch losses with analytic gradients; exposed for gradient checks.
double actor_loss_and_grads(const ActorNet& net,
                            const std::vector<const RolloutEpisode*>& eps, double clip_eps,
                            LstmGrads* cell_g, Vec* head_w_g, Vec* head_b_g,
                            double* clip_fraction);
double critic_loss_and_grads(const CriticNet& net,
                             const std::vector<const RolloutEpisode*>& eps, LstmGrads* cell_g,
                             Vec* head_w_g, Vec* head_b_g);

std::vector<Vec*> actor_params(ActorNet& net);
std::vector<Vec*> critic_params(CriticNet& net);

// Env adapter so rollouts, synthesis, and the activation map share one code
// path.
struct ActorPolicy : Policy {
  const ActorNet* net;
  ActorCursor cur;

  explicit ActorPolicy(const ActorNet* n) : net(n) {}
  void begin_episode() override { cur.st = LstmState(net->cell.n_hidden); }
  Vec action_probs(const Vec& obs, const std::vector<uint8_t>& prev_action) override {
    return actor_probs(*net, cur, obs, prev_action);
  }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<ActorPolicy>(net); }
};

std::string actor_to_json(const ActorNet& net);
ActorNet actor_from_json(const std::string& text);
std::string critic_to_json(const CriticNet& net);
CriticNet critic_from_json(const std::string& text);

}  // namespace dynafs
