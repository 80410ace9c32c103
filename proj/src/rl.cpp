#include "dynafs/rl.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace dynafs {

namespace {

Vec concat_obs_action(const Vec& obs, const std::vector<uint8_t>& prev_action) {
  Vec x(obs.size() * 2);
  for (size_t k = 0; k < obs.size(); ++k) {
    x[k] = obs[k];
    x[obs.size() + k] = (double)prev_action[k];
  }
  return x;
}

// Head weights start small so the fresh policy sits at its bias.
constexpr double kHeadScale = 0.01;

// Selection probabilities are squashed into [floor, 1 - floor]. Without a
// floor a saturated head stops sampling the opposite action and the policy
// can never unlearn a feature once the budget weight grows (there is no
// entropy bonus to keep exploration alive). The affine map stays smooth, so
// analytic gradients remain exact.
constexpr double kProbFloor = 0.01;

double squash_prob(double z) { return kProbFloor + (1.0 - 2.0 * kProbFloor) * sigmoid(z); }

}  // namespace

ActorNet make_actor(int n_features, int hidden, double init_select_prob, uint64_t seed) {
  if (init_select_prob <= 0.0 || init_select_prob >= 1.0)
    throw ConfigError("init_select_prob must be in (0, 1)");
  ActorNet net;
  net.n_features = n_features;
  Rng rng(splitmix64(seed ^ 0xac7013u));
  net.cell.init(2 * n_features, hidden, rng);
  net.head_w.resize((size_t)2 * n_features * hidden);
  double k = kHeadScale / std::sqrt((double)hidden);
  for (double& v : net.head_w) v = (2.0 * rng.uniform() - 1.0) * k;
  // Invert the squash so the fresh policy sits exactly at init_select_prob.
  double s0 = (init_select_prob - kProbFloor) / (1.0 - 2.0 * kProbFloor);
  s0 = clamp(s0, 1e-9, 1.0 - 1e-9);
  double half_logit = 0.5 * std::log(s0 / (1.0 - s0));
  net.head_b.resize((size_t)2 * n_features);
  for (int f = 0; f < n_features; ++f) {
    net.head_b[2 * f] = -half_logit;
    net.head_b[2 * f + 1] = half_logit;
  }
  return net;
}

CriticNet make_critic(int n_features, int hidden, uint64_t seed) {
  CriticNet net;
  net.n_features = n_features;
  Rng rng(splitmix64(seed ^ 0xc4171cu));
  net.cell.init(n_features, hidden, rng);
  net.head_w.resize(hidden);
  double k = kHeadScale / std::sqrt((double)hidden);
  for (double& v : net.head_w) v = (2.0 * rng.uniform() - 1.0) * k;
  net.head_b.assign(1, 0.0);
  return net;
}

namespace {

// Per-feature selection probabilities from a hidden state.
Vec head_probs(const ActorNet& net, const Vec& h) {
  int H = net.cell.n_hidden;
  Vec p(net.n_features);
  for (int f = 0; f < net.n_features; ++f) {
    const double* w0 = net.head_w.data() + (size_t)(2 * f) * H;
    const double* w1 = net.head_w.data() + (size_t)(2 * f + 1) * H;
    double z0 = net.head_b[2 * f], z1 = net.head_b[2 * f + 1];
    for (int j = 0; j < H; ++j) {
      z0 += w0[j] * h[j];
      z1 += w1[j] * h[j];
    }
    p[f] = squash_prob(z1 - z0);
  }
  return p;
}

}  // namespace

Vec actor_probs(const ActorNet& net, ActorCursor& cur, const Vec& obs,
                const std::vector<uint8_t>& prev_action) {
  if (cur.st.h.empty()) cur.st = LstmState(net.cell.n_hidden);
  lstm_step(net.cell, concat_obs_action(obs, prev_action), cur.st);
  return head_probs(net, cur.st.h);
}

double critic_value(const CriticNet& net, CriticCursor& cur, const Vec& obs) {
  if (cur.st.h.empty()) cur.st = LstmState(net.cell.n_hidden);
  lstm_step(net.cell, obs, cur.st);
  double v = net.head_b[0];
  for (int j = 0; j < net.cell.n_hidden; ++j) v += net.head_w[j] * cur.st.h[j];
  return v;
}

std::pair<std::vector<uint8_t>, double> sample_actions(const Vec& probs, Rng& rng) {
  std::vector<uint8_t> a(probs.size());
  double logp = 0.0;
  for (size_t k = 0; k < probs.size(); ++k) {
    a[k] = rng.bernoulli(probs[k]) ? 1 : 0;
    logp += std::log(std::max(a[k] ? probs[k] : 1.0 - probs[k], 1e-300));
  }
  return {a, logp};
}

std::vector<uint8_t> deterministic_actions(const Vec& probs) {
  std::vector<uint8_t> a(probs.size());
  for (size_t k = 0; k < probs.size(); ++k) a[k] = probs[k] > 0.5 ? 1 : 0;
  return a;
}

double joint_log_prob(const Vec& probs, const std::vector<uint8_t>& actions) {
  double logp = 0.0;
  for (size_t k = 0; k < probs.size(); ++k)
    logp += std::log(std::max(actions[k] ? probs[k] : 1.0 - probs[k], 1e-300));
  return logp;
}

void gae(const Vec& rewards, const Vec& values, const std::vector<uint8_t>& terminal,
         double gamma, double lambda, Vec& advantages, Vec& returns) {
  size_t n = rewards.size();
  if (values.size() != n || terminal.size() != n)
    throw DataError("reward, value, and terminal lengths differ");
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double acc = 0.0;
  for (size_t i = n; i-- > 0;) {
    double next_value = (terminal[i] || i + 1 == n) ? 0.0 : values[i + 1];
    double not_done = terminal[i] ? 0.0 : 1.0;
    double delta = rewards[i] + gamma * next_value - values[i];
    acc = delta + gamma * lambda * not_done * acc;
    advantages[i] = acc;
    returns[i] = acc + values[i];
  }
}

double actor_loss_and_grads(const ActorNet& net,
                            const std::vector<const RolloutEpisode*>& eps, double clip_eps,
                            LstmGrads* cell_g, Vec* head_w_g, Vec* head_b_g,
                            double* clip_fraction) {
  int H = net.cell.n_hidden;
  int n_ticks = 0;
  for (const RolloutEpisode* ep : eps) n_ticks += ep->ticks();
  if (n_ticks == 0) throw DataError("empty minibatch");
  bool want_grads = cell_g != nullptr;

  double loss = 0.0;
  long clipped = 0;
  for (const RolloutEpisode* ep : eps) {
    int T = ep->ticks();
    std::vector<Vec> xs(T);
    const std::vector<uint8_t> no_action(net.n_features, 0);
    for (int t = 0; t < T; ++t)
      xs[t] = concat_obs_action(ep->obs[t], t > 0 ? ep->actions[t - 1] : no_action);
    LstmTrace trace;
    lstm_forward(net.cell, xs, trace);

    std::vector<Vec> dh_inj;
    if (want_grads) dh_inj.assign(T, Vec(H, 0.0));
    for (int t = 0; t < T; ++t) {
      const Vec& h = trace.h[t];
      Vec p = head_probs(net, h);
      double new_logp = joint_log_prob(p, ep->actions[t]);
      double ratio = std::exp(new_logp - ep->logp[t]);
      if (!std::isfinite(ratio))
        throw std::runtime_error("likelihood ratio is not finite; policy update aborted");
      double a = ep->advantages[t];
      double unclipped = ratio * a;
      double clip_r = clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
      double clipped_term = clip_r * a;
      if (unclipped <= clipped_term) {
        loss -= unclipped;
        if (want_grads && a != 0.0) {
          double dlogp = -a * ratio / (double)n_ticks;
          for (int f = 0; f < net.n_features; ++f) {
            // d logp / d z through the squashed bernoulli, per feature.
            double psel = p[f];
            double s = (psel - kProbFloor) / (1.0 - 2.0 * kProbFloor);
            double dpdz = (1.0 - 2.0 * kProbFloor) * s * (1.0 - s);
            double dz1 = dlogp * dpdz *
                         (ep->actions[t][f] ? 1.0 / psel : -1.0 / (1.0 - psel));
            double dz0 = -dz1;
            const double* w0 = net.head_w.data() + (size_t)(2 * f) * H;
            const double* w1 = net.head_w.data() + (size_t)(2 * f + 1) * H;
            double* g0 = head_w_g->data() + (size_t)(2 * f) * H;
            double* g1 = head_w_g->data() + (size_t)(2 * f + 1) * H;
            for (int j = 0; j < H; ++j) {
              g0[j] += dz0 * h[j];
              g1[j] += dz1 * h[j];
              dh_inj[t][j] += dz0 * w0[j] + dz1 * w1[j];
            }
            (*head_b_g)[2 * f] += dz0;
            (*head_b_g)[2 * f + 1] += dz1;
          }
        }
      } else {
        loss -= clipped_term;
        ++clipped;
      }
    }
    if (want_grads) lstm_backward(net.cell, trace, dh_inj, *cell_g);
  }
  if (clip_fraction != nullptr) *clip_fraction = (double)clipped / (double)n_ticks;
  return loss / (double)n_ticks;
}

double critic_loss_and_grads(const CriticNet& net,
                             const std::vector<const RolloutEpisode*>& eps, LstmGrads* cell_g,
                             Vec* head_w_g, Vec* head_b_g) {
  int H = net.cell.n_hidden;
  int n_ticks = 0;
  for (const RolloutEpisode* ep : eps) n_ticks += ep->ticks();
  if (n_ticks == 0) throw DataError("empty minibatch");
  bool want_grads = cell_g != nullptr;

  double loss = 0.0;
  for (const RolloutEpisode* ep : eps) {
    int T = ep->ticks();
    LstmTrace trace;
    lstm_forward(net.cell, ep->obs, trace);
    std::vector<Vec> dh_inj;
    if (want_grads) dh_inj.assign(T, Vec(H, 0.0));
    for (int t = 0; t < T; ++t) {
      double v = net.head_b[0];
      for (int j = 0; j < H; ++j) v += net.head_w[j] * trace.h[t][j];
      double d = v - ep->returns[t];
      loss += d * d;
      if (want_grads) {
        double dv = 2.0 * d / (double)n_ticks;
        for (int j = 0; j < H; ++j) {
          (*head_w_g)[j] += dv * trace.h[t][j];
          dh_inj[t][j] += dv * net.head_w[j];
        }
        (*head_b_g)[0] += dv;
      }
    }
    if (want_grads) lstm_backward(net.cell, trace, dh_inj, *cell_g);
  }
  return loss / (double)n_ticks;
}

std::vector<Vec*> actor_params(ActorNet& net) {
  return {&net.cell.w_ih, &net.cell.w_hh, &net.cell.b, &net.head_w, &net.head_b};
}

std::vector<Vec*> critic_params(CriticNet& net) {
  return {&net.cell.w_ih, &net.cell.w_hh, &net.cell.b, &net.head_w, &net.head_b};
}

PpoStats ppo_update(const RolloutBuffer& buffer, ActorNet& actor, CriticNet& critic,
                    PpoOptimizers& opt, const PpoConfig& cfg, Rng& rng) {
  int n_eps = (int)buffer.episodes.size();
  if (n_eps == 0) throw DataError("cannot update from an empty rollout buffer");
  int n_mb = std::min(cfg.minibatches, n_eps);

  LstmGrads a_cell, c_cell;
  a_cell.init(actor.cell);
  c_cell.init(critic.cell);
  Vec a_head_w(actor.head_w.size()), a_head_b(actor.head_b.size());
  Vec c_head_w(critic.head_w.size()), c_head_b(critic.head_b.size());
  std::vector<Vec*> a_grads = {&a_cell.w_ih, &a_cell.w_hh, &a_cell.b, &a_head_w, &a_head_b};
  std::vector<Vec*> c_grads = {&c_cell.w_ih, &c_cell.w_hh, &c_cell.b, &c_head_w, &c_head_b};
  std::vector<Vec*> a_params = actor_params(actor);
  std::vector<Vec*> c_params = critic_params(critic);

  PpoStats stats;
  int n_updates = 0;
  std::vector<int> order(n_eps);
  for (int i = 0; i < n_eps; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    rng.shuffle(order);
    for (int mb = 0; mb < n_mb; ++mb) {
      int lo = (int)((long)mb * n_eps / n_mb);
      int hi = (int)((long)(mb + 1) * n_eps / n_mb);
      std::vector<const RolloutEpisode*> group;
      for (int i = lo; i < hi; ++i) group.push_back(&buffer.episodes[order[i]]);
      if (group.empty()) continue;

      a_cell.zero();
      std::fill(a_head_w.begin(), a_head_w.end(), 0.0);
      std::fill(a_head_b.begin(), a_head_b.end(), 0.0);
      double cf = 0.0;
      double al = actor_loss_and_grads(actor, group, cfg.clip_eps, &a_cell, &a_head_w,
                                       &a_head_b, &cf);
      stats.actor_grad_norm += clip_grad_norm(a_grads, cfg.grad_clip);
      opt.actor.step(a_params, a_grads, cfg.learning_rate, cfg.adam_eps);

      c_cell.zero();
      std::fill(c_head_w.begin(), c_head_w.end(), 0.0);
      std::fill(c_head_b.begin(), c_head_b.end(), 0.0);
      double cl = critic_loss_and_grads(critic, group, &c_cell, &c_head_w, &c_head_b);
      stats.critic_grad_norm += clip_grad_norm(c_grads, cfg.grad_clip);
      opt.critic.step(c_params, c_grads, cfg.learning_rate, cfg.adam_eps);

      stats.actor_loss += al;
      stats.critic_loss += cl;
      stats.clip_fraction += cf;
      ++n_updates;
    }
  }
  if (n_updates > 0) {
    stats.actor_loss /= n_updates;
    stats.critic_loss /= n_updates;
    stats.clip_fraction /= n_updates;
    stats.actor_grad_norm /= n_updates;
    stats.critic_grad_norm /= n_updates;
  }
  return stats;
}

namespace {

nlohmann::json cell_to_json(const LstmCell& c) {
  nlohmann::json j;
  j["n_in"] = c.n_in;
  j["n_hidden"] = c.n_hidden;
  j["w_ih"] = c.w_ih;
  j["w_hh"] = c.w_hh;
  j["b"] = c.b;
  return j;
}

LstmCell cell_from_json(const nlohmann::json& j) {
  LstmCell c;
  c.n_in = j.at("n_in");
  c.n_hidden = j.at("n_hidden");
  c.w_ih = j.at("w_ih").get<Vec>();
  c.w_hh = j.at("w_hh").get<Vec>();
  c.b = j.at("b").get<Vec>();
  return c;
}

}  // namespace

std::string actor_to_json(const ActorNet& net) {
  nlohmann::json j;
  j["format"] = 1;
  j["kind"] = "actor";
  j["n_features"] = net.n_features;
  j["cell"] = cell_to_json(net.cell);
  j["head_w"] = net.head_w;
  j["head_b"] = net.head_b;
  return j.dump();
}

ActorNet actor_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "actor") throw DataError("model file is not a policy");
  ActorNet net;
  net.n_features = j.at("n_features");
  net.cell = cell_from_json(j.at("cell"));
  net.head_w = j.at("head_w").get<Vec>();
  net.head_b = j.at("head_b").get<Vec>();
  return net;
}

std::string critic_to_json(const CriticNet& net) {
  nlohmann::json j;
  j["format"] = 1;
  j["kind"] = "critic";
  j["n_features"] = net.n_features;
  j["cell"] = cell_to_json(net.cell);
  j["head_w"] = net.head_w;
  j["head_b"] = net.head_b;
  return j.dump();
}

CriticNet critic_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "critic") throw DataError("model file is not a value function");
  CriticNet net;
  net.n_features = j.at("n_features");
  net.cell = cell_from_json(j.at("cell"));
  net.head_w = j.at("head_w").get<Vec>();
  net.head_b = j.at("head_b").get<Vec>();
  return net;
}

}  // namespace dynafs
