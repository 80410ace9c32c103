#include "dynafs/reward.hpp"

#include <cmath>

namespace dynafs {

double regression_reward(double l_baseline, double l_pred, const RewardConfig& cfg) {
  double r = (l_baseline - l_pred) / std::max(l_baseline, cfg.l_eps);
  return cfg.paper_literal_signs ? -r : r;
}

double classification_reward(double p_own, double p_other, double label,
                             const RewardConfig& cfg) {
  double r = label * (p_own - p_other);
  return cfg.paper_literal_signs ? -r : r;
}

std::vector<int> pair_assignments(const Vec& labels, Rng& rng) {
  std::vector<int> pos, neg;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 0.0) {
      pos.push_back((int)i);
    } else {
      neg.push_back((int)i);
    }
  }
  std::vector<int> out(labels.size(), -1);
  if (pos.empty() || neg.empty()) return out;
  for (size_t i = 0; i < labels.size(); ++i) {
    const std::vector<int>& pool = labels[i] > 0.0 ? neg : pos;
    out[i] = pool[rng.uniform_int((int)pool.size())];
  }
  return out;
}

Vec normalize_pred_rewards(const Vec& rewards) {
  if (rewards.empty()) return rewards;
  double s = 0.0;
  for (double r : rewards) s += std::fabs(r);
  double m = s / (double)rewards.size();
  if (m == 0.0) return rewards;
  Vec out(rewards.size());
  for (size_t i = 0; i < rewards.size(); ++i) out[i] = rewards[i] / m;
  return out;
}

double cost_gate(double c_train, double c_max, double alpha) {
  if (c_max <= 0.0) return 1.0;
  if (std::isinf(c_max)) return sigmoid(-alpha);
  return sigmoid(-alpha * (1.0 - c_train / c_max));
}

double cost_reward(const std::vector<uint8_t>& action_t, const Vec& step_costs, double gate,
                   const RewardConfig& cfg) {
  if (action_t.size() != step_costs.size())
    throw DataError("action and step-cost lengths differ");
  double sum = 0.0;
  bool any = false;
  for (size_t k = 0; k < step_costs.size(); ++k) {
    sum += step_costs[k];
    if (action_t[k]) any = true;
  }
  double mean = sum / (double)step_costs.size();
  if (cfg.paper_literal_signs) return gate * (cfg.beta * mean + cfg.c_base);
  return -gate * (cfg.beta * mean + (any ? cfg.c_base : 0.0));
}

double update_beta(double beta, const Vec& last3, double steps_elapsed,
                   const RewardConfig& cfg) {
  if (last3.size() < 3 || steps_elapsed <= 0.0) return beta;
  double rate = (last3.front() - last3.back()) / steps_elapsed;
  if (rate < cfg.plateau_threshold)
    return std::min(1.5 * beta, beta + cfg.delta_beta);
  return beta;
}

double update_c_train(double c_train, double batch_mean_cost, bool has_prev,
                      const RewardConfig& cfg) {
  if (!has_prev) return batch_mean_cost;
  return cfg.ema_coeff * c_train + (1.0 - cfg.ema_coeff) * batch_mean_cost;
}

}  // namespace dynafs
