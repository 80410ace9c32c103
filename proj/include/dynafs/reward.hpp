#pragma once

#include <cstdint>
#include <vector>

#include "dynafs/core.hpp"
#include "dynafs/data.hpp"

namespace dynafs {

struct RewardConfig {
  // Steepness of the cost gate around the budget.
  double alpha = 10.0;
  // Initial cost-punishment weight and its additive escalation step.
  double beta = 5.0;
  double delta_beta = 5.0;
  // Flat charge per tick with a non-empty selection.
  double c_base = 0.2;
  // Floor of the baseline-loss denominator in the regression reward.
  double l_eps = 1.0;
  // Smoothing of the running train-cost average.
  double ema_coeff = 0.95;
  // Escalate beta when the validation cost falls slower than this per step.
  double plateau_threshold = 0.5e-6;
  // Reproduces the published sign conventions (penalty-like rewards) instead
  // of the maximization-ready ones. For side-by-side comparison only.
  bool paper_literal_signs = false;
};

// Relative improvement of the prediction loss over the baseline predictor's
// loss on the same tick. Positive when the masked prediction beats the
// baseline.
double regression_reward(double l_baseline, double l_pred, const RewardConfig& cfg);

// Margin reward for one tick paired with an opposite-label tick: label *
// (own positive-class probability - partner's).
double classification_reward(double p_own, double p_other, double label,
                             const RewardConfig& cfg);

// For each tick, a partner index drawn uniformly from the opposite-label
// ticks of the batch, or -1 when none exists.
std::vector<int> pair_assignments(const Vec& labels, Rng& rng);

// Divides by the batch mean absolute value; an all-zero batch stays zero.
Vec normalize_pred_rewards(const Vec& rewards);

// 1 / (1 + exp(alpha * (1 - c_train / c_max))): ~0 well under budget, 0.5 at
// the budget, ~1 far over it.
double cost_gate(double c_train, double c_max, double alpha);

// Gated per-tick acquisition penalty: -gate * (beta * mean per-feature cost
// + c_base when the selection is non-empty). step_costs comes from the cost
// module and shares its length with action_t.
double cost_reward(const std::vector<uint8_t>& action_t, const Vec& step_costs, double gate,
                   const RewardConfig& cfg);

// Escalates beta to min(1.5 beta, beta + delta_beta) when the validation
// cost's decrease rate over the last three evaluations is below the plateau
// threshold. last3 is ordered oldest first; steps_elapsed spans the window.
double update_beta(double beta, const Vec& last3, double steps_elapsed,
                   const RewardConfig& cfg);

// Exponential moving average of the batch mean per-tick cost. Pass
// has_prev=false on the first batch to seed the average.
double update_c_train(double c_train, double batch_mean_cost, bool has_prev,
                      const RewardConfig& cfg);

}  // namespace dynafs
