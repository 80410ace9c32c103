#pragma once

#include <string>
#include <vector>

#include "dynafs/core.hpp"
#include "dynafs/cost.hpp"

namespace dynafs {

double mean_abs_error(const Vec& pred, const Vec& truth);

// Rank-based area under the ROC curve with midranks for tied scores.
// Labels are +1 / -1. Throws DataError when one class is absent.
double auroc(const Vec& scores, const Vec& labels);

// Pooled prediction loss: MAE for regression, 1 - AUROC for classification.
double pooled_loss(const Vec& pred, const Vec& truth, Task task);

struct ActivationMap {
  std::vector<int> feature_order;   // rows, by descending mean activation
  std::vector<std::string> names;   // in row order
  Vec mean_activation;              // in row order
  Table grid;                       // n_features x t_max, mean activation per tick
};

// Per-feature, per-tick mean of binary acquisition decisions across episodes,
// truncated (or zero padded within each shorter episode's tail ignored) at
// t_max ticks. Rows sorted by descending overall mean, ties by feature index.
ActivationMap activation_map(const std::vector<ActionMatrix>& actions,
                             const std::vector<std::string>& names, int t_max = 40);

struct CurvePoint {
  double c_max = 0.0;
  double achieved_cost = 0.0;
  double loss = 0.0;
  std::string source;  // "policy", "topk", "knapsack", "full", "none"
};

// Cost/loss curve rows sorted by budget then source; serialized as CSV with a
// header carrying the metric name. Budgets are meant for a log-10 cost axis.
std::string curve_csv(const std::vector<CurvePoint>& points, Task task);

std::string activation_csv(const ActivationMap& map);

}  // namespace dynafs
