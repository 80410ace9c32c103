#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dynafs/cost.hpp"
#include "dynafs/data.hpp"
#include "dynafs/gbdt.hpp"
#include "dynafs/recurrent.hpp"

namespace dynafs {

// Per-tick predictions for one episode's (n_features x n_ticks) matrix.
using SequencePredictFn = std::function<Vec(const Mat& ticks)>;

// Mean increase of the pooled validation loss (MAE, or 1 - ranking accuracy
// for classification) when one feature's values are shuffled across all ticks
// and subjects, clamped at zero. n_repeats shuffles are averaged per feature.
Vec permutation_importance(const SequencePredictFn& predict,
                           const std::vector<EpisodeData>& episodes, Task task,
                           int n_repeats, uint64_t seed);

struct LassoConfig {
  int n_alphas = 100;
  double eps_ratio = 1e-3;  // alpha_min / alpha_max
  int max_iter = 20000;     // coordinate-descent cycles per alpha
  double tol = 1e-4;        // KKT residual bound
  int n_folds = 5;
  uint64_t seed = 0;
};

struct LassoResult {
  Vec alphas;        // descending
  Table coef_path;   // n_alphas x n_features, full-data fits
  Vec cv_mse;        // per alpha
  int selected = 0;  // index into alphas
  Vec coef;
  double intercept = 0.0;
  bool converged = true;
  double duality_gap = 0.0;
};

// L1 regression path by cyclic coordinate descent with soft thresholding,
// k-fold cross-validated mean squared error for the alpha choice. Objective
// per point: 1/(2n) ||y - Xb - b0||^2 + alpha ||b||_1. Expects standardized
// columns.
LassoResult lasso_importance(const Table& X, const Vec& y, const LassoConfig& cfg);

struct L1LogisticConfig {
  double C = 1.0;
  double tol = 1e-4;
  int max_iter = 1000;
  bool balanced = true;
};

struct L1LogisticResult {
  Vec coef;
  double intercept = 0.0;
  bool converged = true;
  int iters = 0;
};

// L1-penalized linear classifier on class-weighted squared hinge loss, fit by
// proximal gradient: ||b||_1 + C sum_i w_i max(0, 1 - y_i(x_i b + b0))^2.
L1LogisticResult l1_logistic_importance(const Table& X, const Vec& y,
                                        const L1LogisticConfig& cfg);

struct SubsetSelection {
  std::vector<int> selected;
  double expected_per_tick_cost = 0.0;  // filled by the per-tick greedy
  double total_seq_cost = 0.0;          // filled by the whole-sequence knapsack
  std::string note;
};

// Greedy ranking by importance (ties to the lower index), admitting features
// with positive importance while the expected per-tick cost stays within
// c_max. Static features amortize one acquisition over the mean sequence
// length.
SubsetSelection select_topk(const Vec& importance, const std::vector<FeatureSpec>& specs,
                            double c_max, double mean_seq_ticks,
                            CostMode mode = CostMode::Simple);

// 0/1 knapsack over whole-sequence feature costs with budget c_max_total,
// discretized at c_max_total / resolution. Exact on the discretized instance;
// value ties prefer fewer features, then the earlier-built subset.
SubsetSelection select_knapsack(const Vec& importance, const Vec& seq_costs,
                                double c_max_total, int resolution = 1000);

enum class BaselinePredictorKind { Gbdt, Recurrent, Linear, Logistic };

struct BaselineRunResult {
  double val_loss = 0.0;
  double test_loss = 0.0;
  double test_cost = 0.0;
};

// Trains a predictor with unselected features masked to the fill value at
// every tick and reports losses plus the per-tick cost that acquiring the
// subset at every tick would incur under the same cost accounting as the
// policy.
BaselineRunResult train_baseline(const DatasetSplits& splits, const std::vector<int>& selected,
                                 Task task, BaselinePredictorKind kind, const GbdtConfig& gcfg,
                                 const RecurrentConfig& rcfg, CostMode mode);

}  // namespace dynafs
