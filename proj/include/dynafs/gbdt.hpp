#pragma once

#include <string>
#include <vector>

#include "dynafs/core.hpp"
#include "dynafs/predictor.hpp"

namespace dynafs {

struct GbdtConfig {
  int n_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  int min_samples_leaf = 1;
  // Number of bagged models averaged together. Members beyond the first fit
  // seeded bootstrap resamples.
  int ensemble = 1;
  Task task = Task::Regression;
  uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;      // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const double* x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

struct GbdtModel {
  Task task = Task::Regression;
  int n_features = 0;
  double base_score = 0.0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;
  // Training objective after each boosting stage (squared loss for
  // regression, weighted log loss for classification).
  Vec train_loss;

  double margin(const double* x) const;
  // Regression value, or positive-class probability for classification.
  double predict(const double* x) const;
  double predict(const Vec& x) const;
};

struct GbdtEnsemble {
  std::vector<GbdtModel> members;

  double predict(const double* x) const {
    double s = 0.0;
    for (const GbdtModel& m : members) s += m.predict(x);
    return s / (double)members.size();
  }
  double predict(const Vec& x) const { return predict(x.data()); }
};

// Greedy exact split search on midpoints between distinct sorted values,
// maximizing sum_l^2/hess_l + sum_r^2/hess_r - sum^2/hess. Ties resolve to the
// lowest feature index, then the lowest threshold.
GbdtModel fit_gbdt(const Table& X, const Vec& y, const GbdtConfig& cfg);

GbdtEnsemble fit_gbdt_ensemble(const Table& X, const Vec& y, const GbdtConfig& cfg);

std::string gbdt_to_json(const GbdtEnsemble& m);
GbdtEnsemble gbdt_from_json(const std::string& text);

}  // namespace dynafs
