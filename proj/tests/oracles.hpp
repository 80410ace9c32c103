// Independent reference implementations used to cross-check the library.
// Everything here is deliberately brute-force and written from the defining
// formulas, not from the production code paths.
#pragma once

#include <vector>

#include "dynafs/core.hpp"

namespace oracle {

using dynafs::Table;
using dynafs::Task;
using dynafs::Vec;

// Mann-Whitney by full pair enumeration: P(score_pos > score_neg) + 0.5 ties.
double auroc_pairs(const Vec& scores, const Vec& labels);

// Advantage at t as the literal discounted sum of one-step TD errors,
// truncated at the first terminal step.
void gae_explicit(const Vec& rewards, const Vec& values, const std::vector<uint8_t>& terminal,
                  double gamma, double lambda, Vec& advantages, Vec& returns);

struct Knapsack {
  std::vector<int> selected;  // ascending indices
  double value = 0.0;
  int count = 0;
};

// Exhaustive 0/1 knapsack over all subsets, on the same quantized integer
// weights and the same (max value, then fewest items) preference. Item values
// accumulate in ascending index order so objective doubles are comparable
// exactly.
Knapsack knapsack_subsets(const Vec& importance, const Vec& seq_costs, double c_max_total,
                          int resolution);

struct Stump {
  bool has_split = false;
  int feature = -1;
  double threshold = 0.0;
  double left = 0.0;   // leaf for x[feature] < threshold
  double right = 0.0;  // leaf otherwise
  double base = 0.0;   // initial constant margin
};

// Exhaustive depth-1 search for the first boosting round: every feature,
// every midpoint between consecutive distinct sorted values, gain
// gl^2/hl + gr^2/hr - g^2/h, ties to the lowest feature then threshold.
Stump best_stump(const Table& X, const Vec& y, Task task, int min_leaf = 1);

// Ordinary least squares with intercept by normal equations; returns
// coefficients then the intercept as the last entry.
Vec ols(const Table& X, const Vec& y);

// Central finite differences through a list of parameter blocks.
template <class F>
std::vector<Vec> fd_gradient(F&& loss, const std::vector<Vec*>& params, double eps = 1e-5) {
  std::vector<Vec> grads;
  for (Vec* p : params) {
    Vec g(p->size(), 0.0);
    for (size_t i = 0; i < p->size(); ++i) {
      const double orig = (*p)[i];
      (*p)[i] = orig + eps;
      const double fp = loss();
      (*p)[i] = orig - eps;
      const double fm = loss();
      (*p)[i] = orig;
      g[i] = (fp - fm) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// Largest relative deviation between two gradient lists, guarding tiny
// denominators with the analytic gradient scale.
double max_rel_err(const std::vector<Vec>& analytic, const std::vector<Vec>& numeric);

}  // namespace oracle
