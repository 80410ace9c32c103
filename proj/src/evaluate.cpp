#include "dynafs/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dynafs {

double mean_abs_error(const Vec& pred, const Vec& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw DataError("mean_abs_error: size mismatch or empty input");
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) s += std::fabs(pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

double auroc(const Vec& scores, const Vec& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw DataError("auroc: size mismatch or empty input");
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Midranks over tied score groups.
  Vec rank(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }

  double n_pos = 0.0, n_neg = 0.0, rank_pos = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (labels[k] > 0) {
      n_pos += 1.0;
      rank_pos += rank[k];
    } else {
      n_neg += 1.0;
    }
  }
  if (n_pos == 0.0 || n_neg == 0.0)
    throw DataError("auroc: needs both classes present");
  return (rank_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double pooled_loss(const Vec& pred, const Vec& truth, Task task) {
  if (task == Task::Regression) return mean_abs_error(pred, truth);
  return 1.0 - auroc(pred, truth);
}

ActivationMap activation_map(const std::vector<ActionMatrix>& actions,
                             const std::vector<std::string>& names, int t_max) {
  if (actions.empty()) throw DataError("activation_map: no episodes");
  const int n_f = actions.front().n_features;
  if (static_cast<int>(names.size()) != n_f)
    throw DataError("activation_map: name count mismatch");
  if (t_max < 1) throw DataError("activation_map: t_max must be positive");

  Table sums(n_f, t_max);
  std::vector<std::vector<int>> counts(n_f, std::vector<int>(t_max, 0));
  Vec overall_sum(n_f, 0.0);
  std::vector<long long> overall_n(n_f, 0);
  for (const auto& am : actions) {
    if (am.n_features != n_f) throw DataError("activation_map: feature count mismatch");
    for (int t = 0; t < am.n_ticks; ++t) {
      for (int k = 0; k < n_f; ++k) {
        const double a = am.at(k, t);
        if (t < t_max) {
          sums.row_ptr(k)[t] += a;
          counts[k][t] += 1;
        }
        overall_sum[k] += a;
        overall_n[k] += 1;
      }
    }
  }

  Vec mean_all(n_f, 0.0);
  for (int k = 0; k < n_f; ++k)
    mean_all[k] = overall_n[k] > 0 ? overall_sum[k] / static_cast<double>(overall_n[k]) : 0.0;

  std::vector<int> order(n_f);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mean_all[a] > mean_all[b]; });

  ActivationMap out;
  out.feature_order = order;
  out.grid = Table(n_f, t_max);
  for (int r = 0; r < n_f; ++r) {
    const int k = order[r];
    out.names.push_back(names[k]);
    out.mean_activation.push_back(mean_all[k]);
    for (int t = 0; t < t_max; ++t)
      out.grid.row_ptr(r)[t] =
          counts[k][t] > 0 ? sums.row_ptr(k)[t] / static_cast<double>(counts[k][t]) : 0.0;
  }
  return out;
}

std::string curve_csv(const std::vector<CurvePoint>& points, Task task) {
  std::vector<CurvePoint> rows = points;
  std::stable_sort(rows.begin(), rows.end(), [](const CurvePoint& a, const CurvePoint& b) {
    if (a.c_max != b.c_max) return a.c_max < b.c_max;
    return a.source < b.source;
  });
  std::ostringstream os;
  os.precision(17);
  os << "c_max,achieved_cost," << (task == Task::Regression ? "mae" : "one_minus_auroc")
     << ",source\n";
  for (const auto& p : rows)
    os << p.c_max << ',' << p.achieved_cost << ',' << p.loss << ',' << p.source << '\n';
  return os.str();
}

std::string activation_csv(const ActivationMap& map) {
  std::ostringstream os;
  os.precision(17);
  os << "feature,mean_activation";
  for (int t = 0; t < map.grid.n_cols; ++t) os << ",t" << t;
  os << '\n';
  for (int r = 0; r < map.grid.n_rows; ++r) {
    os << map.names[r] << ',' << map.mean_activation[r];
    for (int t = 0; t < map.grid.n_cols; ++t) os << ',' << map.grid.row_ptr(r)[t];
    os << '\n';
  }
  return os.str();
}

}  // namespace dynafs
