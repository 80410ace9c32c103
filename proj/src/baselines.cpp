#include "dynafs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "dynafs/evaluate.hpp"

namespace dynafs {

namespace {

struct PooledPreds {
  Vec pred;
  Vec truth;
};

PooledPreds pooled_predictions(const SequencePredictFn& predict,
                               const std::vector<EpisodeData>& episodes) {
  std::vector<Vec> per_ep(episodes.size());
  parallel_for((int)episodes.size(), [&](int i) { per_ep[i] = predict(episodes[i].x); });
  PooledPreds out;
  for (size_t i = 0; i < episodes.size(); ++i) {
    if (per_ep[i].size() != episodes[i].y.size())
      throw DataError("permutation importance: prediction length mismatch");
    out.pred.insert(out.pred.end(), per_ep[i].begin(), per_ep[i].end());
    out.truth.insert(out.truth.end(), episodes[i].y.begin(), episodes[i].y.end());
  }
  return out;
}

}  // namespace

Vec permutation_importance(const SequencePredictFn& predict,
                           const std::vector<EpisodeData>& episodes, Task task,
                           int n_repeats, uint64_t seed) {
  if (episodes.empty()) throw DataError("permutation importance: no episodes");
  if (n_repeats < 1) throw ConfigError("permutation importance: n_repeats must be positive");
  const int n_f = episodes.front().x.rows;

  const PooledPreds base = pooled_predictions(predict, episodes);
  const double base_loss = pooled_loss(base.pred, base.truth, task);
  const size_t n_ticks_total = base.truth.size();

  Rng root(seed);
  Vec importance(n_f, 0.0);
  for (int k = 0; k < n_f; ++k) {
    double acc = 0.0;
    for (int r = 0; r < n_repeats; ++r) {
      // Pool feature k over (episode, tick) in order, shuffle, scatter back.
      Vec pool;
      pool.reserve(n_ticks_total);
      for (const auto& ep : episodes)
        for (int t = 0; t < ep.x.cols; ++t) pool.push_back(ep.x(k, t));
      Rng rng = root.derive((uint64_t)r * (uint64_t)n_f + (uint64_t)k);
      rng.shuffle(pool);

      std::vector<size_t> offsets(episodes.size());
      size_t off = 0;
      for (size_t i = 0; i < episodes.size(); ++i) {
        offsets[i] = off;
        off += (size_t)episodes[i].x.cols;
      }
      std::vector<Vec> per_ep(episodes.size());
      parallel_for((int)episodes.size(), [&](int i) {
        Mat x = episodes[i].x;
        for (int t = 0; t < x.cols; ++t) x(k, t) = pool[offsets[i] + (size_t)t];
        per_ep[i] = predict(x);
      });
      Vec pred;
      pred.reserve(n_ticks_total);
      for (auto& p : per_ep) pred.insert(pred.end(), p.begin(), p.end());
      acc += pooled_loss(pred, base.truth, task) - base_loss;
    }
    importance[k] = std::max(0.0, acc / n_repeats);
  }
  return importance;
}

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// One coordinate-descent fit at a fixed alpha, warm started from b / b0.
// Objective: 1/(2n) ||y - X b - b0||^2 + alpha ||b||_1.
bool cd_fit(const std::vector<Vec>& cols, const Vec& y, const Vec& z, double alpha,
            Vec& b, double& b0, int max_iter, double tol) {
  const int n_f = (int)cols.size();
  const size_t n = y.size();
  const double inv_n = 1.0 / (double)n;

  // Zero-variance columns cannot move.
  for (int j = 0; j < n_f; ++j)
    if (z[j] == 0.0) b[j] = 0.0;

  Vec r(n);
  for (size_t i = 0; i < n; ++i) r[i] = y[i] - b0;
  for (int j = 0; j < n_f; ++j)
    if (b[j] != 0.0)
      for (size_t i = 0; i < n; ++i) r[i] -= cols[j][i] * b[j];

  for (int cycle = 0; cycle < max_iter; ++cycle) {
    for (int j = 0; j < n_f; ++j) {
      if (z[j] == 0.0) continue;
      double dot = 0.0;
      const double* cj = cols[j].data();
      for (size_t i = 0; i < n; ++i) dot += cj[i] * r[i];
      const double rho = dot * inv_n + z[j] * b[j];
      const double nb = soft_threshold(rho, alpha) / z[j];
      if (nb != b[j]) {
        const double delta = b[j] - nb;
        for (size_t i = 0; i < n; ++i) r[i] += cj[i] * delta;
        b[j] = nb;
      }
    }
    double rm = 0.0;
    for (size_t i = 0; i < n; ++i) rm += r[i];
    rm *= inv_n;
    if (rm != 0.0) {
      b0 += rm;
      for (size_t i = 0; i < n; ++i) r[i] -= rm;
    }

    double kkt = 0.0;
    for (int j = 0; j < n_f; ++j) {
      if (z[j] == 0.0) continue;
      double dot = 0.0;
      const double* cj = cols[j].data();
      for (size_t i = 0; i < n; ++i) dot += cj[i] * r[i];
      const double c = dot * inv_n;
      const double viol = b[j] != 0.0 ? std::fabs(c - alpha * (b[j] > 0.0 ? 1.0 : -1.0))
                                      : std::max(0.0, std::fabs(c) - alpha);
      kkt = std::max(kkt, viol);
    }
    if (kkt < tol) return true;
  }
  return false;
}

double lasso_duality_gap(const std::vector<Vec>& cols, const Vec& y, const Vec& b, double b0,
                         double alpha) {
  const size_t n = y.size();
  Vec r(n);
  for (size_t i = 0; i < n; ++i) r[i] = y[i] - b0;
  for (size_t j = 0; j < cols.size(); ++j)
    if (b[j] != 0.0)
      for (size_t i = 0; i < n; ++i) r[i] -= cols[j][i] * b[j];

  double xtr_inf = 0.0;
  for (size_t j = 0; j < cols.size(); ++j) {
    double dot = 0.0;
    for (size_t i = 0; i < n; ++i) dot += cols[j][i] * r[i];
    xtr_inf = std::max(xtr_inf, std::fabs(dot));
  }
  const double n_alpha = (double)n * alpha;
  const double s = xtr_inf > n_alpha && xtr_inf > 0.0 ? n_alpha / xtr_inf : 1.0;

  double r_sq = 0.0, r_y = 0.0, l1 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    r_sq += r[i] * r[i];
    r_y += r[i] * (y[i] - b0);
  }
  for (double bj : b) l1 += std::fabs(bj);
  return r_sq / (2.0 * n) * (1.0 + s * s) + alpha * l1 - s * r_y / (double)n;
}

struct LassoFitJob {
  std::vector<Vec> cols;  // per-feature values over this job's training rows
  Vec y;
  Vec z;  // per-feature squared norm / n
  std::vector<int> val_rows;
};

LassoFitJob make_lasso_job(const Table& X, const Vec& y, const std::vector<int>& train_rows) {
  LassoFitJob job;
  const int n_f = X.n_cols;
  job.cols.assign(n_f, Vec(train_rows.size()));
  job.y.resize(train_rows.size());
  for (size_t i = 0; i < train_rows.size(); ++i) {
    const double* row = X.row_ptr(train_rows[i]);
    for (int j = 0; j < n_f; ++j) job.cols[j][i] = row[j];
    job.y[i] = y[(size_t)train_rows[i]];
  }
  job.z.resize(n_f);
  for (int j = 0; j < n_f; ++j) {
    double s = 0.0;
    for (double v : job.cols[j]) s += v * v;
    job.z[j] = s / (double)train_rows.size();
  }
  return job;
}

}  // namespace

LassoResult lasso_importance(const Table& X, const Vec& y, const LassoConfig& cfg) {
  const int n = X.n_rows;
  const int n_f = X.n_cols;
  if ((int)y.size() != n || n == 0 || n_f == 0)
    throw DataError("lasso: shape mismatch or empty input");
  if (cfg.n_folds < 2 || n < cfg.n_folds)
    throw ConfigError("lasso: need at least n_folds rows and n_folds >= 2");
  if (cfg.n_alphas < 1 || cfg.eps_ratio <= 0.0 || cfg.eps_ratio >= 1.0)
    throw ConfigError("lasso: bad alpha grid");

  std::vector<int> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  LassoFitJob full = make_lasso_job(X, y, all_rows);

  const double y_mean = mean_of(full.y);
  double alpha_max = 0.0;
  for (int j = 0; j < n_f; ++j) {
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += full.cols[j][i] * (full.y[i] - y_mean);
    alpha_max = std::max(alpha_max, std::fabs(dot) / n);
  }
  if (alpha_max <= 0.0) alpha_max = 1e-12;

  LassoResult res;
  res.alphas.resize(cfg.n_alphas);
  for (int a = 0; a < cfg.n_alphas; ++a) {
    const double frac = cfg.n_alphas == 1 ? 0.0 : (double)a / (cfg.n_alphas - 1);
    res.alphas[a] = alpha_max * std::pow(cfg.eps_ratio, frac);
  }

  // Fold assignment: shuffled rows dealt round-robin.
  std::vector<int> perm = all_rows;
  Rng rng(cfg.seed);
  rng.shuffle(perm);
  std::vector<std::vector<int>> fold_rows(cfg.n_folds);
  for (int i = 0; i < n; ++i) fold_rows[i % cfg.n_folds].push_back(perm[i]);
  for (auto& f : fold_rows) std::sort(f.begin(), f.end());

  const int n_jobs = cfg.n_folds + 1;  // folds plus the full-data path
  std::vector<Vec> fold_mse(cfg.n_folds, Vec(cfg.n_alphas, 0.0));
  std::vector<uint8_t> job_converged(n_jobs, 1);
  Table coef_path(cfg.n_alphas, n_f);
  Vec intercept_path(cfg.n_alphas, 0.0);

  parallel_for(n_jobs, [&](int jid) {
    const bool is_full = jid == cfg.n_folds;
    LassoFitJob job;
    if (is_full) {
      job = std::move(full);
    } else {
      std::vector<int> train_rows;
      for (int f = 0; f < cfg.n_folds; ++f)
        if (f != jid) train_rows.insert(train_rows.end(), fold_rows[f].begin(), fold_rows[f].end());
      std::sort(train_rows.begin(), train_rows.end());
      job = make_lasso_job(X, y, train_rows);
      job.val_rows = fold_rows[jid];
    }

    Vec b(n_f, 0.0);
    double b0 = mean_of(job.y);
    for (int a = 0; a < cfg.n_alphas; ++a) {
      const bool ok = cd_fit(job.cols, job.y, job.z, res.alphas[a], b, b0, cfg.max_iter, cfg.tol);
      if (!ok) job_converged[jid] = 0;
      if (is_full) {
        for (int j = 0; j < n_f; ++j) coef_path(a, j) = b[j];
        intercept_path[a] = b0;
      } else {
        double se = 0.0;
        for (int row : job.val_rows) {
          const double* xr = X.row_ptr(row);
          double p = b0;
          for (int j = 0; j < n_f; ++j) p += xr[j] * b[j];
          const double d = y[(size_t)row] - p;
          se += d * d;
        }
        fold_mse[jid][a] = se / (double)job.val_rows.size();
      }
    }
  });

  res.cv_mse.assign(cfg.n_alphas, 0.0);
  for (int a = 0; a < cfg.n_alphas; ++a) {
    for (int f = 0; f < cfg.n_folds; ++f) res.cv_mse[a] += fold_mse[f][a];
    res.cv_mse[a] /= cfg.n_folds;
  }
  res.selected = 0;
  for (int a = 1; a < cfg.n_alphas; ++a)
    if (res.cv_mse[a] < res.cv_mse[res.selected]) res.selected = a;

  res.coef_path = coef_path;
  res.coef.resize(n_f);
  for (int j = 0; j < n_f; ++j) res.coef[j] = coef_path(res.selected, j);
  res.intercept = intercept_path[res.selected];
  res.converged = std::all_of(job_converged.begin(), job_converged.end(),
                              [](uint8_t c) { return c != 0; });

  LassoFitJob gap_job = make_lasso_job(X, y, all_rows);
  res.duality_gap =
      lasso_duality_gap(gap_job.cols, gap_job.y, res.coef, res.intercept, res.alphas[res.selected]);
  return res;
}

namespace {

double hinge_objective(const Table& X, const Vec& y, const Vec& w, const Vec& b, double b0,
                       double C) {
  double l1 = 0.0;
  for (double bj : b) l1 += std::fabs(bj);
  double loss = 0.0;
  for (int i = 0; i < X.n_rows; ++i) {
    const double* xr = X.row_ptr(i);
    double f = b0;
    for (int j = 0; j < X.n_cols; ++j) f += xr[j] * b[j];
    const double m = 1.0 - y[(size_t)i] * f;
    if (m > 0.0) loss += w[(size_t)i] * m * m;
  }
  return l1 + C * loss;
}

// grad over [b, b0] of the smooth term.
void hinge_gradient(const Table& X, const Vec& y, const Vec& w, const Vec& b, double b0, double C,
                    Vec& gb, double& gb0) {
  std::fill(gb.begin(), gb.end(), 0.0);
  gb0 = 0.0;
  for (int i = 0; i < X.n_rows; ++i) {
    const double* xr = X.row_ptr(i);
    double f = b0;
    for (int j = 0; j < X.n_cols; ++j) f += xr[j] * b[j];
    const double m = 1.0 - y[(size_t)i] * f;
    if (m > 0.0) {
      const double g = -2.0 * C * w[(size_t)i] * m * y[(size_t)i];
      for (int j = 0; j < X.n_cols; ++j) gb[(size_t)j] += g * xr[j];
      gb0 += g;
    }
  }
}

// Largest eigenvalue of 2C X~' W X~ (X~ = X with an appended ones column) by
// power iteration; bounds the curvature of the squared hinge.
double hinge_lipschitz(const Table& X, const Vec& w, double C) {
  const int d = X.n_cols + 1;
  Vec v(d);
  for (int j = 0; j < d; ++j) v[(size_t)j] = 1.0 + 0.01 * j;
  double lambda = 1.0;
  for (int it = 0; it < 60; ++it) {
    Vec u(d, 0.0);
    for (int i = 0; i < X.n_rows; ++i) {
      const double* xr = X.row_ptr(i);
      double dot = v[(size_t)X.n_cols];
      for (int j = 0; j < X.n_cols; ++j) dot += xr[j] * v[(size_t)j];
      const double s = w[(size_t)i] * dot;
      for (int j = 0; j < X.n_cols; ++j) u[(size_t)j] += s * xr[j];
      u[(size_t)X.n_cols] += s;
    }
    double norm = 0.0;
    for (double x : u) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= 0.0) return 2.0 * C;
    lambda = norm;
    for (int j = 0; j < d; ++j) v[(size_t)j] = u[(size_t)j] / norm;
  }
  return 2.0 * C * lambda * 1.01 + 1e-12;
}

}  // namespace

L1LogisticResult l1_logistic_importance(const Table& X, const Vec& y,
                                        const L1LogisticConfig& cfg) {
  const int n = X.n_rows;
  const int n_f = X.n_cols;
  if ((int)y.size() != n || n == 0) throw DataError("l1 classifier: shape mismatch");
  double n_pos = 0.0, n_neg = 0.0;
  for (double yi : y) {
    if (yi == 1.0)
      n_pos += 1.0;
    else if (yi == -1.0)
      n_neg += 1.0;
    else
      throw DataError("l1 classifier: labels must be -1 or +1");
  }
  if (n_pos == 0.0 || n_neg == 0.0) throw DataError("l1 classifier: needs both classes");

  Vec w(n, 1.0);
  if (cfg.balanced)
    for (int i = 0; i < n; ++i)
      w[(size_t)i] = y[(size_t)i] > 0 ? n / (2.0 * n_pos) : n / (2.0 * n_neg);

  const double L = hinge_lipschitz(X, w, cfg.C);
  const double step = 1.0 / L;

  L1LogisticResult res;
  res.coef.assign(n_f, 0.0);
  Vec b = res.coef, zb = b, prev_b = b;
  double b0 = 0.0, zb0 = 0.0, prev_b0 = 0.0;
  double tk = 1.0;
  double f_prev = hinge_objective(X, y, w, b, b0, cfg.C);

  Vec gb(n_f);
  double gb0 = 0.0;
  res.converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    hinge_gradient(X, y, w, zb, zb0, cfg.C, gb, gb0);
    prev_b = b;
    prev_b0 = b0;
    for (int j = 0; j < n_f; ++j)
      b[(size_t)j] = soft_threshold(zb[(size_t)j] - step * gb[(size_t)j], step);
    b0 = zb0 - step * gb0;

    const double f_new = hinge_objective(X, y, w, b, b0, cfg.C);
    res.iters = it + 1;
    if (std::fabs(f_new - f_prev) <= cfg.tol * std::max(1.0, std::fabs(f_prev))) {
      res.converged = true;
      f_prev = f_new;
      break;
    }
    if (f_new > f_prev) {
      // Momentum restart keeps the descent monotone enough.
      tk = 1.0;
      zb = b;
      zb0 = b0;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      const double mom = (tk - 1.0) / t_next;
      for (int j = 0; j < n_f; ++j)
        zb[(size_t)j] = b[(size_t)j] + mom * (b[(size_t)j] - prev_b[(size_t)j]);
      zb0 = b0 + mom * (b0 - prev_b0);
      tk = t_next;
    }
    f_prev = f_new;
  }
  res.coef = b;
  res.intercept = b0;
  return res;
}

namespace {

double per_tick_feature_cost(const FeatureSpec& s, CostMode mode, double mean_seq_ticks) {
  if (s.kind == FeatureKind::Static) {
    const double once = mode == CostMode::Simple ? s.unit_cost : s.obs_cost;
    return once / mean_seq_ticks;
  }
  return mode == CostMode::Simple ? s.unit_cost : s.per_tick_cost;
}

}  // namespace

SubsetSelection select_topk(const Vec& importance, const std::vector<FeatureSpec>& specs,
                            double c_max, double mean_seq_ticks, CostMode mode) {
  if (importance.size() != specs.size())
    throw DataError("subset selection: importance/spec length mismatch");
  if (mean_seq_ticks <= 0.0) throw DataError("subset selection: bad mean sequence length");

  std::vector<int> order(importance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return importance[(size_t)a] > importance[(size_t)b]; });

  SubsetSelection sel;
  for (int k : order) {
    if (importance[(size_t)k] <= 0.0) break;
    const double c = per_tick_feature_cost(specs[(size_t)k], mode, mean_seq_ticks);
    if (sel.expected_per_tick_cost + c <= c_max + 1e-12) {
      sel.selected.push_back(k);
      sel.expected_per_tick_cost += c;
    }
  }
  std::sort(sel.selected.begin(), sel.selected.end());
  if (sel.selected.empty())
    sel.note = "empty selection: no feature with positive importance fits the budget";
  return sel;
}

SubsetSelection select_knapsack(const Vec& importance, const Vec& seq_costs, double c_max_total,
                                int resolution) {
  if (importance.size() != seq_costs.size())
    throw DataError("knapsack: importance/cost length mismatch");
  if (resolution < 1) throw ConfigError("knapsack: resolution must be positive");
  SubsetSelection sel;
  if (c_max_total <= 0.0) {
    sel.note = "empty selection: non-positive budget";
    return sel;
  }

  const int n_f = (int)importance.size();
  const double q = c_max_total / resolution;
  const int cap_max = resolution;

  Vec value((size_t)cap_max + 1, 0.0);
  std::vector<int> count((size_t)cap_max + 1, 0);
  std::vector<std::vector<uint8_t>> take((size_t)n_f,
                                         std::vector<uint8_t>((size_t)cap_max + 1, 0));
  std::vector<int> weight(n_f, 0);

  for (int k = 0; k < n_f; ++k) {
    if (importance[(size_t)k] <= 0.0) continue;
    const long long wk = std::llround(seq_costs[(size_t)k] / q);
    if (wk > cap_max) continue;
    weight[(size_t)k] = (int)wk;
    for (int cap = cap_max; cap >= (int)wk; --cap) {
      const double cand_v = value[(size_t)(cap - wk)] + importance[(size_t)k];
      const int cand_c = count[(size_t)(cap - wk)] + 1;
      if (cand_v > value[(size_t)cap] ||
          (cand_v == value[(size_t)cap] && cand_c < count[(size_t)cap])) {
        value[(size_t)cap] = cand_v;
        count[(size_t)cap] = cand_c;
        take[(size_t)k][(size_t)cap] = 1;
      }
    }
  }

  int cap = cap_max;
  for (int k = n_f - 1; k >= 0; --k) {
    if (take[(size_t)k][(size_t)cap]) {
      sel.selected.push_back(k);
      sel.total_seq_cost += seq_costs[(size_t)k];
      cap -= weight[(size_t)k];
    }
  }
  std::reverse(sel.selected.begin(), sel.selected.end());
  if (sel.selected.empty())
    sel.note = "empty selection: no feature with positive importance fits the budget";
  return sel;
}

namespace {

std::vector<EpisodeData> mask_episodes(const std::vector<EpisodeData>& eps,
                                       const std::vector<uint8_t>& keep) {
  std::vector<EpisodeData> out = eps;
  for (auto& ep : out)
    for (int k = 0; k < ep.x.rows; ++k)
      if (!keep[(size_t)k])
        for (int t = 0; t < ep.x.cols; ++t) ep.x(k, t) = kMaskFill;
  return out;
}

void pool_ticks(const std::vector<EpisodeData>& eps, Table& X, Vec& y) {
  int rows = total_ticks(eps);
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

// Dense symmetric solve by Gaussian elimination with partial pivoting.
Vec solve_dense(std::vector<Vec> A, Vec rhs) {
  const int d = (int)rhs.size();
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::fabs(A[(size_t)r][(size_t)col]) > std::fabs(A[(size_t)piv][(size_t)col])) piv = r;
    std::swap(A[(size_t)col], A[(size_t)piv]);
    std::swap(rhs[(size_t)col], rhs[(size_t)piv]);
    const double d0 = A[(size_t)col][(size_t)col];
    if (d0 == 0.0) throw DataError("linear solve: singular system");
    for (int r = col + 1; r < d; ++r) {
      const double f = A[(size_t)r][(size_t)col] / d0;
      if (f == 0.0) continue;
      for (int c = col; c < d; ++c) A[(size_t)r][(size_t)c] -= f * A[(size_t)col][(size_t)c];
      rhs[(size_t)r] -= f * rhs[(size_t)col];
    }
  }
  Vec x(d, 0.0);
  for (int r = d - 1; r >= 0; --r) {
    double s = rhs[(size_t)r];
    for (int c = r + 1; c < d; ++c) s -= A[(size_t)r][(size_t)c] * x[(size_t)c];
    x[(size_t)r] = s / A[(size_t)r][(size_t)r];
  }
  return x;
}

// Ridge-stabilized least squares on [X, 1].
Vec fit_linear(const Table& X, const Vec& y) {
  const int d = X.n_cols + 1;
  std::vector<Vec> A((size_t)d, Vec((size_t)d, 0.0));
  Vec rhs((size_t)d, 0.0);
  for (int i = 0; i < X.n_rows; ++i) {
    const double* xr = X.row_ptr(i);
    for (int a = 0; a < d; ++a) {
      const double xa = a < X.n_cols ? xr[a] : 1.0;
      for (int b2 = a; b2 < d; ++b2) {
        const double xb = b2 < X.n_cols ? xr[b2] : 1.0;
        A[(size_t)a][(size_t)b2] += xa * xb;
      }
      rhs[(size_t)a] += xa * y[(size_t)i];
    }
  }
  for (int a = 0; a < d; ++a) {
    A[(size_t)a][(size_t)a] += 1e-8;
    for (int b2 = 0; b2 < a; ++b2) A[(size_t)a][(size_t)b2] = A[(size_t)b2][(size_t)a];
  }
  return solve_dense(std::move(A), std::move(rhs));
}

// Class-weighted logistic regression by Newton iterations on [X, 1].
Vec fit_logistic(const Table& X, const Vec& y) {
  const int d = X.n_cols + 1;
  double n_pos = 0.0, n_neg = 0.0;
  for (double yi : y) (yi > 0 ? n_pos : n_neg) += 1.0;
  if (n_pos == 0.0 || n_neg == 0.0) throw DataError("logistic: needs both classes");
  const double n = (double)y.size();
  const double w_pos = n / (2.0 * n_pos), w_neg = n / (2.0 * n_neg);

  Vec beta((size_t)d, 0.0);
  for (int it = 0; it < 50; ++it) {
    std::vector<Vec> H((size_t)d, Vec((size_t)d, 0.0));
    Vec g((size_t)d, 0.0);
    for (int i = 0; i < X.n_rows; ++i) {
      const double* xr = X.row_ptr(i);
      double f = beta[(size_t)(d - 1)];
      for (int j = 0; j < X.n_cols; ++j) f += xr[j] * beta[(size_t)j];
      const double p = sigmoid(f);
      const double t = y[(size_t)i] > 0 ? 1.0 : 0.0;
      const double wi = y[(size_t)i] > 0 ? w_pos : w_neg;
      const double gi = wi * (p - t);
      const double hi = wi * std::max(p * (1.0 - p), 1e-9);
      for (int a = 0; a < d; ++a) {
        const double xa = a < X.n_cols ? xr[a] : 1.0;
        g[(size_t)a] += gi * xa;
        for (int b2 = a; b2 < d; ++b2) {
          const double xb = b2 < X.n_cols ? xr[b2] : 1.0;
          H[(size_t)a][(size_t)b2] += hi * xa * xb;
        }
      }
    }
    for (int a = 0; a < d; ++a) {
      H[(size_t)a][(size_t)a] += 1e-8;
      for (int b2 = 0; b2 < a; ++b2) H[(size_t)a][(size_t)b2] = H[(size_t)b2][(size_t)a];
    }
    const Vec step = solve_dense(std::move(H), g);
    double max_step = 0.0;
    for (int a = 0; a < d; ++a) {
      beta[(size_t)a] -= step[(size_t)a];
      max_step = std::max(max_step, std::fabs(step[(size_t)a]));
    }
    if (max_step < 1e-10) break;
  }
  return beta;
}

}  // namespace

BaselineRunResult train_baseline(const DatasetSplits& splits, const std::vector<int>& selected,
                                 Task task, BaselinePredictorKind kind, const GbdtConfig& gcfg,
                                 const RecurrentConfig& rcfg, CostMode mode) {
  if (splits.train.empty() || splits.val.empty() || splits.test.empty())
    throw DataError("baseline training: every split must be non-empty");
  const int n_f = (int)splits.specs.size();
  std::vector<uint8_t> keep((size_t)n_f, 0);
  for (int k : selected) {
    if (k < 0 || k >= n_f) throw DataError("baseline training: selected index out of range");
    keep[(size_t)k] = 1;
  }

  const std::vector<EpisodeData> train = mask_episodes(splits.train, keep);
  const std::vector<EpisodeData> val = mask_episodes(splits.val, keep);
  const std::vector<EpisodeData> test = mask_episodes(splits.test, keep);

  SequencePredictFn predict;
  if (kind == BaselinePredictorKind::Gbdt) {
    Table X;
    Vec y;
    pool_ticks(train, X, y);
    GbdtConfig gc = gcfg;
    gc.task = task;
    auto model = std::make_shared<GbdtEnsemble>(fit_gbdt_ensemble(X, y, gc));
    predict = [model](const Mat& ticks) {
      Vec out((size_t)ticks.cols);
      for (int t = 0; t < ticks.cols; ++t) out[(size_t)t] = model->predict(ticks.col_ptr(t));
      return out;
    };
  } else if (kind == BaselinePredictorKind::Recurrent) {
    RecurrentConfig rc = rcfg;
    rc.task = task;
    std::vector<const EpisodeData*> tr, va;
    for (const auto& ep : train) tr.push_back(&ep);
    for (const auto& ep : val) va.push_back(&ep);
    auto model = std::make_shared<RecurrentPredictor>(fit_recurrent(tr, va, n_f, rc));
    predict = [model](const Mat& ticks) { return predict_sequence(*model, ticks); };
  } else {
    Table X;
    Vec y;
    pool_ticks(train, X, y);
    auto beta = std::make_shared<Vec>(kind == BaselinePredictorKind::Linear ? fit_linear(X, y)
                                                                            : fit_logistic(X, y));
    const bool prob = kind == BaselinePredictorKind::Logistic;
    predict = [beta, prob](const Mat& ticks) {
      Vec out((size_t)ticks.cols);
      for (int t = 0; t < ticks.cols; ++t) {
        const double* col = ticks.col_ptr(t);
        double f = (*beta)[(size_t)ticks.rows];
        for (int k = 0; k < ticks.rows; ++k) f += col[k] * (*beta)[(size_t)k];
        out[(size_t)t] = prob ? sigmoid(f) : f;
      }
      return out;
    };
  }

  BaselineRunResult res;
  {
    PooledPreds pv = pooled_predictions(predict, val);
    res.val_loss = pooled_loss(pv.pred, pv.truth, task);
    PooledPreds pt = pooled_predictions(predict, test);
    res.test_loss = pooled_loss(pt.pred, pt.truth, task);
  }

  double cost_total = 0.0;
  long long ticks_total = 0;
  for (const auto& ep : splits.test) {
    ActionMatrix am(n_f, ep.x.cols);
    for (int k : selected)
      for (int t = 0; t < ep.x.cols; ++t) am.at(k, t) = 1;
    cost_total += episode_cost(am, splits.specs, mode).total;
    ticks_total += ep.x.cols;
  }
  res.test_cost = ticks_total > 0 ? cost_total / (double)ticks_total : 0.0;
  return res;
}

}  // namespace dynafs
