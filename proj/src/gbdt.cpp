#include "dynafs/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace dynafs {

double GbdtModel::margin(const double* x) const {
  for (int k = 0; k < n_features; ++k)
    if (std::isnan(x[k])) throw std::invalid_argument("NaN feature value in prediction input");
  double m = base_score;
  for (const Tree& t : trees) m += learning_rate * t.predict(x);
  return m;
}

double GbdtModel::predict(const double* x) const {
  double m = margin(x);
  return task == Task::Regression ? m : sigmoid(m);
}

double GbdtModel::predict(const Vec& x) const {
  if ((int)x.size() != n_features)
    throw std::invalid_argument("prediction input length does not match the model");
  return predict(x.data());
}

namespace {

struct SplitCand {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct NodeStat {
  double g = 0.0;
  double h = 0.0;
  long cnt = 0;
};

double leaf_gain(double g, double h) { return g * g / (h + 1e-16); }

// One boosting round: level-wise exact greedy tree on gradient statistics.
// node_of[i] < 0 excludes sample i. Returns an empty tree when no split with
// positive gain exists at the root.
Tree fit_tree(const Table& X, const Vec& g, const Vec& h, const std::vector<long>& mult,
              const std::vector<std::vector<int>>& order, int max_depth, int min_leaf) {
  int n = X.n_rows;
  int n_f = X.n_cols;
  Tree tree;
  tree.nodes.push_back(TreeNode{});
  std::vector<int> node_of(n, 0);
  for (int i = 0; i < n; ++i)
    if (mult[i] == 0) node_of[i] = -1;

  std::vector<int> level_nodes{0};
  for (int depth = 0; depth < max_depth && !level_nodes.empty(); ++depth) {
    int n_level = (int)level_nodes.size();
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (int s = 0; s < n_level; ++s) slot_of[level_nodes[s]] = s;

    std::vector<NodeStat> totals(n_level);
    for (int i = 0; i < n; ++i) {
      int node = node_of[i];
      if (node < 0) continue;
      int s = slot_of[node];
      if (s < 0) continue;
      totals[s].g += g[i];
      totals[s].h += h[i];
      totals[s].cnt += mult[i];
    }

    // Best candidate per (feature, node); features scan in parallel, the
    // reduction below walks them in index order so ties keep the lowest
    // feature and then the lowest threshold.
    std::vector<std::vector<SplitCand>> per_feature(n_f);
    parallel_for(n_f, [&](int f) {
      std::vector<SplitCand>& best = per_feature[f];
      best.assign(n_level, SplitCand{});
      std::vector<NodeStat> left(n_level);
      std::vector<double> last(n_level, 0.0);
      std::vector<char> any(n_level, 0);
      for (int idx : order[f]) {
        int node = node_of[idx];
        if (node < 0) continue;
        int s = slot_of[node];
        if (s < 0) continue;
        double v = X(idx, f);
        if (any[s] && v > last[s]) {
          long cr = totals[s].cnt - left[s].cnt;
          if (left[s].cnt >= min_leaf && cr >= min_leaf) {
            double gl = left[s].g, hl = left[s].h;
            double gr = totals[s].g - gl, hr = totals[s].h - hl;
            double gain = leaf_gain(gl, hl) + leaf_gain(gr, hr) -
                          leaf_gain(totals[s].g, totals[s].h);
            if (gain > best[s].gain) {
              best[s].gain = gain;
              best[s].feature = f;
              best[s].threshold = 0.5 * (last[s] + v);
            }
          }
        }
        left[s].g += g[idx];
        left[s].h += h[idx];
        left[s].cnt += mult[idx];
        last[s] = v;
        any[s] = 1;
      }
    });

    std::vector<SplitCand> best(n_level);
    for (int f = 0; f < n_f; ++f)
      for (int s = 0; s < n_level; ++s)
        if (per_feature[f][s].gain > best[s].gain) best[s] = per_feature[f][s];

    std::vector<int> next_level;
    bool any_split = false;
    for (int s = 0; s < n_level; ++s) {
      int node = level_nodes[s];
      if (best[s].feature >= 0 && best[s].gain > 1e-12) {
        tree.nodes[node].feature = best[s].feature;
        tree.nodes[node].threshold = best[s].threshold;
        tree.nodes[node].left = (int)tree.nodes.size();
        tree.nodes.push_back(TreeNode{});
        tree.nodes[node].right = (int)tree.nodes.size();
        tree.nodes.push_back(TreeNode{});
        next_level.push_back(tree.nodes[node].left);
        next_level.push_back(tree.nodes[node].right);
        any_split = true;
      } else {
        tree.nodes[node].value = totals[s].g / (totals[s].h + 1e-16);
      }
    }
    if (!any_split && depth == 0) return Tree{};  // root is a lone leaf: no useful tree
    for (int i = 0; i < n; ++i) {
      int node = node_of[i];
      if (node < 0) continue;
      const TreeNode& nd = tree.nodes[node];
      if (nd.feature >= 0)
        node_of[i] = X(i, nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    level_nodes = std::move(next_level);
  }

  // Nodes still open after the depth limit become leaves.
  if (!level_nodes.empty()) {
    std::vector<NodeStat> totals(tree.nodes.size());
    for (int i = 0; i < n; ++i) {
      int node = node_of[i];
      if (node < 0) continue;
      totals[node].g += g[i];
      totals[node].h += h[i];
    }
    for (int node : level_nodes)
      tree.nodes[node].value = totals[node].g / (totals[node].h + 1e-16);
  }
  return tree;
}

GbdtModel fit_member(const Table& X, const Vec& y, const GbdtConfig& cfg,
                     const std::vector<std::vector<int>>& order, const std::vector<long>& mult) {
  int n = X.n_rows;
  GbdtModel model;
  model.task = cfg.task;
  model.n_features = X.n_cols;
  model.learning_rate = cfg.learning_rate;

  ClassWeights cw;
  Vec w(n, 1.0);
  double w_total = 0.0;
  if (cfg.task == Task::Classification) {
    Vec labels;
    for (int i = 0; i < n; ++i)
      if (mult[i] > 0) labels.push_back(y[i]);
    cw = class_weights(labels);
    for (int i = 0; i < n; ++i) w[i] = cw.of(y[i]) * (double)mult[i];
  } else {
    for (int i = 0; i < n; ++i) w[i] = (double)mult[i];
  }
  for (double v : w) w_total += v;

  if (cfg.task == Task::Regression) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += w[i] * y[i];
    model.base_score = s / w_total;
  } else {
    double pos = 0.0;
    for (int i = 0; i < n; ++i)
      if (y[i] > 0.0) pos += w[i];
    double p = clamp(pos / w_total, 1e-12, 1.0 - 1e-12);
    model.base_score = std::log(p / (1.0 - p));
  }

  Vec margin(n, model.base_score);
  Vec g(n), h(n);
  for (int stage = 0; stage < cfg.n_trees; ++stage) {
    if (cfg.task == Task::Regression) {
      for (int i = 0; i < n; ++i) {
        g[i] = w[i] * (y[i] - margin[i]);
        h[i] = w[i];
      }
    } else {
      for (int i = 0; i < n; ++i) {
        double p = sigmoid(margin[i]);
        double y01 = y[i] > 0.0 ? 1.0 : 0.0;
        g[i] = w[i] * (y01 - p);
        h[i] = w[i] * std::max(p * (1.0 - p), 1e-12);
      }
    }
    Tree tree = fit_tree(X, g, h, mult, order, cfg.max_depth, cfg.min_samples_leaf);
    if (tree.nodes.empty()) break;
    model.trees.push_back(tree);
    for (int i = 0; i < n; ++i)
      if (mult[i] > 0) margin[i] += cfg.learning_rate * tree.predict(X.row_ptr(i));

    double loss = 0.0;
    if (cfg.task == Task::Regression) {
      for (int i = 0; i < n; ++i) {
        double d = y[i] - margin[i];
        loss += w[i] * d * d;
      }
    } else {
      for (int i = 0; i < n; ++i) {
        double p = clamp(sigmoid(margin[i]), 1e-12, 1.0 - 1e-12);
        double y01 = y[i] > 0.0 ? 1.0 : 0.0;
        loss -= w[i] * (y01 * std::log(p) + (1.0 - y01) * std::log(1.0 - p));
      }
    }
    model.train_loss.push_back(loss / w_total);
  }
  return model;
}

}  // namespace

GbdtModel fit_gbdt(const Table& X, const Vec& y, const GbdtConfig& cfg) {
  GbdtConfig one = cfg;
  one.ensemble = 1;
  return fit_gbdt_ensemble(X, y, one).members[0];
}

GbdtEnsemble fit_gbdt_ensemble(const Table& X, const Vec& y, const GbdtConfig& cfg) {
  int n = X.n_rows;
  if (n == 0) throw DataError("cannot fit on an empty sample table");
  if ((int)y.size() != n) throw DataError("label count does not match the sample count");
  if (cfg.n_trees < 0 || cfg.max_depth < 1 || cfg.learning_rate <= 0.0 ||
      cfg.min_samples_leaf < 1 || cfg.ensemble < 1)
    throw ConfigError("bad boosted-tree configuration");
  for (double v : X.v)
    if (!std::isfinite(v)) throw DataError("non-finite feature value in training data");
  for (double v : y)
    if (!std::isfinite(v)) throw DataError("non-finite label in training data");
  if (cfg.task == Task::Classification)
    for (double v : y)
      if (v != 1.0 && v != -1.0) throw DataError("classification labels must be -1 or +1");

  std::vector<std::vector<int>> order(X.n_cols);
  parallel_for(X.n_cols, [&](int f) {
    std::vector<int>& o = order[f];
    o.resize(n);
    for (int i = 0; i < n; ++i) o[i] = i;
    std::sort(o.begin(), o.end(), [&](int a, int b) {
      double va = X(a, f), vb = X(b, f);
      if (va != vb) return va < vb;
      return a < b;
    });
  });

  GbdtEnsemble ens;
  Rng rng(splitmix64(cfg.seed ^ 0x9bd7u));
  for (int m = 0; m < cfg.ensemble; ++m) {
    std::vector<long> mult(n, 1);
    if (m > 0) {
      std::fill(mult.begin(), mult.end(), 0);
      Rng r = rng.derive((uint64_t)m);
      for (int i = 0; i < n; ++i) ++mult[r.uniform_int(n)];
    }
    ens.members.push_back(fit_member(X, y, cfg, order, mult));
  }
  return ens;
}

std::string gbdt_to_json(const GbdtEnsemble& m) {
  nlohmann::json j;
  j["format"] = 1;
  j["kind"] = "gbdt";
  nlohmann::json members = nlohmann::json::array();
  for (const GbdtModel& mod : m.members) {
    nlohmann::json jm;
    jm["task"] = mod.task == Task::Regression ? "regression" : "classification";
    jm["n_features"] = mod.n_features;
    jm["base_score"] = mod.base_score;
    jm["learning_rate"] = mod.learning_rate;
    jm["train_loss"] = mod.train_loss;
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& t : mod.trees) {
      nlohmann::json jt;
      std::vector<int> feature, left, right;
      Vec threshold, value;
      for (const TreeNode& nd : t.nodes) {
        feature.push_back(nd.feature);
        threshold.push_back(nd.threshold);
        left.push_back(nd.left);
        right.push_back(nd.right);
        value.push_back(nd.value);
      }
      jt["feature"] = feature;
      jt["threshold"] = threshold;
      jt["left"] = left;
      jt["right"] = right;
      jt["value"] = value;
      trees.push_back(jt);
    }
    jm["trees"] = trees;
    members.push_back(jm);
  }
  j["members"] = members;
  return j.dump();
}

GbdtEnsemble gbdt_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "gbdt") throw DataError("model file is not a boosted-tree model");
  GbdtEnsemble ens;
  for (const auto& jm : j.at("members")) {
    GbdtModel mod;
    mod.task = jm.at("task") == "regression" ? Task::Regression : Task::Classification;
    mod.n_features = jm.at("n_features");
    mod.base_score = jm.at("base_score");
    mod.learning_rate = jm.at("learning_rate");
    mod.train_loss = jm.at("train_loss").get<Vec>();
    for (const auto& jt : jm.at("trees")) {
      Tree t;
      auto feature = jt.at("feature").get<std::vector<int>>();
      auto threshold = jt.at("threshold").get<Vec>();
      auto left = jt.at("left").get<std::vector<int>>();
      auto right = jt.at("right").get<std::vector<int>>();
      auto value = jt.at("value").get<Vec>();
      for (size_t i = 0; i < feature.size(); ++i)
        t.nodes.push_back(TreeNode{feature[i], threshold[i], left[i], right[i], value[i]});
      mod.trees.push_back(std::move(t));
    }
    ens.members.push_back(std::move(mod));
  }
  if (ens.members.empty()) throw DataError("model file holds no ensemble members");
  return ens;
}

}  // namespace dynafs
