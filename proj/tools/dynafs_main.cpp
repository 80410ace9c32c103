#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dynafs/baselines.hpp"
#include "dynafs/config.hpp"
#include "dynafs/svg.hpp"
#include "dynafs/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dynafs;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  os << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

DatasetSplits build_splits(const RunConfig& cfg, std::vector<std::string>* informative = nullptr) {
  Dataset ds;
  if (cfg.source == "synthetic") {
    SyntheticDataset s = generate_synthetic(cfg.synth);
    ds = std::move(s.data);
    if (informative) *informative = s.informative;
  } else {
    if (cfg.events_path.empty() || cfg.schema_path.empty())
      throw ConfigError("csv source needs data.events and data.schema");
    RawDataset raw = ingest_csv(cfg.events_path, cfg.schema_path);
    ds.specs = cfg.trainer.cost_mode == CostMode::Complex
                   ? derive_per_tick_costs(raw.subjects, raw.specs, cfg.tick_hours)
                   : raw.specs;
    for (const RawSubject& sub : raw.subjects)
      ds.episodes.push_back(interpolate_to_ticks(sub, ds.specs, cfg.tick_hours));
  }
  DatasetSplits splits = split_dataset(ds, cfg.f_train, cfg.f_val, cfg.f_test,
                                       splitmix64(cfg.trainer.seed ^ 0x5eedc0deULL));
  normalize_splits(splits);
  return splits;
}

void write_dataset_csv(const Dataset& ds, double tick_hours, const fs::path& events_path,
                       const fs::path& schema_path) {
  std::ostringstream ev;
  ev.precision(17);
  ev << "subject_id,feature_name,time_hours,value\n";
  for (const EpisodeData& ep : ds.episodes) {
    for (int t = 0; t < ep.x.cols; ++t) {
      const double time = t * tick_hours;
      for (int k = 0; k < ep.x.rows; ++k)
        ev << ep.subject_id << ',' << ds.specs[(size_t)k].name << ',' << time << ','
           << ep.x(k, t) << '\n';
      ev << ep.subject_id << ",label," << time << ',' << ep.y[(size_t)t] << '\n';
    }
  }
  write_file(events_path, ev.str());

  std::ostringstream sc;
  sc.precision(17);
  sc << "name,kind,obs_cost\n";
  for (const FeatureSpec& s : ds.specs)
    sc << s.name << ',' << (s.kind == FeatureKind::Static ? "static" : "dynamic") << ','
       << s.obs_cost << '\n';
  write_file(schema_path, sc.str());
}

BaselinePredictorKind baseline_kind(const std::string& name) {
  if (name == "gbdt") return BaselinePredictorKind::Gbdt;
  if (name == "recurrent") return BaselinePredictorKind::Recurrent;
  if (name == "linear") return BaselinePredictorKind::Linear;
  return BaselinePredictorKind::Logistic;
}

Vec compute_importance(const RunConfig& cfg, const DatasetSplits& splits) {
  if (cfg.baseline_method == "permutation") {
    PretrainResult pre = pretrain_predictor(splits, cfg.trainer);
    const PredictorHandle handle = pre.predictor;
    SequencePredictFn fn = [handle](const Mat& x) { return predict_episode_full(handle, x); };
    return permutation_importance(fn, splits.val, cfg.trainer.task, cfg.baseline_repeats,
                                  splitmix64(cfg.trainer.seed ^ 0x1327455aULL));
  }
  Table X(total_ticks(splits.train), (int)splits.specs.size());
  Vec y((size_t)X.n_rows);
  int r = 0;
  for (const EpisodeData& ep : splits.train)
    for (int t = 0; t < ep.x.cols; ++t, ++r) {
      const double* col = ep.x.col_ptr(t);
      std::copy(col, col + ep.x.rows, X.row_ptr(r));
      y[(size_t)r] = ep.y[(size_t)t];
    }
  Vec importance((size_t)X.n_cols, 0.0);
  if (cfg.baseline_method == "lasso") {
    LassoConfig lc;
    lc.seed = splitmix64(cfg.trainer.seed ^ 0x1a550ULL);
    LassoResult res = lasso_importance(X, y, lc);
    if (!res.converged)
      std::fprintf(stderr, "warning: lasso path did not fully converge; duality gap %.3e\n",
                   res.duality_gap);
    for (size_t j = 0; j < res.coef.size(); ++j) importance[j] = std::fabs(res.coef[j]);
  } else {
    if (cfg.trainer.task != Task::Classification)
      throw ConfigError("baseline.method l1_logistic needs task=classification");
    L1LogisticResult res = l1_logistic_importance(X, y, L1LogisticConfig{});
    if (!res.converged)
      std::fprintf(stderr, "warning: l1 classifier stopped at max_iter without converging\n");
    for (size_t j = 0; j < res.coef.size(); ++j) importance[j] = std::fabs(res.coef[j]);
  }
  return importance;
}

int cmd_run(const RunConfig& cfg) {
  DatasetSplits splits = build_splits(cfg);
  PipelineResult res = run_pipeline(splits, cfg.trainer, cfg.out_dir, &std::cout);
  std::cout << "converged=" << (res.converged ? "true" : "false") << " steps=" << res.steps
            << " test_cost=" << res.test_eval.cost << " test_loss=" << res.test_eval.loss << '\n';
  return res.converged ? 0 : 3;
}

int cmd_gen_data(const RunConfig& cfg) {
  if (cfg.source != "synthetic") throw ConfigError("gen-data needs data.source=synthetic");
  SyntheticDataset s = generate_synthetic(cfg.synth);
  const fs::path dir(cfg.out_dir);
  write_dataset_csv(s.data, cfg.tick_hours, dir / "events.csv", dir / "schema.csv");
  json meta;
  meta["n_subjects"] = cfg.synth.n_subjects;
  meta["informative"] = s.informative;
  write_file(dir / "generated.json", meta.dump(2) + "\n");
  std::cout << "wrote " << (dir / "events.csv").string() << " and schema.csv ("
            << s.data.episodes.size() << " subjects)\n";
  return 0;
}

int cmd_train_predictor(const RunConfig& cfg) {
  DatasetSplits splits = build_splits(cfg);
  PretrainResult pre = pretrain_predictor(splits, cfg.trainer);
  const fs::path dir(cfg.out_dir);
  write_file(dir / "predictor_pretrained.json", predictor_to_json(pre.predictor));
  json m;
  m["train_loss"] = pre.train_loss;
  m["val_loss"] = pre.val_loss;
  write_file(dir / "pretrain_metrics.json", m.dump(2) + "\n");
  std::cout << "pretrained predictor: train_loss=" << pre.train_loss
            << " val_loss=" << pre.val_loss << '\n';
  return 0;
}

int cmd_train_policy(const RunConfig& cfg) {
  DatasetSplits splits = build_splits(cfg);
  PretrainResult pre = pretrain_predictor(splits, cfg.trainer);
  PolicyTrainResult pt = train_policy(splits, pre, cfg.trainer, &std::cout);
  const fs::path dir(cfg.out_dir);
  write_file(dir / "actor.json", actor_to_json(pt.actor));
  write_file(dir / "critic.json", critic_to_json(pt.critic));
  write_file(dir / "predictor_pretrained.json", predictor_to_json(pre.predictor));
  std::ostringstream hist;
  for (const BatchLog& b : pt.history) hist << batch_log_json(b) << '\n';
  write_file(dir / "history.jsonl", hist.str());
  json m;
  m["converged"] = pt.converged;
  m["steps"] = pt.steps;
  m["beta_final"] = pt.final_beta;
  write_file(dir / "policy_metrics.json", m.dump(2) + "\n");
  return pt.converged ? 0 : 3;
}

int cmd_retrain_predictor(const RunConfig& cfg) {
  DatasetSplits splits = build_splits(cfg);
  const fs::path dir(cfg.out_dir);
  const ActorNet actor = actor_from_json(read_file(dir / "actor.json"));
  PretrainResult pre = pretrain_predictor(splits, cfg.trainer);
  PredictorHandle fin = retrain_predictor(splits, actor, pre, cfg.trainer);
  write_file(dir / "predictor_final.json", predictor_to_json(fin));
  SplitEval ev = evaluate_policy(splits.test, splits.specs, actor, fin, cfg.trainer, 0, nullptr);
  json m;
  m["test_cost"] = ev.cost;
  m["test_loss"] = ev.loss;
  write_file(dir / "retrain_metrics.json", m.dump(2) + "\n");
  std::cout << "retrained predictor: test_cost=" << ev.cost << " test_loss=" << ev.loss << '\n';
  return 0;
}

int cmd_baseline(const RunConfig& cfg) {
  DatasetSplits splits = build_splits(cfg);
  const Vec importance = compute_importance(cfg, splits);
  const double mean_ticks = mean_seq_ticks(splits.train);

  SubsetSelection sel;
  if (cfg.baseline_selector == "topk") {
    sel = select_topk(importance, splits.specs, cfg.trainer.c_max, mean_ticks,
                      cfg.trainer.cost_mode);
  } else {
    Vec seq_costs(splits.specs.size(), 0.0);
    for (size_t k = 0; k < splits.specs.size(); ++k) {
      const FeatureSpec& s = splits.specs[k];
      if (s.kind == FeatureKind::Static)
        seq_costs[k] = cfg.trainer.cost_mode == CostMode::Simple ? s.unit_cost : s.obs_cost;
      else
        seq_costs[k] = (cfg.trainer.cost_mode == CostMode::Simple ? s.unit_cost : s.per_tick_cost) *
                       mean_ticks;
    }
    sel = select_knapsack(importance, seq_costs, cfg.trainer.c_max * mean_ticks);
  }
  if (!sel.note.empty()) std::fprintf(stderr, "warning: %s\n", sel.note.c_str());

  BaselineRunResult res =
      train_baseline(splits, sel.selected, cfg.trainer.task, baseline_kind(cfg.baseline_predictor),
                     cfg.trainer.gbdt, cfg.trainer.recurrent, cfg.trainer.cost_mode);

  const fs::path dir(cfg.out_dir);
  std::ostringstream imp;
  imp.precision(17);
  imp << "feature,score,selected,cost\n";
  std::vector<uint8_t> picked(splits.specs.size(), 0);
  for (int k : sel.selected) picked[(size_t)k] = 1;
  for (size_t k = 0; k < splits.specs.size(); ++k) {
    const FeatureSpec& s = splits.specs[k];
    const double cost = s.kind == FeatureKind::Static
                            ? (cfg.trainer.cost_mode == CostMode::Simple ? s.unit_cost : s.obs_cost) /
                                  mean_ticks
                            : (cfg.trainer.cost_mode == CostMode::Simple ? s.unit_cost
                                                                         : s.per_tick_cost);
    imp << s.name << ',' << importance[k] << ',' << (picked[k] ? 1 : 0) << ',' << cost << '\n';
  }
  write_file(dir / "importance.csv", imp.str());

  json m;
  m["method"] = cfg.baseline_method;
  m["selector"] = cfg.baseline_selector;
  m["predictor"] = cfg.baseline_predictor;
  m["c_max"] = cfg.trainer.c_max;
  std::vector<std::string> names;
  for (int k : sel.selected) names.push_back(splits.specs[(size_t)k].name);
  m["selected"] = names;
  m["val_loss"] = res.val_loss;
  m["test_loss"] = res.test_loss;
  m["test_cost"] = res.test_cost;
  write_file(dir / "baseline_metrics.json", m.dump(2) + "\n");
  std::cout << "baseline: selected=" << names.size() << " test_cost=" << res.test_cost
            << " test_loss=" << res.test_loss << '\n';
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  if (cfg.sweep_c_max.empty()) throw ConfigError("sweep needs sweep.c_max_values");
  std::vector<CurvePoint> points;
  bool all_converged = true;
  for (size_t i = 0; i < cfg.sweep_c_max.size(); ++i) {
    TrainerConfig tc = cfg.trainer;
    tc.c_max = cfg.sweep_c_max[i];
    std::ostringstream sub;
    sub << cfg.out_dir << "/c_max_" << i;
    DatasetSplits splits = build_splits(cfg);
    PipelineResult res = run_pipeline(splits, tc, sub.str(), &std::cout);
    all_converged = all_converged && res.converged;
    points.push_back({tc.c_max, res.test_eval.cost, res.test_eval.loss, "policy"});
    std::cout << "sweep point " << i << ": c_max=" << tc.c_max << " cost=" << res.test_eval.cost
              << " loss=" << res.test_eval.loss << (res.converged ? "" : " (not converged)")
              << '\n';
  }
  const fs::path dir(cfg.out_dir);
  write_file(dir / "curve.csv", curve_csv(points, cfg.trainer.task));
  write_file(dir / "curve.svg", svg_curve(points, cfg.trainer.task));
  return all_converged ? 0 : 3;
}

int cmd_viz(const RunConfig& cfg) {
  DatasetSplits splits = build_splits(cfg);
  const fs::path dir(cfg.out_dir);
  const ActorNet actor = actor_from_json(read_file(dir / "actor.json"));
  int max_ticks = 0;
  for (const auto& ep : splits.test) max_ticks = std::max(max_ticks, ep.x.cols);
  ActivationMap map = policy_activation(splits.test, splits.specs, actor, cfg.trainer,
                                        cfg.activation_rollouts,
                                        std::min(cfg.activation_t_max, max_ticks),
                                        splitmix64(cfg.trainer.seed ^ 0xa11ac1ULL));
  write_file(dir / "activation.csv", activation_csv(map));
  write_file(dir / "activation.svg", svg_activation(map));
  std::cout << "wrote " << (dir / "activation.csv").string() << " and activation.svg\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cost-bounded dynamic feature acquisition"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  app.add_option("--config", config_path, "key=value run config file");
  auto* seed_opt = app.add_option("--seed", seed, "run seed (generator, splits, training)");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--set", overrides, "extra key=value config overrides");

  CLI::App* c_gen = app.add_subcommand("gen-data", "generate a synthetic dataset as CSV");
  CLI::App* c_pred = app.add_subcommand("train-predictor", "pretrain the predictor on full observations");
  CLI::App* c_pol = app.add_subcommand("train-policy", "pretrain, then optimize the acquisition policy");
  CLI::App* c_retrain = app.add_subcommand("retrain-predictor", "refit the predictor on policy-synthesized states");
  CLI::App* c_run = app.add_subcommand("run", "full pipeline: pretrain, policy, retrain, evaluate");
  CLI::App* c_base = app.add_subcommand("baseline", "static importance ranking + subset predictor");
  CLI::App* c_sweep = app.add_subcommand("sweep", "run the pipeline over a list of budgets");
  CLI::App* c_viz = app.add_subcommand("viz", "activation map for a saved policy");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : parse_run_config(config_path);
    for (const std::string& kv : overrides) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set needs key=value, got '" + kv + "'");
      apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_opt->count() > 0) seed_run_config(cfg, seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (c_gen->parsed()) return cmd_gen_data(cfg);
    if (c_pred->parsed()) return cmd_train_predictor(cfg);
    if (c_pol->parsed()) return cmd_train_policy(cfg);
    if (c_retrain->parsed()) return cmd_retrain_predictor(cfg);
    if (c_run->parsed()) return cmd_run(cfg);
    if (c_base->parsed()) return cmd_baseline(cfg);
    if (c_sweep->parsed()) return cmd_sweep(cfg);
    if (c_viz->parsed()) return cmd_viz(cfg);
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
