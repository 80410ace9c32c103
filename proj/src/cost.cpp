#include "dynafs/cost.hpp"

#include <cmath>

namespace dynafs {

Vec step_cost_vector(const std::vector<uint8_t>& action_t,
                     const std::vector<uint8_t>& fetched_before,
                     const std::vector<FeatureSpec>& specs, CostMode mode) {
  size_t n = specs.size();
  if (action_t.size() != n || fetched_before.size() != n)
    throw DataError("action vector length does not match the feature count");
  Vec out(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    if (!action_t[k]) continue;
    const FeatureSpec& s = specs[k];
    if (s.kind == FeatureKind::Static) {
      if (fetched_before[k]) continue;
      out[k] = mode == CostMode::Simple ? s.unit_cost : s.obs_cost;
    } else {
      out[k] = mode == CostMode::Simple ? s.unit_cost : s.per_tick_cost;
    }
  }
  return out;
}

Vec step_cost_vector(const std::vector<uint8_t>& action_t, const ActionMatrix& history,
                     const std::vector<FeatureSpec>& specs, CostMode mode) {
  std::vector<uint8_t> fetched(specs.size(), 0);
  for (int k = 0; k < history.n_features; ++k)
    for (int t = 0; t < history.n_ticks; ++t)
      if (history.at(k, t)) {
        fetched[k] = 1;
        break;
      }
  return step_cost_vector(action_t, fetched, specs, mode);
}

CostReport episode_cost(const ActionMatrix& actions, const std::vector<FeatureSpec>& specs,
                        CostMode mode) {
  if ((size_t)actions.n_features != specs.size())
    throw DataError("action matrix feature count does not match the spec list");
  if (actions.n_ticks == 0) throw DataError("action matrix has no ticks");
  CostReport rep;
  rep.per_tick.resize(actions.n_ticks, 0.0);
  std::vector<uint8_t> fetched(specs.size(), 0);
  std::vector<uint8_t> act(specs.size());
  for (int t = 0; t < actions.n_ticks; ++t) {
    for (size_t k = 0; k < specs.size(); ++k) act[k] = actions.at((int)k, t);
    Vec c = step_cost_vector(act, fetched, specs, mode);
    double sum = 0.0;
    for (double v : c) sum += v;
    rep.per_tick[t] = sum;
    rep.total += sum;
    for (size_t k = 0; k < specs.size(); ++k)
      if (act[k]) fetched[k] = 1;
  }
  rep.mean_per_tick = rep.total / (double)actions.n_ticks;
  return rep;
}

std::vector<FeatureSpec> derive_per_tick_costs(const std::vector<RawSubject>& subjects,
                                               const std::vector<FeatureSpec>& specs,
                                               double tick_hours) {
  if (subjects.empty()) throw DataError("no subjects to derive costs from");
  if (tick_hours <= 0.0) throw ConfigError("tick_hours must be > 0");

  // Sequence lengths on the tick grid, matching interpolate_to_ticks.
  Vec seq_len;
  seq_len.reserve(subjects.size());
  for (const RawSubject& s : subjects) {
    double t_min = 1e300, t_max = -1e300;
    for (const auto& kv : s.streams) {
      if (kv.second.empty()) continue;
      t_min = std::min(t_min, kv.second.front().first);
      t_max = std::max(t_max, kv.second.back().first);
    }
    if (t_max < t_min) continue;
    seq_len.push_back(std::ceil((t_max - t_min) / tick_hours - 1e-9) + 1.0);
  }
  if (seq_len.empty()) throw DataError("no subject has any events");
  double mean_len = mean_of(seq_len);

  std::vector<FeatureSpec> out = specs;
  for (FeatureSpec& spec : out) {
    long n_with = 0, n_single = 0, n_obs = 0;
    for (const RawSubject& s : subjects) {
      auto it = s.streams.find(spec.name);
      if (it == s.streams.end() || it->second.empty()) continue;
      ++n_with;
      n_obs += (long)it->second.size();
      if (it->second.size() == 1) ++n_single;
    }
    if (n_with == 0) throw DataError("feature " + spec.name + " is never observed");
    if ((double)n_single > 0.9 * (double)n_with) {
      spec.kind = FeatureKind::Static;
      spec.per_tick_cost = spec.obs_cost;
    } else {
      spec.kind = FeatureKind::Dynamic;
      double mean_obs = (double)n_obs / (double)subjects.size();
      spec.per_tick_cost = spec.obs_cost * mean_obs / mean_len;
    }
  }
  return out;
}

}  // namespace dynafs
