#pragma once

#include <cstdint>
#include <vector>

#include "dynafs/data.hpp"

namespace dynafs {

// Simple charges every acquisition one unit (static features only on their
// first acquisition). Complex charges observation-derived per-tick costs for
// dynamic features and the one-observation cost on a static feature's first
// acquisition.
enum class CostMode { Simple, Complex };

// Binary acquisition decisions, (n_features x n_ticks), one column per tick.
struct ActionMatrix {
  int n_features = 0;
  int n_ticks = 0;
  std::vector<uint8_t> a;

  ActionMatrix() = default;
  ActionMatrix(int f, int t) : n_features(f), n_ticks(t), a((size_t)f * t, 0) {}
  uint8_t& at(int k, int t) { return a[(size_t)t * n_features + k]; }
  uint8_t at(int k, int t) const { return a[(size_t)t * n_features + k]; }
};

struct CostReport {
  Vec per_tick;         // total charged at each tick
  double total = 0.0;
  double mean_per_tick = 0.0;
};

// Per-feature charge for one tick. fetched_before[k] says whether feature k
// was acquired at any earlier tick, which zeroes repeat charges for static
// features.
Vec step_cost_vector(const std::vector<uint8_t>& action_t,
                     const std::vector<uint8_t>& fetched_before,
                     const std::vector<FeatureSpec>& specs, CostMode mode);

// Same, with the history given as the action matrix over ticks [0, t).
Vec step_cost_vector(const std::vector<uint8_t>& action_t, const ActionMatrix& history,
                     const std::vector<FeatureSpec>& specs, CostMode mode);

CostReport episode_cost(const ActionMatrix& actions, const std::vector<FeatureSpec>& specs,
                        CostMode mode);

// Fills per_tick_cost for every spec from raw observation streams: a feature
// seen exactly once in more than 90% of the sequences that contain it is
// classified static and keeps obs_cost as its one-off price; otherwise
// per_tick_cost = obs_cost * mean observations per sequence / mean sequence
// length in ticks. tick_hours fixes the tick grid used for sequence lengths.
std::vector<FeatureSpec> derive_per_tick_costs(const std::vector<RawSubject>& subjects,
                                               const std::vector<FeatureSpec>& specs,
                                               double tick_hours);

}  // namespace dynafs
