#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dynafs/core.hpp"

namespace dynafs {

enum class FeatureKind { Static, Dynamic };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Dynamic;
  // Cost of one acquisition in the flat-cost setting.
  double unit_cost = 1.0;
  // Cost of one real observation (used by the observation-derived setting).
  double obs_cost = 1.0;
  // Per-tick acquisition cost in the observation-derived setting. For static
  // features this equals obs_cost.
  double per_tick_cost = 1.0;
};

// One subject: hidden feature matrix x (n_features x n_ticks) and a per-tick
// label vector of the same length. Classification labels are -1/+1.
struct EpisodeData {
  std::string subject_id;
  Mat x;
  Vec y;
};

struct Dataset {
  std::vector<FeatureSpec> specs;
  std::vector<EpisodeData> episodes;
};

struct SyntheticDataset {
  Dataset data;
  // Names of the features that actually drive the label.
  std::vector<std::string> informative;
};

struct SyntheticConfig {
  int n_subjects = 1000;
  int n_features = 16;
  int n_informative = 4;
  int n_static = 2;
  int tick_min = 10;
  int tick_max = 30;
  double ar_coeff = 0.9;
  double noise_std = 0.5;
  // When set, the label is driven by the first half of the informative set in
  // the first half of each sequence and by the second half after that.
  bool time_varying = false;
  Task task = Task::Regression;
  uint64_t seed = 0;
};

struct NormStats {
  // Parallel to the retained feature order.
  Vec mean;
  Vec stddev;
  std::vector<std::string> dropped;

  double apply(double v, int k) const { return (v - mean[k]) / stddev[k]; }
  double invert(double v, int k) const { return v * stddev[k] + mean[k]; }
};

struct DatasetSplits {
  std::vector<FeatureSpec> specs;
  std::vector<EpisodeData> train;
  std::vector<EpisodeData> val;
  std::vector<EpisodeData> test;
  NormStats norm;
};

// Raw irregular observations for one subject: per feature, (time_hours, value)
// pairs sorted by time. The reserved stream name "label" carries the target.
struct RawSubject {
  std::string id;
  std::map<std::string, std::vector<std::pair<double, double>>> streams;
};

struct RawDataset {
  std::vector<FeatureSpec> specs;
  std::vector<RawSubject> subjects;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg);

// Events CSV with header subject_id,feature_name,time_hours,value plus a
// schema CSV with header name,kind,obs_cost. Unknown feature names in the
// events are rejected; the reserved name "label" needs no schema entry.
RawDataset ingest_csv(const std::string& events_path, const std::string& schema_path);

// Resamples one subject onto a uniform grid spanning its observations
// (inclusive of both ends). Features interpolate linearly and hold beyond
// their first/last event; the label stream holds its previous value.
EpisodeData interpolate_to_ticks(const RawSubject& subject,
                                 const std::vector<FeatureSpec>& specs,
                                 double tick_hours);

// Subject-level split by fractions (train, val, test). Counts are rounded;
// every split must end up non-empty.
DatasetSplits split_dataset(const Dataset& ds, double f_train, double f_val, double f_test,
                            uint64_t seed);

// Standardizes every feature by train mean/std and drops zero-variance
// features from all splits and from the spec list. Labels are untouched.
void normalize_splits(DatasetSplits& splits);

int total_ticks(const std::vector<EpisodeData>& eps);
double mean_seq_ticks(const std::vector<EpisodeData>& eps);

}  // namespace dynafs
