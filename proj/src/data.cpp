#include "dynafs/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dynafs {

namespace {

std::string feature_name(int k, int n_dynamic) {
  char buf[16];
  if (k < n_dynamic) {
    std::snprintf(buf, sizeof(buf), "d%02d", k);
  } else {
    std::snprintf(buf, sizeof(buf), "s%02d", k - n_dynamic);
  }
  return buf;
}

double median_of(Vec v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_subjects < 1) throw ConfigError("n_subjects must be >= 1");
  if (cfg.n_features < 1) throw ConfigError("n_features must be >= 1");
  if (cfg.n_static < 0 || cfg.n_static >= cfg.n_features)
    throw ConfigError("n_static must be in [0, n_features)");
  int n_dynamic = cfg.n_features - cfg.n_static;
  if (cfg.n_informative < 1) throw ConfigError("n_informative must be >= 1");
  if (cfg.n_informative > n_dynamic)
    throw ConfigError("n_informative must not exceed the dynamic feature count");
  if (cfg.tick_min < 2 || cfg.tick_max < cfg.tick_min)
    throw ConfigError("tick range must satisfy 2 <= tick_min <= tick_max");
  if (cfg.ar_coeff < 0.0 || cfg.ar_coeff >= 1.0)
    throw ConfigError("ar_coeff must be in [0, 1)");
  if (cfg.noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
  if (cfg.time_varying && cfg.n_informative < 2)
    throw ConfigError("time_varying needs n_informative >= 2");

  Rng root(cfg.seed);
  SyntheticDataset out;
  out.data.specs.resize(cfg.n_features);
  for (int k = 0; k < cfg.n_features; ++k) {
    FeatureSpec& s = out.data.specs[k];
    s.name = feature_name(k, n_dynamic);
    s.kind = k < n_dynamic ? FeatureKind::Dynamic : FeatureKind::Static;
    s.unit_cost = 1.0;
    s.obs_cost = 1.0;
    s.per_tick_cost = 1.0;
  }

  Vec w(cfg.n_informative);
  for (int k = 0; k < cfg.n_informative; ++k) {
    double mag = 0.5 + root.uniform();
    w[k] = root.uniform() < 0.5 ? -mag : mag;
    out.informative.push_back(out.data.specs[k].name);
  }
  // Split point of the informative set for the time-varying variant.
  int half = cfg.n_informative / 2;

  std::vector<Vec> scores(cfg.n_subjects);
  out.data.episodes.resize(cfg.n_subjects);
  for (int i = 0; i < cfg.n_subjects; ++i) {
    Rng rng = root.derive(100000 + (uint64_t)i);
    int n_ticks = cfg.tick_min + rng.uniform_int(cfg.tick_max - cfg.tick_min + 1);
    EpisodeData& ep = out.data.episodes[i];
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "subj%05d", i);
    ep.subject_id = idbuf;
    ep.x = Mat(cfg.n_features, n_ticks);
    for (int k = 0; k < n_dynamic; ++k) {
      double v = rng.normal();
      ep.x(k, 0) = v;
      for (int t = 1; t < n_ticks; ++t) {
        v = cfg.ar_coeff * v + cfg.noise_std * rng.normal();
        ep.x(k, t) = v;
      }
    }
    for (int k = n_dynamic; k < cfg.n_features; ++k) {
      double v = rng.normal();
      for (int t = 0; t < n_ticks; ++t) ep.x(k, t) = v;
    }
    scores[i].resize(n_ticks);
    for (int t = 0; t < n_ticks; ++t) {
      int lo = 0, hi = cfg.n_informative;
      if (cfg.time_varying) {
        if (t < n_ticks / 2) {
          hi = half;
        } else {
          lo = half;
        }
      }
      double z = 0.0;
      for (int k = lo; k < hi; ++k) z += w[k] * ep.x(k, t);
      z += cfg.noise_std * rng.normal();
      scores[i][t] = z;
    }
    if (cfg.task == Task::Regression) ep.y = scores[i];
  }

  if (cfg.task == Task::Classification) {
    Vec all;
    for (const Vec& s : scores) all.insert(all.end(), s.begin(), s.end());
    double thr = median_of(all);
    for (int i = 0; i < cfg.n_subjects; ++i) {
      EpisodeData& ep = out.data.episodes[i];
      ep.y.resize(scores[i].size());
      for (size_t t = 0; t < scores[i].size(); ++t)
        ep.y[t] = scores[i][t] > thr ? 1.0 : -1.0;
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& s, const std::string& what, int line_no) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad " + what + " value '" + s + "' at line " + std::to_string(line_no));
  }
}

}  // namespace

RawDataset ingest_csv(const std::string& events_path, const std::string& schema_path) {
  RawDataset out;

  std::ifstream schema(schema_path);
  if (!schema) throw DataError("cannot open schema file: " + schema_path);
  std::string line;
  int line_no = 0;
  std::map<std::string, size_t> spec_index;
  while (std::getline(schema, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (line_no == 1) {
      if (cells.size() < 3 || trim(cells[0]) != "name" || trim(cells[1]) != "kind" ||
          trim(cells[2]) != "obs_cost")
        throw DataError("schema header must be name,kind,obs_cost");
      continue;
    }
    if (cells.size() < 3) throw DataError("schema line " + std::to_string(line_no) + " is short");
    FeatureSpec s;
    s.name = trim(cells[0]);
    std::string kind = trim(cells[1]);
    if (kind == "static") {
      s.kind = FeatureKind::Static;
    } else if (kind == "dynamic") {
      s.kind = FeatureKind::Dynamic;
    } else {
      throw DataError("schema kind must be static or dynamic, got '" + kind + "'");
    }
    s.obs_cost = parse_real(trim(cells[2]), "obs_cost", line_no);
    s.unit_cost = 1.0;
    s.per_tick_cost = s.obs_cost;
    if (spec_index.count(s.name)) throw DataError("duplicate schema feature: " + s.name);
    spec_index[s.name] = out.specs.size();
    out.specs.push_back(s);
  }
  if (out.specs.empty()) throw DataError("schema declares no features");

  std::ifstream events(events_path);
  if (!events) throw DataError("cannot open events file: " + events_path);
  std::map<std::string, size_t> subject_index;
  int col_subject = -1, col_feature = -1, col_time = -1, col_value = -1;
  line_no = 0;
  bool have_header = false;
  while (std::getline(events, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      for (size_t i = 0; i < cells.size(); ++i) {
        std::string h = trim(cells[i]);
        if (h == "subject_id") col_subject = (int)i;
        if (h == "feature_name") col_feature = (int)i;
        if (h == "time_hours") col_time = (int)i;
        if (h == "value") col_value = (int)i;
      }
      if (col_subject < 0) throw DataError("events file missing column subject_id");
      if (col_feature < 0) throw DataError("events file missing column feature_name");
      if (col_time < 0) throw DataError("events file missing column time_hours");
      if (col_value < 0) throw DataError("events file missing column value");
      have_header = true;
      continue;
    }
    int needed = std::max(std::max(col_subject, col_feature), std::max(col_time, col_value));
    if ((int)cells.size() <= needed)
      throw DataError("events line " + std::to_string(line_no) + " is short");
    std::string sid = trim(cells[col_subject]);
    std::string fname = trim(cells[col_feature]);
    double t = parse_real(trim(cells[col_time]), "time_hours", line_no);
    double v = parse_real(trim(cells[col_value]), "value", line_no);
    if (fname != "label" && !spec_index.count(fname))
      throw DataError("events reference feature '" + fname + "' absent from the schema");
    auto it = subject_index.find(sid);
    if (it == subject_index.end()) {
      it = subject_index.emplace(sid, out.subjects.size()).first;
      out.subjects.push_back(RawSubject{sid, {}});
    }
    out.subjects[it->second].streams[fname].emplace_back(t, v);
  }
  for (RawSubject& s : out.subjects) {
    for (auto& kv : s.streams)
      std::stable_sort(kv.second.begin(), kv.second.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return out;
}

namespace {

// Linear interpolation with hold beyond the ends.
double interp_linear(const std::vector<std::pair<double, double>>& ev, double t) {
  if (t <= ev.front().first) return ev.front().second;
  if (t >= ev.back().first) return ev.back().second;
  size_t hi = 1;
  while (ev[hi].first < t) ++hi;
  size_t lo = hi - 1;
  double t0 = ev[lo].first, t1 = ev[hi].first;
  if (t1 == t0) return ev[hi].second;
  double a = (t - t0) / (t1 - t0);
  return ev[lo].second + a * (ev[hi].second - ev[lo].second);
}

// Previous-value hold: the value of the latest event at or before t.
double interp_hold(const std::vector<std::pair<double, double>>& ev, double t) {
  if (t <= ev.front().first) return ev.front().second;
  size_t i = 0;
  while (i + 1 < ev.size() && ev[i + 1].first <= t) ++i;
  return ev[i].second;
}

}  // namespace

EpisodeData interpolate_to_ticks(const RawSubject& subject,
                                 const std::vector<FeatureSpec>& specs,
                                 double tick_hours) {
  if (tick_hours <= 0.0) throw ConfigError("tick_hours must be > 0");
  for (const FeatureSpec& s : specs) {
    auto it = subject.streams.find(s.name);
    if (it == subject.streams.end() || it->second.empty())
      throw DataError("subject " + subject.id + " has no events for feature " + s.name);
  }
  auto label_it = subject.streams.find("label");
  if (label_it == subject.streams.end() || label_it->second.empty())
    throw DataError("subject " + subject.id + " has no label events");

  double t_min = 1e300, t_max = -1e300;
  for (const auto& kv : subject.streams) {
    if (kv.second.empty()) continue;
    t_min = std::min(t_min, kv.second.front().first);
    t_max = std::max(t_max, kv.second.back().first);
  }
  double span = t_max - t_min;
  int n_ticks = (int)std::ceil(span / tick_hours - 1e-9) + 1;
  if (n_ticks < 2)
    throw DataError("subject " + subject.id + " spans fewer than 2 ticks");

  EpisodeData ep;
  ep.subject_id = subject.id;
  ep.x = Mat((int)specs.size(), n_ticks);
  ep.y.resize(n_ticks);
  for (int t = 0; t < n_ticks; ++t) {
    double time = t_min + t * tick_hours;
    for (size_t k = 0; k < specs.size(); ++k)
      ep.x((int)k, t) = interp_linear(subject.streams.at(specs[k].name), time);
    ep.y[t] = interp_hold(label_it->second, time);
  }
  return ep;
}

DatasetSplits split_dataset(const Dataset& ds, double f_train, double f_val, double f_test,
                            uint64_t seed) {
  if (f_train <= 0.0 || f_val <= 0.0 || f_test <= 0.0)
    throw ConfigError("split fractions must all be positive");
  if (std::fabs(f_train + f_val + f_test - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
  int n = (int)ds.episodes.size();
  if (n < 3) throw DataError("need at least 3 subjects to split");

  int n_train = (int)std::llround(f_train * n);
  int n_val = (int)std::llround(f_val * n);
  int n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw DataError("split fractions leave an empty split");

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(splitmix64(seed ^ 0x5157a3u));
  rng.shuffle(idx);

  DatasetSplits out;
  out.specs = ds.specs;
  for (int i = 0; i < n_train; ++i) out.train.push_back(ds.episodes[idx[i]]);
  for (int i = n_train; i < n_train + n_val; ++i) out.val.push_back(ds.episodes[idx[i]]);
  for (int i = n_train + n_val; i < n; ++i) out.test.push_back(ds.episodes[idx[i]]);
  return out;
}

void normalize_splits(DatasetSplits& splits) {
  int n_f = (int)splits.specs.size();
  if (splits.train.empty()) throw DataError("cannot normalize with an empty train split");

  Vec mean(n_f, 0.0), sq(n_f, 0.0);
  long count = 0;
  for (const EpisodeData& ep : splits.train) {
    for (int t = 0; t < ep.x.cols; ++t)
      for (int k = 0; k < n_f; ++k) mean[k] += ep.x(k, t);
    count += ep.x.cols;
  }
  for (int k = 0; k < n_f; ++k) mean[k] /= (double)count;
  for (const EpisodeData& ep : splits.train)
    for (int t = 0; t < ep.x.cols; ++t)
      for (int k = 0; k < n_f; ++k) {
        double d = ep.x(k, t) - mean[k];
        sq[k] += d * d;
      }

  std::vector<int> keep;
  NormStats norm;
  for (int k = 0; k < n_f; ++k) {
    double sd = std::sqrt(sq[k] / (double)count);
    if (sd < 1e-12 * (1.0 + std::fabs(mean[k]))) {
      norm.dropped.push_back(splits.specs[k].name);
    } else {
      keep.push_back(k);
      norm.mean.push_back(mean[k]);
      norm.stddev.push_back(sd);
    }
  }
  if (keep.empty()) throw DataError("all features have zero variance on the train split");

  auto rewrite = [&](std::vector<EpisodeData>& eps) {
    for (EpisodeData& ep : eps) {
      Mat nx((int)keep.size(), ep.x.cols);
      for (int t = 0; t < ep.x.cols; ++t)
        for (size_t j = 0; j < keep.size(); ++j)
          nx((int)j, t) = (ep.x(keep[j], t) - norm.mean[j]) / norm.stddev[j];
      ep.x = std::move(nx);
    }
  };
  rewrite(splits.train);
  rewrite(splits.val);
  rewrite(splits.test);

  std::vector<FeatureSpec> nspecs;
  for (int k : keep) nspecs.push_back(splits.specs[k]);
  splits.specs = std::move(nspecs);
  splits.norm = std::move(norm);
}

int total_ticks(const std::vector<EpisodeData>& eps) {
  int n = 0;
  for (const EpisodeData& ep : eps) n += ep.x.cols;
  return n;
}

double mean_seq_ticks(const std::vector<EpisodeData>& eps) {
  if (eps.empty()) throw DataError("mean sequence length of an empty split");
  return (double)total_ticks(eps) / (double)eps.size();
}

}  // namespace dynafs
