#include "dynafs/env.hpp"

#include <fstream>

namespace dynafs {

const Vec& AcquisitionEnv::reset(const EpisodeData& episode) {
  if (episode.x.cols < 2) throw DataError("episode must have at least 2 ticks");
  ep_ = &episode;
  cursor_ = 0;
  obs_.assign(episode.x.rows, kMaskFill);
  return obs_;
}

const Vec& AcquisitionEnv::step(const std::vector<uint8_t>& action) {
  if (done()) throw std::logic_error("step called on a finished episode");
  if ((int)action.size() != ep_->x.rows)
    throw DataError("action length does not match the feature count");
  int reveal = cfg_.reveal_current_tick ? std::min(cursor_ + 1, ep_->x.cols - 1) : cursor_;
  for (int k = 0; k < ep_->x.rows; ++k)
    if (action[k]) obs_[k] = ep_->x(k, reveal);
  ++cursor_;
  return obs_;
}

std::vector<SynthesizedEpisode> synthesize_states(const std::vector<EpisodeData>& episodes,
                                                  const Policy& policy, RolloutMode mode,
                                                  uint64_t seed, EnvConfig cfg) {
  std::vector<SynthesizedEpisode> out(episodes.size());
  Rng root(splitmix64(seed ^ 0x5e55u));
  parallel_for((int)episodes.size(), [&](int i) {
    const EpisodeData& ep = episodes[i];
    Rng rng = root.derive((uint64_t)i);
    std::unique_ptr<Policy> pol = policy.clone();
    pol->begin_episode();
    AcquisitionEnv env(cfg);
    env.reset(ep);
    SynthesizedEpisode& se = out[i];
    se.s = Mat(ep.x.rows, ep.x.cols + 1, kMaskFill);
    se.actions = ActionMatrix(ep.x.rows, ep.x.cols);
    std::vector<uint8_t> prev(ep.x.rows, 0), act(ep.x.rows, 0);
    for (int t = 0; t < ep.x.cols; ++t) {
      Vec probs = pol->action_probs(env.observation(), prev);
      for (int k = 0; k < ep.x.rows; ++k) {
        bool pick = mode == RolloutMode::Sample ? rng.bernoulli(probs[k]) : probs[k] > 0.5;
        act[k] = pick ? 1 : 0;
        se.actions.at(k, t) = act[k];
      }
      const Vec& obs = env.step(act);
      se.s.set_col(t + 1, obs);
      prev = act;
    }
  });
  return out;
}

void export_synthesized(const std::vector<EpisodeData>& episodes,
                        const std::vector<SynthesizedEpisode>& synth,
                        const std::vector<FeatureSpec>& specs, double tick_hours,
                        const std::string& events_path, const std::string& mask_path) {
  if (episodes.size() != synth.size())
    throw DataError("episode and synthesized-state counts differ");
  std::ofstream ev(events_path);
  std::ofstream mk(mask_path);
  if (!ev || !mk) throw DataError("cannot open export files for writing");
  ev << "subject_id,feature_name,time_hours,value\n";
  mk << "subject_id,feature_name,time_hours,value\n";
  for (size_t i = 0; i < episodes.size(); ++i) {
    const EpisodeData& ep = episodes[i];
    const SynthesizedEpisode& se = synth[i];
    for (int t = 0; t < ep.x.cols; ++t) {
      double time = t * tick_hours;
      for (size_t k = 0; k < specs.size(); ++k) {
        ev << ep.subject_id << ',' << specs[k].name << ',' << time << ','
           << se.s((int)k, t + 1) << '\n';
        mk << ep.subject_id << ',' << specs[k].name << ',' << time << ','
           << (int)se.actions.at((int)k, t) << '\n';
      }
    }
  }
}

}  // namespace dynafs
