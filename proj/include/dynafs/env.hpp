#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dynafs/cost.hpp"
#include "dynafs/data.hpp"

namespace dynafs {

struct EnvConfig {
  // The transition reveals the hidden column belonging to the state column
  // being formed. When set, it reveals the next newer column instead (clamped
  // at the final tick); kept as a switch because either reading of the
  // transition is defensible.
  bool reveal_current_tick = false;
};

// Sequential acquisition over one episode. The observation starts as a
// constant masked column; each step copies the selected entries of the
// hidden column into the observation and carries the rest forward.
class AcquisitionEnv {
 public:
  explicit AcquisitionEnv(EnvConfig cfg = {}) : cfg_(cfg) {}

  // Returns the initial observation column (all mask fill).
  const Vec& reset(const EpisodeData& episode);
  // Applies one acquisition decision and returns the next observation column.
  const Vec& step(const std::vector<uint8_t>& action);
  bool done() const { return ep_ == nullptr || cursor_ >= ep_->x.cols; }
  // Index of the next action to take, 0-based.
  int cursor() const { return cursor_; }
  int n_ticks() const { return ep_ ? ep_->x.cols : 0; }
  const Vec& observation() const { return obs_; }

 private:
  EnvConfig cfg_;
  const EpisodeData* ep_ = nullptr;
  int cursor_ = 0;
  Vec obs_;
};

// A per-feature selection-probability source. Implementations carry their own
// recurrent state; clone() hands a fresh instance so episodes can run in
// parallel workers.
struct Policy {
  virtual ~Policy() = default;
  virtual void begin_episode() = 0;
  virtual Vec action_probs(const Vec& obs, const std::vector<uint8_t>& prev_action) = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
};

// Fixed per-feature probabilities; handy for tests and oracles.
struct ConstantPolicy : Policy {
  Vec probs;

  explicit ConstantPolicy(Vec p) : probs(std::move(p)) {}
  void begin_episode() override {}
  Vec action_probs(const Vec&, const std::vector<uint8_t>&) override { return probs; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<ConstantPolicy>(probs);
  }
};

enum class RolloutMode { Sample, Deterministic };

struct SynthesizedEpisode {
  // (n_features x (n_ticks + 1)): column 0 is the constant initial column.
  Mat s;
  ActionMatrix actions;
};

// Rolls the policy over every episode. Sampling draws each feature's
// selection from its probability; deterministic thresholds at 0.5. Episode i
// uses an RNG stream derived from (seed, i), so results do not depend on the
// worker count.
std::vector<SynthesizedEpisode> synthesize_states(const std::vector<EpisodeData>& episodes,
                                                  const Policy& policy, RolloutMode mode,
                                                  uint64_t seed, EnvConfig cfg = {});

// Writes synthesized observations to the events CSV format plus a sidecar
// with the acquisition mask in the same layout.
void export_synthesized(const std::vector<EpisodeData>& episodes,
                        const std::vector<SynthesizedEpisode>& synth,
                        const std::vector<FeatureSpec>& specs, double tick_hours,
                        const std::string& events_path, const std::string& mask_path);

}  // namespace dynafs
