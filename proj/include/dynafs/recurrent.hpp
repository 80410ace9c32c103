#pragma once

#include <string>
#include <vector>

#include "dynafs/core.hpp"
#include "dynafs/data.hpp"
#include "dynafs/predictor.hpp"

namespace dynafs {

// Gated recurrent cell with input/forget/output gates and a tanh candidate.
// Parameters are stored gate-major in the order [i, f, g, o].
struct LstmCell {
  int n_in = 0;
  int n_hidden = 0;
  Vec w_ih;  // (4H x I) row-major
  Vec w_hh;  // (4H x H) row-major
  Vec b;     // 4H

  void init(int in, int hidden, Rng& rng);
};

struct LstmState {
  Vec h;
  Vec c;

  explicit LstmState(int hidden = 0) : h(hidden, 0.0), c(hidden, 0.0) {}
};

// Per-step activations kept for backpropagation through time.
struct LstmTrace {
  std::vector<Vec> x, gi, gf, gg, go, c, h, tanh_c;

  int steps() const { return (int)x.size(); }
  void clear();
};

struct LstmGrads {
  Vec w_ih, w_hh, b;

  void init(const LstmCell& cell);
  void zero();
};

void lstm_step(const LstmCell& cell, const Vec& x, LstmState& st);
void lstm_forward(const LstmCell& cell, const std::vector<Vec>& xs, LstmTrace& trace);
// dh_inj[t] is dLoss/dh_t from the heads; gradients accumulate into g.
void lstm_backward(const LstmCell& cell, const LstmTrace& trace,
                   const std::vector<Vec>& dh_inj, LstmGrads& g);

struct RecurrentConfig {
  int hidden = 64;
  int epochs = 20;
  double learning_rate = 1e-3;
  double lr_floor = 1e-4;
  double adam_eps = 1e-8;
  Task task = Task::Regression;
  uint64_t seed = 0;
};

// Recurrent per-tick predictor. The input sequence is the constant masked
// column followed by one observation column per tick; the output at position
// t+1 is the prediction for tick t, so every prediction only sees columns up
// to its own tick.
struct RecurrentPredictor {
  Task task = Task::Regression;
  int n_features = 0;
  LstmCell cell;
  Vec head_w;  // (out x H) row-major, out = 1 (regression) or 2 (classification)
  Vec head_b;
  ClassWeights weights;

  int out_dim() const { return task == Task::Regression ? 1 : 2; }
};

struct PredictorCursor {
  LstmState st;
  bool primed = false;
};

// Pushes one observation column and returns the prediction for that tick
// (value, or positive-class probability). Feeds the constant column first.
double predictor_step(const RecurrentPredictor& m, PredictorCursor& cur, const Vec& col);

// Predictions for every tick of a (n_features x n_ticks) observation matrix.
Vec predict_sequence(const RecurrentPredictor& m, const Mat& ticks);

// Loss (MAE or class-weighted cross-entropy, averaged over ticks) and, when
// grad pointers are given, analytic parameter gradients.
double predictor_loss(const RecurrentPredictor& m, const Mat& ticks, const Vec& y,
                      LstmGrads* cell_g, Vec* head_w_g, Vec* head_b_g);

RecurrentPredictor fit_recurrent(const std::vector<const EpisodeData*>& train,
                                 const std::vector<const EpisodeData*>& val,
                                 int n_features, const RecurrentConfig& cfg);

std::vector<Vec*> predictor_params(RecurrentPredictor& m);

std::string recurrent_to_json(const RecurrentPredictor& m);
RecurrentPredictor recurrent_from_json(const std::string& text);

}  // namespace dynafs
