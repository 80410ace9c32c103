#include "dynafs/recurrent.hpp"

#include <algorithm>
#include <cmath>

#include "dynafs/optim.hpp"
#include "json.hpp"

namespace dynafs {

void LstmCell::init(int in, int hidden, Rng& rng) {
  n_in = in;
  n_hidden = hidden;
  double k = 1.0 / std::sqrt((double)hidden);
  w_ih.resize((size_t)4 * hidden * in);
  w_hh.resize((size_t)4 * hidden * hidden);
  b.assign((size_t)4 * hidden, 0.0);
  for (double& v : w_ih) v = (2.0 * rng.uniform() - 1.0) * k;
  for (double& v : w_hh) v = (2.0 * rng.uniform() - 1.0) * k;
  // Open forget gates at the start so signals survive early training.
  for (int j = 0; j < hidden; ++j) b[hidden + j] = 1.0;
}

void LstmTrace::clear() {
  x.clear();
  gi.clear();
  gf.clear();
  gg.clear();
  go.clear();
  c.clear();
  h.clear();
  tanh_c.clear();
}

void LstmGrads::init(const LstmCell& cell) {
  w_ih.assign(cell.w_ih.size(), 0.0);
  w_hh.assign(cell.w_hh.size(), 0.0);
  b.assign(cell.b.size(), 0.0);
}

void LstmGrads::zero() {
  std::fill(w_ih.begin(), w_ih.end(), 0.0);
  std::fill(w_hh.begin(), w_hh.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

namespace {

// pre = W_ih x + W_hh h_prev + b, then gates.
void cell_gates(const LstmCell& cell, const Vec& x, const Vec& h_prev, Vec& gi, Vec& gf,
                Vec& gg, Vec& go) {
  int H = cell.n_hidden, I = cell.n_in;
  Vec pre(cell.b);
  for (int r = 0; r < 4 * H; ++r) {
    const double* wi = cell.w_ih.data() + (size_t)r * I;
    double s = 0.0;
    for (int j = 0; j < I; ++j) s += wi[j] * x[j];
    const double* wh = cell.w_hh.data() + (size_t)r * H;
    for (int j = 0; j < H; ++j) s += wh[j] * h_prev[j];
    pre[r] += s;
  }
  gi.resize(H);
  gf.resize(H);
  gg.resize(H);
  go.resize(H);
  for (int j = 0; j < H; ++j) {
    gi[j] = sigmoid(pre[j]);
    gf[j] = sigmoid(pre[H + j]);
    gg[j] = std::tanh(pre[2 * H + j]);
    go[j] = sigmoid(pre[3 * H + j]);
  }
}

}  // namespace

void lstm_step(const LstmCell& cell, const Vec& x, LstmState& st) {
  int H = cell.n_hidden;
  Vec gi, gf, gg, go;
  cell_gates(cell, x, st.h, gi, gf, gg, go);
  for (int j = 0; j < H; ++j) {
    st.c[j] = gf[j] * st.c[j] + gi[j] * gg[j];
    st.h[j] = go[j] * std::tanh(st.c[j]);
  }
}

void lstm_forward(const LstmCell& cell, const std::vector<Vec>& xs, LstmTrace& trace) {
  int H = cell.n_hidden;
  trace.clear();
  Vec h_prev(H, 0.0), c_prev(H, 0.0);
  for (const Vec& x : xs) {
    Vec gi, gf, gg, go;
    cell_gates(cell, x, h_prev, gi, gf, gg, go);
    Vec c(H), h(H), tc(H);
    for (int j = 0; j < H; ++j) {
      c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
      tc[j] = std::tanh(c[j]);
      h[j] = go[j] * tc[j];
    }
    trace.x.push_back(x);
    trace.gi.push_back(std::move(gi));
    trace.gf.push_back(std::move(gf));
    trace.gg.push_back(std::move(gg));
    trace.go.push_back(std::move(go));
    trace.c.push_back(c);
    trace.tanh_c.push_back(std::move(tc));
    trace.h.push_back(h);
    h_prev = trace.h.back();
    c_prev = trace.c.back();
  }
}

void lstm_backward(const LstmCell& cell, const LstmTrace& trace,
                   const std::vector<Vec>& dh_inj, LstmGrads& g) {
  int H = cell.n_hidden, I = cell.n_in;
  int T = trace.steps();
  Vec dh_next(H, 0.0), dc_next(H, 0.0);
  Vec dpre(4 * H);
  const Vec zeros(H, 0.0);
  for (int t = T - 1; t >= 0; --t) {
    const Vec& h_prev = t > 0 ? trace.h[t - 1] : zeros;
    const Vec& c_prev = t > 0 ? trace.c[t - 1] : zeros;
    for (int j = 0; j < H; ++j) {
      double dh = dh_inj[t][j] + dh_next[j];
      double tc = trace.tanh_c[t][j];
      double i = trace.gi[t][j], f = trace.gf[t][j], gg = trace.gg[t][j], o = trace.go[t][j];
      double do_ = dh * tc;
      double dc = dh * o * (1.0 - tc * tc) + dc_next[j];
      double di = dc * gg;
      double df = dc * c_prev[j];
      double dg = dc * i;
      dc_next[j] = dc * f;
      dpre[j] = di * i * (1.0 - i);
      dpre[H + j] = df * f * (1.0 - f);
      dpre[2 * H + j] = dg * (1.0 - gg * gg);
      dpre[3 * H + j] = do_ * o * (1.0 - o);
    }
    const Vec& x = trace.x[t];
    for (int r = 0; r < 4 * H; ++r) {
      double d = dpre[r];
      if (d == 0.0) continue;
      double* gi_row = g.w_ih.data() + (size_t)r * I;
      for (int j = 0; j < I; ++j) gi_row[j] += d * x[j];
      double* gh_row = g.w_hh.data() + (size_t)r * H;
      for (int j = 0; j < H; ++j) gh_row[j] += d * h_prev[j];
      g.b[r] += d;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (int r = 0; r < 4 * H; ++r) {
      double d = dpre[r];
      if (d == 0.0) continue;
      const double* wh = cell.w_hh.data() + (size_t)r * H;
      for (int j = 0; j < H; ++j) dh_next[j] += d * wh[j];
    }
  }
}

namespace {

Vec head_out(const RecurrentPredictor& m, const Vec& h) {
  int out = m.out_dim(), H = m.cell.n_hidden;
  Vec z(out);
  for (int r = 0; r < out; ++r) {
    const double* w = m.head_w.data() + (size_t)r * H;
    double s = m.head_b[r];
    for (int j = 0; j < H; ++j) s += w[j] * h[j];
    z[r] = s;
  }
  return z;
}

double out_to_prediction(const RecurrentPredictor& m, const Vec& z) {
  if (m.task == Task::Regression) return z[0];
  double mx = std::max(z[0], z[1]);
  double e0 = std::exp(z[0] - mx), e1 = std::exp(z[1] - mx);
  return e1 / (e0 + e1);
}

std::vector<Vec> episode_inputs(const Mat& ticks) {
  std::vector<Vec> xs;
  xs.reserve(ticks.cols + 1);
  xs.emplace_back(ticks.rows, kMaskFill);
  for (int t = 0; t < ticks.cols; ++t) xs.push_back(ticks.col(t));
  return xs;
}

}  // namespace

double predictor_step(const RecurrentPredictor& m, PredictorCursor& cur, const Vec& col) {
  if (!cur.primed) {
    cur.st = LstmState(m.cell.n_hidden);
    lstm_step(m.cell, Vec(m.n_features, kMaskFill), cur.st);
    cur.primed = true;
  }
  lstm_step(m.cell, col, cur.st);
  return out_to_prediction(m, head_out(m, cur.st.h));
}

Vec predict_sequence(const RecurrentPredictor& m, const Mat& ticks) {
  PredictorCursor cur;
  Vec out(ticks.cols);
  for (int t = 0; t < ticks.cols; ++t) out[t] = predictor_step(m, cur, ticks.col(t));
  return out;
}

double predictor_loss(const RecurrentPredictor& m, const Mat& ticks, const Vec& y,
                      LstmGrads* cell_g, Vec* head_w_g, Vec* head_b_g) {
  int T = ticks.cols;
  int H = m.cell.n_hidden, out = m.out_dim();
  std::vector<Vec> xs = episode_inputs(ticks);
  LstmTrace trace;
  lstm_forward(m.cell, xs, trace);

  bool want_grads = cell_g != nullptr;
  std::vector<Vec> dh_inj;
  if (want_grads) dh_inj.assign(trace.steps(), Vec(H, 0.0));

  double loss = 0.0;
  for (int t = 0; t < T; ++t) {
    const Vec& h = trace.h[t + 1];
    Vec z = head_out(m, h);
    Vec dz(out, 0.0);
    if (m.task == Task::Regression) {
      double d = z[0] - y[t];
      loss += std::fabs(d);
      dz[0] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / (double)T;
    } else {
      double mx = std::max(z[0], z[1]);
      double e0 = std::exp(z[0] - mx), e1 = std::exp(z[1] - mx);
      double p1 = e1 / (e0 + e1);
      double w = m.weights.of(y[t]);
      double py = y[t] > 0.0 ? p1 : 1.0 - p1;
      loss += -w * std::log(std::max(py, 1e-300));
      double y1 = y[t] > 0.0 ? 1.0 : 0.0;
      dz[0] = w * ((1.0 - p1) - (1.0 - y1)) / (double)T;
      dz[1] = w * (p1 - y1) / (double)T;
    }
    if (want_grads) {
      for (int r = 0; r < out; ++r) {
        if (dz[r] == 0.0) continue;
        double* wg = head_w_g->data() + (size_t)r * H;
        const double* w = m.head_w.data() + (size_t)r * H;
        for (int j = 0; j < H; ++j) {
          wg[j] += dz[r] * h[j];
          dh_inj[t + 1][j] += dz[r] * w[j];
        }
        (*head_b_g)[r] += dz[r];
      }
    }
  }
  loss /= (double)T;
  if (want_grads) lstm_backward(m.cell, trace, dh_inj, *cell_g);
  return loss;
}

std::vector<Vec*> predictor_params(RecurrentPredictor& m) {
  return {&m.cell.w_ih, &m.cell.w_hh, &m.cell.b, &m.head_w, &m.head_b};
}

namespace {

double split_loss(const RecurrentPredictor& m, const std::vector<const EpisodeData*>& eps) {
  Vec losses(eps.size());
  std::vector<double> ticks(eps.size());
  parallel_for((int)eps.size(), [&](int i) {
    losses[i] = predictor_loss(m, eps[i]->x, eps[i]->y, nullptr, nullptr, nullptr) *
                (double)eps[i]->x.cols;
    ticks[i] = (double)eps[i]->x.cols;
  });
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < eps.size(); ++i) {
    num += losses[i];
    den += ticks[i];
  }
  return num / den;
}

}  // namespace

RecurrentPredictor fit_recurrent(const std::vector<const EpisodeData*>& train,
                                 const std::vector<const EpisodeData*>& val,
                                 int n_features, const RecurrentConfig& cfg) {
  if (train.empty()) throw DataError("no training episodes");
  if (cfg.hidden < 1 || cfg.epochs < 0 || cfg.learning_rate <= 0.0)
    throw ConfigError("bad recurrent predictor configuration");

  RecurrentPredictor m;
  m.task = cfg.task;
  m.n_features = n_features;
  Rng rng(splitmix64(cfg.seed ^ 0x77aa11u));
  m.cell.init(n_features, cfg.hidden, rng);
  int out = m.out_dim();
  m.head_w.resize((size_t)out * cfg.hidden);
  double k = 1.0 / std::sqrt((double)cfg.hidden);
  for (double& v : m.head_w) v = (2.0 * rng.uniform() - 1.0) * k;
  m.head_b.assign(out, 0.0);
  if (cfg.task == Task::Classification) {
    Vec labels;
    for (const EpisodeData* ep : train) labels.insert(labels.end(), ep->y.begin(), ep->y.end());
    m.weights = class_weights(labels);
  }

  if (cfg.epochs == 0) return m;

  AdamOpt adam;
  LstmGrads cell_g;
  cell_g.init(m.cell);
  Vec head_w_g(m.head_w.size(), 0.0), head_b_g(m.head_b.size(), 0.0);
  std::vector<Vec*> params = predictor_params(m);
  std::vector<Vec*> grads = {&cell_g.w_ih, &cell_g.w_hh, &cell_g.b, &head_w_g, &head_b_g};

  std::vector<int> order(train.size());
  for (size_t i = 0; i < train.size(); ++i) order[i] = (int)i;

  RecurrentPredictor best = m;
  double best_val = val.empty() ? 0.0 : split_loss(m, val);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double p = (double)epoch / (double)cfg.epochs;
    double lr = std::max(cfg.lr_floor, cfg.learning_rate * (1.0 - p * p));
    rng.shuffle(order);
    for (int i : order) {
      cell_g.zero();
      std::fill(head_w_g.begin(), head_w_g.end(), 0.0);
      std::fill(head_b_g.begin(), head_b_g.end(), 0.0);
      double loss =
          predictor_loss(m, train[i]->x, train[i]->y, &cell_g, &head_w_g, &head_b_g);
      if (!std::isfinite(loss))
        throw std::runtime_error(
            "recurrent predictor training diverged; reduce the learning rate");
      adam.step(params, grads, lr, cfg.adam_eps);
    }
    if (!val.empty()) {
      double vl = split_loss(m, val);
      if (vl < best_val) {
        best_val = vl;
        best = m;
      }
    } else {
      best = m;
    }
  }
  return best;
}

std::string recurrent_to_json(const RecurrentPredictor& m) {
  nlohmann::json j;
  j["format"] = 1;
  j["kind"] = "recurrent";
  j["task"] = m.task == Task::Regression ? "regression" : "classification";
  j["n_features"] = m.n_features;
  j["hidden"] = m.cell.n_hidden;
  j["w_ih"] = m.cell.w_ih;
  j["w_hh"] = m.cell.w_hh;
  j["b"] = m.cell.b;
  j["head_w"] = m.head_w;
  j["head_b"] = m.head_b;
  j["w_neg"] = m.weights.w_neg;
  j["w_pos"] = m.weights.w_pos;
  return j.dump();
}

RecurrentPredictor recurrent_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "recurrent")
    throw DataError("model file is not a recurrent predictor");
  RecurrentPredictor m;
  m.task = j.at("task") == "regression" ? Task::Regression : Task::Classification;
  m.n_features = j.at("n_features");
  m.cell.n_in = m.n_features;
  m.cell.n_hidden = j.at("hidden");
  m.cell.w_ih = j.at("w_ih").get<Vec>();
  m.cell.w_hh = j.at("w_hh").get<Vec>();
  m.cell.b = j.at("b").get<Vec>();
  m.head_w = j.at("head_w").get<Vec>();
  m.head_b = j.at("head_b").get<Vec>();
  m.weights.w_neg = j.at("w_neg");
  m.weights.w_pos = j.at("w_pos");
  return m;
}

}  // namespace dynafs
