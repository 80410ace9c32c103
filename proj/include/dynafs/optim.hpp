#pragma once

#include <cmath>
#include <vector>

#include "dynafs/core.hpp"

namespace dynafs {

// Adam with bias correction over a list of parameter tensors.
struct AdamOpt {
  double beta1 = 0.9;
  double beta2 = 0.999;
  int t = 0;
  std::vector<Vec> m;
  std::vector<Vec> v;

  void step(const std::vector<Vec*>& params, const std::vector<Vec*>& grads, double lr,
            double eps) {
    if (m.empty()) {
      for (Vec* p : params) {
        m.emplace_back(p->size(), 0.0);
        v.emplace_back(p->size(), 0.0);
      }
    }
    ++t;
    double bc1 = 1.0 - std::pow(beta1, t);
    double bc2 = 1.0 - std::pow(beta2, t);
    for (size_t j = 0; j < params.size(); ++j) {
      Vec& p = *params[j];
      const Vec& g = *grads[j];
      for (size_t i = 0; i < p.size(); ++i) {
        m[j][i] = beta1 * m[j][i] + (1.0 - beta1) * g[i];
        v[j][i] = beta2 * v[j][i] + (1.0 - beta2) * g[i] * g[i];
        double mh = m[j][i] / bc1;
        double vh = v[j][i] / bc2;
        p[i] -= lr * mh / (std::sqrt(vh) + eps);
      }
    }
  }
};

inline double grad_global_norm(const std::vector<Vec*>& grads) {
  double s = 0.0;
  for (const Vec* g : grads)
    for (double v : *g) s += v * v;
  return std::sqrt(s);
}

// Scales gradients in place so their global norm is at most max_norm.
inline double clip_grad_norm(const std::vector<Vec*>& grads, double max_norm) {
  double norm = grad_global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (Vec* g : grads)
      for (double& v : *g) v *= scale;
  }
  return norm;
}

}  // namespace dynafs
