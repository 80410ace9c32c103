#pragma once

#include "dynafs/core.hpp"

namespace dynafs {

// Inverse-frequency class weights for -1/+1 labels: the weight of each class
// is the share of the opposite class, so the weighted class masses balance.
struct ClassWeights {
  double w_neg = 0.5;
  double w_pos = 0.5;

  double of(double label) const { return label > 0.0 ? w_pos : w_neg; }
};

inline ClassWeights class_weights(const Vec& labels) {
  long n_pos = 0, n_neg = 0;
  for (double y : labels) {
    if (y > 0.0) {
      ++n_pos;
    } else {
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0)
    throw DataError("class weights need both labels present");
  double n = (double)(n_pos + n_neg);
  return ClassWeights{(double)n_pos / n, (double)n_neg / n};
}

}  // namespace dynafs
