#pragma once

#include <string>
#include <vector>

#include "dynafs/evaluate.hpp"

namespace dynafs {

// Heatmap of per-feature, per-tick acquisition frequencies with row labels.
std::string svg_activation(const ActivationMap& map);

// One polyline per source over (log10 achieved cost, loss).
std::string svg_curve(const std::vector<CurvePoint>& points, Task task);

}  // namespace dynafs
