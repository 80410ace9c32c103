#include "dynafs/svg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace dynafs {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string cell_color(double v) {
  // White at 0 to a saturated blue at 1.
  const double x = clamp(v, 0.0, 1.0);
  const int r = (int)std::lround(255.0 - 225.0 * x);
  const int g = (int)std::lround(255.0 - 180.0 * x);
  const int b = (int)std::lround(255.0 - 75.0 * x);
  std::ostringstream os;
  os << "rgb(" << r << ',' << g << ',' << b << ')';
  return os.str();
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string svg_activation(const ActivationMap& map) {
  const int cell = 14;
  const int label_w = 160;
  const int top = 30;
  const int n_r = map.grid.n_rows;
  const int n_c = map.grid.n_cols;
  const int width = label_w + n_c * cell + 20;
  const int height = top + n_r * cell + 20;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"monospace\" font-size=\"10\">\n";
  os << "<text x=\"" << label_w << "\" y=\"14\">acquisition frequency per tick</text>\n";
  for (int r = 0; r < n_r; ++r) {
    const int y = top + r * cell;
    os << "<text x=\"4\" y=\"" << y + cell - 4 << "\">" << map.names[(size_t)r] << "</text>\n";
    for (int c = 0; c < n_c; ++c) {
      os << "<rect x=\"" << label_w + c * cell << "\" y=\"" << y << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"" << cell_color(map.grid(r, c))
         << "\" stroke=\"#ddd\"/>\n";
    }
  }
  for (int c = 0; c < n_c; c += 5)
    os << "<text x=\"" << label_w + c * cell << "\" y=\"" << top + n_r * cell + 12 << "\">" << c
       << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string svg_curve(const std::vector<CurvePoint>& points, Task task) {
  const int width = 520, height = 360, ml = 60, mr = 20, mt = 20, mb = 50;
  std::map<std::string, std::vector<CurvePoint>> by_source;
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const CurvePoint& p : points) {
    const double x = std::log10(std::max(p.achieved_cost, 1e-6));
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, p.loss);
    y_max = std::max(y_max, p.loss);
    by_source[p.source].push_back(p);
  }
  if (points.empty()) {
    x_min = 0.0;
    x_max = 1.0;
    y_min = 0.0;
    y_max = 1.0;
  }
  if (x_max - x_min < 1e-9) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max - y_min < 1e-9) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double plot_w = width - ml - mr, plot_h = height - mt - mb;
  auto px = [&](double cost) {
    const double x = std::log10(std::max(cost, 1e-6));
    return ml + (x - x_min) / (x_max - x_min) * plot_w;
  };
  auto py = [&](double loss) { return mt + (1.0 - (loss - y_min) / (y_max - y_min)) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"monospace\" font-size=\"11\">\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w << "\" height=\""
     << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << ml + plot_w / 2 - 60 << "\" y=\"" << height - 12
     << "\">log10 per-tick cost</text>\n";
  os << "<text x=\"12\" y=\"" << mt + plot_h / 2
     << "\" transform=\"rotate(-90 12 " << mt + plot_h / 2 << ")\">"
     << (task == Task::Regression ? "mae" : "1-auroc") << "</text>\n";

  int color_i = 0;
  int legend_y = mt + 14;
  for (auto& [source, pts] : by_source) {
    std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) {
      return a.achieved_cost < b.achieved_cost;
    });
    const char* color = kPalette[color_i % 6];
    ++color_i;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const CurvePoint& p : pts) os << fmt(px(p.achieved_cost)) << ',' << fmt(py(p.loss)) << ' ';
    os << "\"/>\n";
    for (const CurvePoint& p : pts)
      os << "<circle cx=\"" << fmt(px(p.achieved_cost)) << "\" cy=\"" << fmt(py(p.loss))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << ml + plot_w - 150 << "\" y=\"" << legend_y << "\" fill=\"" << color
       << "\">" << source << "</text>\n";
    legend_y += 14;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace dynafs
