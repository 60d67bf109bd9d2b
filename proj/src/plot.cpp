/*
 Copyright 2026 The cfvi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include "cfvi/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cfvi/errors.hpp"

namespace cfvi {

namespace {

constexpr const char* kCurveColumns[] = {"iteration",   "loss",         "mean_return",
                                         "min_return",  "max_return",   "success_rate",
                                         "dataset_size"};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void widen() {
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

// Maps data to a pixel box.
struct Frame {
  double left, top, width, height;
  Range x, y;
  double px(double v) const { return left + (v - x.lo) / (x.hi - x.lo) * width; }
  double py(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }

  std::string axes(const std::string& xlabel, const std::string& ylabel) const {
    std::ostringstream os;
    os << "<rect x='" << left << "' y='" << top << "' width='" << width << "' height='"
       << height << "' fill='none' stroke='#444'/>\n";
    os << "<text x='" << left << "' y='" << top + height + 16 << "' font-size='11'>"
       << fmt(x.lo) << "</text>\n";
    os << "<text x='" << left + width << "' y='" << top + height + 16
       << "' font-size='11' text-anchor='end'>" << fmt(x.hi) << "</text>\n";
    os << "<text x='" << left + width / 2 << "' y='" << top + height + 30
       << "' font-size='12' text-anchor='middle'>" << escape(xlabel) << "</text>\n";
    os << "<text x='" << left - 6 << "' y='" << top + 10
       << "' font-size='11' text-anchor='end'>" << fmt(y.hi) << "</text>\n";
    os << "<text x='" << left - 6 << "' y='" << top + height
       << "' font-size='11' text-anchor='end'>" << fmt(y.lo) << "</text>\n";
    os << "<text x='" << left - 48 << "' y='" << top + height / 2
       << "' font-size='12' text-anchor='middle' transform='rotate(-90 " << left - 48 << " "
       << top + height / 2 << ")'>" << escape(ylabel) << "</text>\n";
    return os.str();
  }

  template <typename F>
  std::string polyline(const std::vector<CurveRecord>& c, F f, const std::string& color) const {
    std::ostringstream os;
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (const auto& r : c) os << px(r.iteration) << "," << py(f(r)) << " ";
    os << "'/>\n";
    return os.str();
  }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string svg_open(int w, int h, const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
     << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << w / 2 << "' y='22' font-size='14' text-anchor='middle'>"
     << escape(title) << "</text>\n";
  return os.str();
}

Range iteration_range(const std::vector<CurveRecord>& c) {
  Range r{static_cast<double>(c.front().iteration), static_cast<double>(c.back().iteration)};
  r.widen();
  return r;
}

// Five-stop viridis approximation, t in [0, 1].
std::string color_map(double t) {
  static const double stops[5][3] = {{68, 1, 84},
                                     {59, 82, 139},
                                     {33, 145, 140},
                                     {94, 201, 98},
                                     {253, 231, 37}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
  const int i = std::min(static_cast<int>(t), 3);
  const double f = t - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + tmp + "'");
    f << contents;
    if (!f) throw Error("cannot write '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<CurveRecord> read_learning_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing learning curve '" + path + "'");
  std::string line;
  std::map<std::string, std::size_t> col;
  std::vector<CurveRecord> out;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (col.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
      for (const char* name : kCurveColumns) {
        if (!col.count(name)) throw Error(path + ": missing column '" + name + "'");
      }
      continue;
    }
    auto num = [&](const char* name) {
      const std::size_t i = col.at(name);
      if (i >= cells.size()) {
        throw Error(path + ":" + std::to_string(lineno) + ": too few columns");
      }
      try {
        return std::stod(cells[i]);
      } catch (const std::exception&) {
        throw Error(path + ":" + std::to_string(lineno) + ": bad number in column '" +
                    name + "'");
      }
    };
    CurveRecord r;
    r.iteration = static_cast<int>(num("iteration"));
    r.loss = num("loss");
    r.mean_return = num("mean_return");
    r.min_return = num("min_return");
    r.max_return = num("max_return");
    r.success_rate = num("success_rate");
    r.dataset_size = static_cast<int>(num("dataset_size"));
    out.push_back(r);
  }
  if (out.empty()) throw Error(path + ": learning curve has no data rows");
  return out;
}

std::string learning_curve_svg(const std::vector<CurveRecord>& curve,
                               const std::string& title) {
  if (curve.empty()) throw Error("empty learning curve");
  Range ret{curve.front().min_return, curve.front().max_return};
  for (const auto& r : curve) {
    ret.lo = std::min(ret.lo, r.min_return);
    ret.hi = std::max(ret.hi, r.max_return);
  }
  ret.widen();
  const Frame top{80, 40, 520, 240, iteration_range(curve), ret};
  const Frame bottom{80, 340, 520, 100, iteration_range(curve), Range{0.0, 1.0}};

  std::ostringstream os;
  os << svg_open(640, 490, title);
  os << "<polygon fill='#1f77b4' fill-opacity='0.2' stroke='none' points='";
  for (const auto& r : curve) os << top.px(r.iteration) << "," << top.py(r.max_return) << " ";
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    os << top.px(it->iteration) << "," << top.py(it->min_return) << " ";
  }
  os << "'/>\n";
  os << top.polyline(curve, [](const CurveRecord& r) { return r.mean_return; }, kPalette[0]);
  os << top.axes("iteration", "return");
  os << bottom.polyline(curve, [](const CurveRecord& r) { return r.success_rate; },
                        kPalette[1]);
  os << bottom.axes("iteration", "success rate");
  os << "</svg>\n";
  return os.str();
}

std::string multi_curve_svg(const std::vector<CurveSeries>& series,
                            const std::string& title) {
  Range it{0.0, 0.0}, ret{0.0, 0.0};
  bool first = true;
  for (const auto& s : series) {
    for (const auto& r : s.curve) {
      if (first) {
        it = {double(r.iteration), double(r.iteration)};
        ret = {r.mean_return, r.mean_return};
        first = false;
      }
      it.lo = std::min(it.lo, double(r.iteration));
      it.hi = std::max(it.hi, double(r.iteration));
      ret.lo = std::min(ret.lo, r.mean_return);
      ret.hi = std::max(ret.hi, r.mean_return);
    }
  }
  if (first) throw Error("no curves to plot");
  it.widen();
  ret.widen();
  const Frame f{80, 40, 420, 300, it, ret};
  std::ostringstream os;
  os << svg_open(660, 400, title);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    os << f.polyline(series[k].curve, [](const CurveRecord& r) { return r.mean_return; },
                     color);
    os << "<text x='520' y='" << 50 + 16 * k << "' font-size='11' fill='" << color << "'>"
       << escape(series[k].label) << "</text>\n";
  }
  os << f.axes("iteration", "mean return");
  os << "</svg>\n";
  return os.str();
}

GridMaps value_grid(const Problem& problem, const ValueEnsemble& ens, int n) {
  const auto& model = problem.model();
  if (model.state_dim() != 2) throw Error("value grid needs a two-dimensional state");
  if (n < 2) throw Error("value grid needs at least 2 points per axis");
  const Bounds& d = model.domain();
  GridMaps g;
  g.x0 = Vec::LinSpaced(n, d.lower[0], d.upper[0]);
  g.x1 = Vec::LinSpaced(n, d.lower[1], d.upper[1]);
  Mat xs(2, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) xs.col(i * n + j) << g.x0[j], g.x1[i];
  }
  Mat grads;
  const Vec v = ens.values_and_gradients(xs, &grads);
  g.value.resize(n, n);
  g.action.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int k = i * n + j;
      g.value(i, j) = v[k];
      g.action(i, j) = problem.policy(xs.col(k), grads.col(k))[0];
    }
  }
  return g;
}

std::string grid_csv(const GridMaps& grid, const std::string& config_hash) {
  std::ostringstream os;
  os.precision(17);
  os << "# config_hash=" << config_hash << "\nx0,x1,value,action\n";
  for (Eigen::Index i = 0; i < grid.x1.size(); ++i) {
    for (Eigen::Index j = 0; j < grid.x0.size(); ++j) {
      os << grid.x0[j] << "," << grid.x1[i] << "," << grid.value(i, j) << ","
         << grid.action(i, j) << "\n";
    }
  }
  return os.str();
}

std::string heatmap_svg(const Vec& x0, const Vec& x1, const Mat& z, const std::string& title,
                        const std::string& x0_label, const std::string& x1_label) {
  const Eigen::Index nx = x0.size(), ny = x1.size();
  if (nx < 2 || ny < 2 || z.rows() != ny || z.cols() != nx) {
    throw Error("heatmap: grid and values differ in shape");
  }
  Range zr{z.minCoeff(), z.maxCoeff()};
  zr.widen();
  Range xr{x0[0], x0[nx - 1]}, yr{x1[0], x1[ny - 1]};
  const Frame f{80, 40, 400, 400, xr, yr};
  const double cw = f.width / nx, ch = f.height / ny;
  std::ostringstream os;
  os << svg_open(600, 500, title);
  for (Eigen::Index i = 0; i < ny; ++i) {
    for (Eigen::Index j = 0; j < nx; ++j) {
      os << "<rect x='" << f.left + j * cw << "' y='" << f.top + (ny - 1 - i) * ch
         << "' width='" << cw + 0.05 << "' height='" << ch + 0.05 << "' fill='"
         << color_map((z(i, j) - zr.lo) / (zr.hi - zr.lo)) << "'/>\n";
    }
  }
  os << f.axes(x0_label, x1_label);
  for (int k = 0; k <= 20; ++k) {
    os << "<rect x='500' y='" << 40 + (20 - k) * 19 << "' width='20' height='19.5' fill='"
       << color_map(k / 20.0) << "'/>\n";
  }
  os << "<text x='525' y='50' font-size='11'>" << fmt(zr.hi) << "</text>\n";
  os << "<text x='525' y='438' font-size='11'>" << fmt(zr.lo) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace cfvi
