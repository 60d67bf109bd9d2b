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


#pragma once

#include <string>
#include <vector>

#include "cfvi/fvi.hpp"

namespace cfvi {

// Writes to `path.tmp` and renames, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Reads a learning-curve CSV (lines starting with '#' are skipped). Throws
/// Error when the file is missing, malformed or has no data rows.
std::vector<CurveRecord> read_learning_curve(const std::string& path);

// Mean return with the min/max band on top, success rate below.
std::string learning_curve_svg(const std::vector<CurveRecord>& curve,
                               const std::string& title);

struct CurveSeries {
  std::string label;
  std::vector<CurveRecord> curve;
};
// One mean-return line per series.
std::string multi_curve_svg(const std::vector<CurveSeries>& series,
                            const std::string& title);

/// Value and first action component on an n x n grid over the state domain
/// of a two-dimensional system. Row i, column j holds (x0[j], x1[i]).
struct GridMaps {
  Vec x0, x1;
  Mat value;
  Mat action;
};
GridMaps value_grid(const Problem& problem, const ValueEnsemble& ens, int n);

// Columns: x0, x1, value, action.
std::string grid_csv(const GridMaps& grid, const std::string& config_hash);
std::string heatmap_svg(const Vec& x0, const Vec& x1, const Mat& z,
                        const std::string& title, const std::string& x0_label,
                        const std::string& x1_label);

}  // namespace cfvi
