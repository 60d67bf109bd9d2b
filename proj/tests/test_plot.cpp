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


#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cfvi/config.hpp"
#include "cfvi/errors.hpp"
#include "cfvi/plot.hpp"

namespace cfvi {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cfvi_plot_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<CurveRecord> sample_curve() {
  std::vector<CurveRecord> c;
  for (int i = 0; i <= 4; ++i) {
    c.push_back({2 * i, 0.5 / (i + 1), -10.0 + i, -11.0 + i, -9.0 + i, i / 4.0, 100});
  }
  return c;
}

TEST(Plot, ReadsLearningCurveSkippingComments) {
  const fs::path d = scratch("read");
  std::ofstream(d / "c.csv") << "# config_hash=0123\n"
                                "iteration,loss,mean_return,min_return,max_return,success_rate,"
                                "dataset_size\n0,0.5,-10,-12,-8,0,200\n2,0.25,-9.5,-10,-9,1,200\n";
  const auto c = read_learning_curve((d / "c.csv").string());
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1].iteration, 2);
  EXPECT_EQ(c[1].success_rate, 1.0);
  EXPECT_EQ(c[0].min_return, -12.0);
  fs::remove_all(d);
}

TEST(Plot, EmptyOrMissingCurveIsAnError) {
  const fs::path d = scratch("empty");
  std::ofstream(d / "empty.csv") << "";
  std::ofstream(d / "header.csv")
      << "iteration,loss,mean_return,min_return,max_return,success_rate,dataset_size\n";
  std::ofstream(d / "cols.csv") << "iteration,loss\n0,1\n";
  EXPECT_THROW(read_learning_curve((d / "empty.csv").string()), Error);
  EXPECT_THROW(read_learning_curve((d / "header.csv").string()), Error);
  EXPECT_THROW(read_learning_curve((d / "cols.csv").string()), Error);
  EXPECT_THROW(read_learning_curve((d / "none.csv").string()), Error);
  fs::remove_all(d);
}

TEST(Plot, CurveSvgIsWellFormed) {
  const std::string svg = learning_curve_svg(sample_curve(), "a < b");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '<'), std::count(svg.begin(), svg.end(), '>'));
  EXPECT_THROW(learning_curve_svg({}, "x"), Error);
  EXPECT_THROW(multi_curve_svg({}, "x"), Error);
  EXPECT_NO_THROW(multi_curve_svg({{"18.4", sample_curve()}, {"46", sample_curve()}}, "b"));
}

TEST(Plot, GridValuesEqualNetworkAtNodes) {
  ExperimentConfig c;
  c.value_net.hidden = {8};
  const TrainSetup s = build_setup(c);
  const ValueEnsemble ens(s.problem.features(), s.problem.model().desired_state(),
                          c.value_net, 5);
  const GridMaps g = value_grid(s.problem, ens, 11);
  ASSERT_EQ(g.value.rows(), 11);
  const Bounds& d = s.problem.model().domain();
  EXPECT_EQ(g.x0[0], d.lower[0]);
  EXPECT_EQ(g.x1[10], d.upper[1]);
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      Vec x(2);
      x << g.x0[j], g.x1[i];
      EXPECT_DOUBLE_EQ(g.value(i, j), ens.value(x));
      EXPECT_DOUBLE_EQ(g.action(i, j), s.problem.policy(ens, x)[0]);
    }
  }
  std::istringstream csv(grid_csv(g, "abc"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "# config_hash=abc");
  std::getline(csv, line);
  EXPECT_EQ(line, "x0,x1,value,action");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 121);
}

TEST(Plot, GridNeedsTwoStates) {
  ExperimentConfig c;
  c.system = "cartpole";
  c.value_net.hidden = {4};
  const TrainSetup s = build_setup(c);
  const ValueEnsemble ens(s.problem.features(), s.problem.model().desired_state(),
                          c.value_net, 5);
  EXPECT_THROW(value_grid(s.problem, ens, 5), Error);
}

TEST(Plot, HeatmapHasOneCellPerNode) {
  const Vec x0 = Vec::LinSpaced(4, 0.0, 1.0), x1 = Vec::LinSpaced(3, -1.0, 1.0);
  Mat z(3, 4);
  z.setRandom();
  const std::string svg = heatmap_svg(x0, x1, z, "v", "a", "b");
  std::size_t cells = 0;
  for (auto p = svg.find("<rect x="); p != std::string::npos; p = svg.find("<rect x=", p + 1)) {
    ++cells;
  }
  // 12 cells, the frame and 21 legend swatches.
  EXPECT_EQ(cells, 12u + 1u + 21u);
  EXPECT_THROW(heatmap_svg(x0, x1, z.transpose(), "v", "a", "b"), Error);
}

TEST(Plot, AtomicWriteLeavesNoTemporary) {
  const fs::path d = scratch("atomic");
  write_file_atomic((d / "f.txt").string(), "hello");
  EXPECT_TRUE(fs::exists(d / "f.txt"));
  EXPECT_FALSE(fs::exists(d / "f.txt.tmp"));
  std::ifstream in(d / "f.txt");
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "hello");
  fs::remove_all(d);
}

}  // namespace
}  // namespace cfvi
