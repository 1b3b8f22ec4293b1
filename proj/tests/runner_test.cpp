// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The dmimo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dmimo/runner.hpp"

namespace dmimo {
namespace {

ScenarioConfig tiny_base(int networks, int channels) {
  ScenarioConfig cfg;
  cfg.mc.networks = networks;
  cfg.mc.channels = channels;
  cfg.mc.seed = 2026;
  return finalize(cfg);
}

TEST(PercentileTest, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({3.0, 1.0, 2.0}, 50.0), 2.0);
  EXPECT_DOUBLE_EQ(percentile({0.0, 10.0}, 5.0), 0.5);
  EXPECT_DOUBLE_EQ(percentile({4.0}, 95.0), 4.0);
  EXPECT_THROW(percentile({}, 50.0), std::invalid_argument);
}

TEST(ParallelForTest, CoversRangeAndPropagatesErrors) {
  std::vector<int> hit(100, 0);
  parallel_for(100, [&](int i) { hit[static_cast<std::size_t>(i)]++; }, 4);
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](int i) { if (i == 7) throw std::runtime_error("boom"); }, 3), std::runtime_error);
}

TEST(RunPointTest, SingleRealizationIsReproducible) {
  auto cfg = tiny_base(1, 2);
  const auto a = run_point(cfg, 11, {}, 1);
  const auto b = run_point(cfg, 11, {}, 1);
  EXPECT_EQ(a.mean_se, b.mean_se);
  EXPECT_EQ(a.per_user_se, b.per_user_se);
  EXPECT_EQ(a.stderr_se, 0.0);
  const auto c = run_point(cfg, 12, {}, 1);
  EXPECT_NE(a.mean_se, c.mean_se);
}

TEST(RunPointTest, WorkerCountDoesNotChangeNumerics) {
  auto cfg = tiny_base(6, 8);
  const auto a = run_point(cfg, 3, {}, 1);
  const auto b = run_point(cfg, 3, {}, 4);
  EXPECT_EQ(a.per_network_se, b.per_network_se);
  EXPECT_EQ(a.mean_se, b.mean_se);
  EXPECT_EQ(a.se_p50, b.se_p50);
}

TEST(RunPointTest, ProgressReportsEveryNetwork) {
  auto cfg = tiny_base(5, 2);
  std::atomic<int> calls{0};
  int last = 0;
  run_point(cfg, 1, [&](int done, int total) {
    ++calls;
    last = done;
    EXPECT_EQ(total, 5);
  }, 2);
  EXPECT_EQ(calls.load(), 5);
  EXPECT_EQ(last, 5);
}

TEST(RunPointTest, DoublingChannelRealizationsIsConsistent) {
  auto cfg = tiny_base(8, 100);
  cfg.side_length_m = 250.0;
  cfg = finalize(cfg);
  auto more = cfg;
  more.mc.channels = 200;
  const auto a = run_point(cfg, 42, {}, 1);
  const auto b = run_point(more, 42, {}, 1);
  EXPECT_LT(std::abs(a.mean_se - b.mean_se), 3 * std::max(a.stderr_se, b.stderr_se));
}

TEST(RunPointTest, NoiseDominatedSeVanishes) {
  auto cfg = tiny_base(2, 10);
  cfg.noise_power_explicit_w = 1e6;
  cfg = finalize(cfg);
  const auto r = run_point(cfg, 1, {}, 1);
  EXPECT_LT(r.mean_se, 1e-6);
  EXPECT_GE(r.mean_se, 0.0);
}

TEST(RunPointTest, SinrAveragingAlternative) {
  auto cfg = tiny_base(3, 10);
  auto alt = cfg;
  alt.options.average_sinr_before_log = true;
  const auto a = run_point(cfg, 9, {}, 1);
  const auto b = run_point(alt, 9, {}, 1);
  // Jensen: log of the mean SINR is at least the mean of the logs.
  EXPECT_GE(b.mean_se, a.mean_se);
  EXPECT_EQ(a.per_network_se, b.per_network_se);
}

TEST(SweepTest, TableOneShapeAndDensity) {
  auto spec = make_sweep(tiny_base(1, 2), 64, {1, 4, 16, 64}, {125, 250, 500, 1000});
  const auto result = run_sweep(spec, {}, 1);
  ASSERT_EQ(result.rows.size(), 16u);
  for (const auto& r : result.rows) {
    EXPECT_EQ(r.num_aps * r.antennas_per_ap, 64);
    EXPECT_NEAR(r.density_per_km2, r.num_aps / std::pow(r.side_length_m / 1000.0, 2), 1e-9);
    if (r.num_aps == 4 && r.side_length_m == 250.0) EXPECT_DOUBLE_EQ(r.density_per_km2, 64.0);
  }
  EXPECT_EQ(result.rows[5].num_aps, 4);
  EXPECT_EQ(result.rows[5].side_length_m, 250.0);
}

TEST(SweepTest, InvalidPointsNameTheKey) {
  EXPECT_THROW(make_sweep(tiny_base(1, 2), 64, {3}, {250}), ConfigError);
  auto spec = make_sweep(tiny_base(1, 2), 64, {2}, {250});  // Q=2 divides M but is not square
  try {
    run_sweep(spec, {}, 1);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Q=2"), std::string::npos);
  }
  spec = make_sweep(tiny_base(1, 2), 64, {}, {250});
  EXPECT_THROW(run_sweep(spec, {}, 1), ConfigError);
}

TEST(SweepTest, PointSeedsIgnoreOtherPoints) {
  const auto base = tiny_base(2, 4);
  const auto full = run_sweep(make_sweep(base, 64, {1, 4, 16}, {250, 500}), {}, 1);
  const auto single = run_sweep(make_sweep(base, 64, {16}, {500}), {}, 1);
  const auto& a = full.rows.back();
  const auto& b = single.rows.front();
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.mean_se, b.mean_se);
}

TEST(CsvTest, DeterministicBytesAndRoundTrip) {
  const auto spec = make_sweep(tiny_base(2, 3), 64, {1, 4, 16}, {125, 250});
  const auto a = run_sweep(spec, {}, 1);
  const auto b = run_sweep(spec, {}, 3);
  const std::string text = to_csv(a);
  EXPECT_EQ(text, to_csv(b));

  int lines = 0;
  for (char c : text) lines += c == '\n';
  EXPECT_EQ(lines, 7);
  EXPECT_EQ(text.substr(0, text.find('\n')), kCsvHeader);

  std::istringstream in(text);
  const auto back = read_csv(in);
  ASSERT_EQ(back.rows.size(), a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].num_aps, a.rows[i].num_aps);
    EXPECT_EQ(back.rows[i].seed, a.rows[i].seed);
    EXPECT_EQ(detail::fmt9(back.rows[i].mean_se), detail::fmt9(a.rows[i].mean_se));
    EXPECT_EQ(detail::fmt9(back.rows[i].stderr_se), detail::fmt9(a.rows[i].stderr_se));
    EXPECT_EQ(detail::fmt9(back.rows[i].se_p95), detail::fmt9(a.rows[i].se_p95));
  }
  EXPECT_EQ(to_csv(back), text);
}

TEST(CsvTest, EmitWritesFileAndRejectsEmpty) {
  const auto dir = std::filesystem::temp_directory_path() / "dmimo_runner_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.csv").string();
  const auto empty_path = (dir / "empty.csv").string();
  std::filesystem::remove(empty_path);

  const auto result = run_sweep(make_sweep(tiny_base(1, 2), 64, {4, 16}, {250}), {}, 1);
  emit_csv(result, path);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  EXPECT_EQ(buf.str(), to_csv(result));

  EXPECT_THROW(emit_csv(SweepResult{}, empty_path), std::invalid_argument);
  EXPECT_FALSE(std::filesystem::exists(empty_path));
  EXPECT_THROW(emit_csv(result, (dir / "no_such_dir" / "x.csv").string()), std::runtime_error);

  std::istringstream bad("Q,S\n1,2\n");
  EXPECT_THROW(read_csv(bad), std::runtime_error);
}

}  // namespace
}  // namespace dmimo
