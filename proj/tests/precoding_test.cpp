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

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "dmimo/precoding.hpp"
#include "dmimo/runner.hpp"

namespace dmimo {
namespace {

// Fills derived fields without validation: the scalar oracles use
// K = M = 1, which a runnable scenario rejects.
ScenarioConfig derive_unchecked(ScenarioConfig cfg) {
  cfg.total_antennas = cfg.num_aps * cfg.antennas_per_ap;
  cfg.downlink_samples = cfg.coherence_block - cfg.pilot_length - 1;
  cfg.ap_power_w = cfg.downlink_total_power_w / cfg.num_aps;
  cfg.noise_power_w = cfg.noise_power_explicit_w.value_or(derive_noise_power(cfg.bandwidth_hz, cfg.noise_figure_db));
  return cfg;
}

ScenarioConfig small_config(int K, int Q, int S, double side_m) {
  ScenarioConfig cfg;
  cfg.num_ues = K;
  cfg.num_aps = Q;
  cfg.antennas_per_ap = S;
  cfg.side_length_m = side_m;
  return K < Q * S ? finalize(cfg) : derive_unchecked(cfg);
}

// A network realization with hand-built link states (UE/AP positions unused).
NetworkRealization handmade_network(ScenarioConfig cfg, std::vector<LinkState> states) {
  LinkStates links{cfg.num_ues, cfg.num_aps, cfg.antennas_per_ap, std::move(states)};
  auto plan = assign_pilots(cfg.num_ues, cfg.pilot_length);
  LmmseEstimator est(links, plan, pilot_power(cfg), cfg.noise_power_w);
  return NetworkRealization{cfg, {}, {}, {}, std::move(links), std::move(plan), std::move(est)};
}

LinkState deterministic_link(cd value) {
  LinkState st;
  st.is_los = true;
  st.h_bar = Eigen::VectorXcd::Constant(1, value);
  st.r = Eigen::MatrixXcd::Zero(1, 1);
  st.r_chol = Eigen::MatrixXcd::Zero(1, 1);
  st.beta = std::norm(value);
  return st;
}

TEST(MrtTest, CopiesEstimates) {
  EstimationOutput est{Eigen::MatrixXcd::Zero(4, 2), nullptr};
  EXPECT_EQ(mrt_precoders(est).norm(), 0.0);
  RandomStream rng(1);
  est.h_hat = Eigen::MatrixXcd(4, 2);
  rng.fill_complex_normal(est.h_hat);
  EXPECT_EQ((mrt_precoders(est) - est.h_hat).norm(), 0.0);
}

TEST(MrtTest, PerfectCsiHookUsesTrueChannel) {
  const auto cfg = small_config(4, 4, 2, 200.0);
  RandomStream topo(3);
  const auto net = build_network(cfg, topo);
  RandomStream rng(4);
  const auto d = draw_precoded(net, rng, true);
  EXPECT_EQ((d.w - d.channel.h).norm(), 0.0);
}

TEST(NormalizationTest, PowerConstraintArithmetic) {
  Eigen::MatrixXcd w(1, 1);
  w << cd(1.0, 1.0);  // ||w||^2 = 2
  const std::vector<Eigen::MatrixXcd> samples{w, w, w};
  const auto mu = normalization(samples, 1, 1);
  EXPECT_DOUBLE_EQ(mu[0], 0.5);
  const double p_d = 5.0;
  EXPECT_DOUBLE_EQ(ap_transmit_power(w, mu, p_d, 1)[0], p_d);
}

TEST(NormalizationTest, Homogeneity) {
  RandomStream rng(5);
  std::vector<Eigen::MatrixXcd> samples, scaled;
  for (int i = 0; i < 20; ++i) {
    Eigen::MatrixXcd w(6, 3);  // Q = 3, S = 2
    rng.fill_complex_normal(w);
    samples.push_back(w);
    Eigen::MatrixXcd ws = w;
    ws.middleRows(2, 2) *= 4.0;  // AP 1 only
    scaled.push_back(ws);
  }
  const auto mu = normalization(samples, 3, 2);
  const auto mu_s = normalization(scaled, 3, 2);
  EXPECT_DOUBLE_EQ(mu_s[0], mu[0]);
  EXPECT_NEAR(mu_s[1], mu[1] / 16.0, 1e-15 * mu[1]);
  EXPECT_DOUBLE_EQ(mu_s[2], mu[2]);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EXPECT_NEAR(ap_transmit_power(samples[i], mu, 1.0, 2)[1], ap_transmit_power(scaled[i], mu_s, 1.0, 2)[1], 1e-12);
  }
}

TEST(NormalizationTest, DegenerateApTransmitsNothing) {
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(2, 1);
  w(0, 0) = 1.0;
  std::vector<int> degenerate;
  const auto mu = normalization(std::vector<Eigen::MatrixXcd>{w}, 2, 1, &degenerate);
  EXPECT_EQ(mu[1], 0.0);
  ASSERT_EQ(degenerate.size(), 1u);
  EXPECT_EQ(degenerate[0], 1);
  EXPECT_THROW(normalization(std::vector<Eigen::MatrixXcd>{}, 1, 1), std::invalid_argument);
}

TEST(NormalizationTest, RayleighScalarConvergesToInverseEstimateVariance) {
  // S = Q = K = 1, Rayleigh with beta = 1: the estimate variance is
  // v = p R^2 / (p R + sigma2).
  auto cfg = small_config(1, 1, 1, 100.0);
  cfg.uplink_power_w = 1.0;
  cfg.noise_power_explicit_w = 0.5;
  cfg = derive_unchecked(cfg);
  auto net = handmade_network(cfg, {make_link_state(false, 1.0, 0.0, 0.0, 1, 0.26)});
  const double v = 1.0 / 1.5;
  PowerAccumulator acc(1, 1);
  for (int r = 0; r < 100000; ++r) {
    RandomStream rng(derive_seed(17, static_cast<std::uint64_t>(r)));
    acc.add(draw_precoded(net, rng, false).w);
  }
  EXPECT_NEAR(acc.mu()[0], 1.0 / v, 0.02 / v);
}

TEST(UatfStatsTest, DeterministicScalarChannel) {
  auto cfg = small_config(1, 1, 1, 100.0);
  const auto net = handmade_network(cfg, {deterministic_link(1.0)});
  const auto st = estimate_uatf_stats(net, 10, 1, true);
  EXPECT_DOUBLE_EQ(st.mu[0], 1.0);
  EXPECT_NEAR(std::abs(st.ds(0, 0) - cd(1.0)), 0.0, 1e-15);
  EXPECT_NEAR(st.interference(0, 0), 1.0, 1e-15);
  EXPECT_THROW(estimate_uatf_stats(net, 1, 1, true), std::invalid_argument);
}

TEST(UatfStatsTest, RayleighScalarMomentOracle) {
  // Perfect CSI, beta = 1: mu = 1/E|h|^2, DS = 1, INT = E|h|^4 / E|h|^2 = 2,
  // so gamma = p_d / (p_d + sigma2).
  auto cfg = small_config(1, 1, 1, 100.0);
  cfg.downlink_total_power_w = 1.0;
  cfg.noise_power_explicit_w = 1.0;
  cfg = derive_unchecked(cfg);
  const auto net = handmade_network(cfg, {make_link_state(false, 1.0, 0.0, 0.0, 1, 0.26)});
  const auto st = estimate_uatf_stats(net, 100000, 99, true);
  EXPECT_NEAR(std::abs(st.ds_sum(0)), 1.0, 0.03);
  EXPECT_NEAR(st.interference(0, 0), 2.0, 0.06);
  const auto gamma = uatf_sinr(st, cfg.ap_power_w, cfg.noise_power_w);
  EXPECT_NEAR(gamma[0], 0.5, 0.015);
}

TEST(UatfStatsTest, SelfTermDominanceAndPositivity) {
  const auto cfg = small_config(12, 4, 4, 300.0);
  RandomStream topo(21);
  const auto net = build_network(cfg, topo);
  const auto st = estimate_uatf_stats(net, 100, 22);
  for (int k = 0; k < cfg.num_ues; ++k) {
    for (int i = 0; i < cfg.num_ues; ++i) EXPECT_GE(st.interference(k, i), 0.0);
    // The DS sum is the sample mean of the effective coefficient whose
    // sample second moment is INT(k, k), so the gap is a sample variance.
    EXPECT_GE(st.interference(k, k) - std::norm(st.ds_sum(k)), -1e-12 * st.interference(k, k));
  }
  for (double mu : st.mu) EXPECT_GT(mu, 0.0);
}

TEST(UatfSinrTest, Examples) {
  UatFStatistics st;
  st.ds = Eigen::MatrixXcd::Constant(1, 1, 1.0);
  st.interference = Eigen::MatrixXd::Constant(1, 1, 1.0);
  EXPECT_DOUBLE_EQ(uatf_sinr(st, 1.0, 1.0)[0], 1.0);

  st.ds(0, 0) = 0.0;
  EXPECT_DOUBLE_EQ(uatf_sinr(st, 1.0, 1.0)[0], 0.0);

  st.ds = Eigen::MatrixXcd::Constant(1, 2, 0.5);  // sum over APs = 1
  st.interference = Eigen::MatrixXd::Constant(1, 1, 1.5);
  double prev = INFINITY;
  for (double sigma2 : {1e-3, 1e-1, 1.0, 10.0, 1e3, 1e6, 1e12}) {
    const double g = uatf_sinr(st, 1.0, sigma2)[0];
    EXPECT_LT(g, prev);
    prev = g;
  }
  EXPECT_LT(prev, 1e-11);
}

TEST(UatfSinrTest, MonotoneInDesiredSignal) {
  // Fixed interference-plus-noise: gamma increases strictly with |DS|^2.
  UatFStatistics st;
  st.interference = Eigen::MatrixXd::Constant(1, 1, 10.0);
  double prev = -1.0;
  for (double a : {0.1, 0.5, 1.0, 2.0, 3.0}) {
    st.ds = Eigen::MatrixXcd::Constant(1, 1, a);
    const double desired = a * a;
    // Hold p sum INT - |DS|^2 fixed by moving the self term with |DS|^2.
    st.interference(0, 0) = 10.0 + desired;
    const double g = uatf_sinr(st, 1.0, 1.0)[0];
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(UatfSinrTest, InconsistentStatisticsRaise) {
  UatFStatistics st;
  st.ds = Eigen::MatrixXcd::Constant(2, 1, 2.0);
  st.interference = Eigen::MatrixXd::Identity(2, 2);  // INT(k,k) < |DS|^2
  try {
    uatf_sinr(st, 1.0, 1.0);
    FAIL() << "expected StatisticalInconsistency";
  } catch (const StatisticalInconsistency& e) {
    EXPECT_NE(std::string(e.what()).find("user 0"), std::string::npos);
  }
  // Slightly below zero due to Monte Carlo noise: clamped with a diagnostic.
  st.ds = Eigen::MatrixXcd::Constant(1, 1, 1.0);
  st.interference = Eigen::MatrixXd::Constant(1, 1, 1.0 - 1.00001e-8);
  std::vector<std::string> diag;
  const auto g = uatf_sinr(st, 1.0, 1e-8, 1.0, &diag);
  EXPECT_DOUBLE_EQ(g[0], 1.0 / 0.5e-8);
  EXPECT_EQ(diag.size(), 1u);
}

TEST(SeTest, Examples) {
  const std::vector<double> gamma{1.0, 0.0, 3.0};
  const auto se = se_per_user(gamma, 200, 189);
  EXPECT_DOUBLE_EQ(se[0], 0.945);
  EXPECT_DOUBLE_EQ(se[1], 0.0);
  EXPECT_DOUBLE_EQ(se[2], 1.89);
  const std::vector<double> bad{-0.1};
  EXPECT_THROW(se_per_user(bad, 200, 189), std::invalid_argument);
}

TEST(PropertiesTest, PowerConstraintOnHeldOutDraws) {
  const auto cfg = small_config(20, 4, 8, 250.0);
  RandomStream topo(31);
  const auto net = build_network(cfg, topo);
  PowerAccumulator fit(cfg.num_aps, cfg.antennas_per_ap);
  for (int r = 0; r < 10000; ++r) {
    RandomStream rng(derive_seed(1, static_cast<std::uint64_t>(r)));
    fit.add(draw_precoded(net, rng, false).w);
  }
  const auto mu = fit.mu();
  std::vector<double> power(static_cast<std::size_t>(cfg.num_aps), 0.0);
  for (int r = 0; r < 10000; ++r) {
    RandomStream rng(derive_seed(2, static_cast<std::uint64_t>(r)));
    const auto p = ap_transmit_power(draw_precoded(net, rng, false).w, mu, cfg.ap_power_w, cfg.antennas_per_ap);
    for (std::size_t q = 0; q < p.size(); ++q) power[q] += p[q] / 10000.0;
  }
  for (double p : power) EXPECT_NEAR(p, cfg.ap_power_w, 0.02 * cfg.ap_power_w);
}

TEST(PropertiesTest, SinrScaleInvariance) {
  const double c = 1e3;
  auto base = small_config(6, 4, 2, 400.0);
  base.noise_power_explicit_w = dbm_to_watts(-92.0);
  base = finalize(base);
  auto scaled = base;
  scaled.channel.pl_los_intercept_db -= 10.0 * std::log10(c);
  scaled.channel.pl_nlos_intercept_db -= 10.0 * std::log10(c);
  scaled.noise_power_explicit_w = c * *base.noise_power_explicit_w;
  scaled = finalize(scaled);
  const auto a = simulate_network(base, 77, 0);
  const auto b = simulate_network(scaled, 77, 0);
  for (std::size_t k = 0; k < a.gamma.size(); ++k) EXPECT_NEAR(b.gamma[k], a.gamma[k], 1e-8 * a.gamma[k]);
}

TEST(PropertiesTest, PerfectCsiDominatesEstimatedCsi) {
  auto cfg = small_config(20, 16, 4, 500.0);
  cfg.mc.networks = 4;
  cfg.mc.channels = 50;
  auto perfect = cfg;
  perfect.options.perfect_csi = true;
  const auto est = run_point(cfg, 5, {}, 1);
  const auto ideal = run_point(perfect, 5, {}, 1);
  EXPECT_GE(ideal.mean_se, est.mean_se - 3 * std::hypot(ideal.stderr_se, est.stderr_se));
}

}  // namespace
}  // namespace dmimo
