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

#ifndef DMIMO_RUNNER_HPP
#define DMIMO_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dmimo/config.hpp"
#include "dmimo/network.hpp"
#include "dmimo/precoding.hpp"
#include "dmimo/random.hpp"

namespace dmimo {

/// Worker count from DMIMO_WORKERS, else the hardware concurrency.
/// Never affects numerical results.
inline int worker_count() {
  if (const char* env = std::getenv("DMIMO_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// exception thrown by any task is rethrown after all threads join.
inline void parallel_for(int n, const std::function<void(int)>& fn, int workers) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Linear-interpolation percentile (p in [0, 100]) of unsorted values.
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty set");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Seed of one sweep point, a function of the master seed and its (Q, S, l)
/// key only, so adding or removing other points never changes it.
inline std::uint64_t point_seed(std::uint64_t master, int num_aps, int antennas_per_ap, double side_m) {
  return derive_seed(master, static_cast<std::uint64_t>(num_aps), static_cast<std::uint64_t>(antennas_per_ap),
                     std::bit_cast<std::uint64_t>(side_m));
}

struct NetworkOutcome {
  std::vector<double> gamma;
  std::vector<double> se;
  std::vector<std::string> diagnostics;
};

/// One network realization: drop UEs, build link states, estimate the UatF
/// statistics over cfg.mc.channels draws per pass and evaluate SINR and SE.
inline NetworkOutcome simulate_network(const ScenarioConfig& cfg, std::uint64_t seed, int network_index) {
  RandomStream topo(derive_seed(seed, static_cast<std::uint64_t>(network_index), 0));
  const auto net = build_network(cfg, topo);
  const auto stats = estimate_uatf_stats(net, cfg.mc.channels, derive_seed(seed, static_cast<std::uint64_t>(network_index), 1),
                                         cfg.options.perfect_csi);
  NetworkOutcome out;
  const double p_int = cfg.options.sinr_denominator_uses_uplink_p ? cfg.uplink_power_w : cfg.ap_power_w;
  out.gamma = uatf_sinr(stats, cfg.ap_power_w, cfg.noise_power_w, p_int, &out.diagnostics);
  out.se = se_per_user(out.gamma, cfg.coherence_block, cfg.downlink_samples);
  for (int q : stats.degenerate_aps) out.diagnostics.push_back("AP " + std::to_string(q) + " has all-zero precoders");
  return out;
}

struct PointResult {
  int num_aps = 0;
  int antennas_per_ap = 0;
  double side_length_m = 0.0;
  int total_antennas = 0;
  double density_per_km2 = 0.0;
  double mean_se = 0.0;
  double stderr_se = 0.0;
  double se_p5 = 0.0, se_p50 = 0.0, se_p95 = 0.0;
  int n_net = 0;
  int n_ch = 0;
  std::uint64_t seed = 0;
  std::vector<double> per_user_se;     // averaged over network realizations
  std::vector<double> per_network_se;  // mean over users, per network realization
  std::vector<std::string> diagnostics;
  double wall_seconds = 0.0;
};

using ProgressCallback = std::function<void(int done, int total)>;

/// Mean per-user SE of one (Q, S, l) point. SE is averaged per user over the
/// network realizations, then over the K users; the standard error is taken
/// across network realizations.
inline PointResult run_point(const ScenarioConfig& cfg, std::uint64_t seed, const ProgressCallback& progress = {},
                             int workers = worker_count()) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n_net = cfg.mc.networks;
  std::vector<NetworkOutcome> outcomes(static_cast<std::size_t>(n_net));
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  parallel_for(
      n_net,
      [&](int n) {
        try {
          outcomes[static_cast<std::size_t>(n)] = simulate_network(cfg, seed, n);
        } catch (const std::exception& e) {
          throw std::runtime_error("network realization " + std::to_string(n) + ": " + e.what());
        }
        if (progress) {
          std::lock_guard lock(progress_mutex);
          progress(++done, n_net);
        }
      },
      workers);

  PointResult r;
  r.num_aps = cfg.num_aps;
  r.antennas_per_ap = cfg.antennas_per_ap;
  r.side_length_m = cfg.side_length_m;
  r.total_antennas = cfg.total_antennas;
  r.density_per_km2 = cfg.ap_density_per_km2();
  r.n_net = n_net;
  r.n_ch = cfg.mc.channels;
  r.seed = seed;

  const auto K = static_cast<std::size_t>(cfg.num_ues);
  std::vector<double> pooled;
  pooled.reserve(K * outcomes.size());
  std::vector<double> mean_gamma(K, 0.0);
  r.per_user_se.assign(K, 0.0);
  for (const auto& o : outcomes) {
    for (std::size_t k = 0; k < K; ++k) {
      r.per_user_se[k] += o.se[k];
      mean_gamma[k] += o.gamma[k];
    }
    pooled.insert(pooled.end(), o.se.begin(), o.se.end());
    r.per_network_se.push_back(std::accumulate(o.se.begin(), o.se.end(), 0.0) / static_cast<double>(K));
    for (const auto& d : o.diagnostics) r.diagnostics.push_back(d);
  }
  for (std::size_t k = 0; k < K; ++k) {
    r.per_user_se[k] /= n_net;
    mean_gamma[k] /= n_net;
  }
  if (cfg.options.average_sinr_before_log) {
    r.per_user_se = se_per_user(mean_gamma, cfg.coherence_block, cfg.downlink_samples);
  }
  r.mean_se = std::accumulate(r.per_user_se.begin(), r.per_user_se.end(), 0.0) / static_cast<double>(K);

  if (n_net > 1) {
    const double m = std::accumulate(r.per_network_se.begin(), r.per_network_se.end(), 0.0) / n_net;
    double ss = 0.0;
    for (double v : r.per_network_se) ss += (v - m) * (v - m);
    r.stderr_se = std::sqrt(ss / (n_net - 1) / n_net);
  }
  r.se_p5 = percentile(pooled, 5.0);
  r.se_p50 = percentile(pooled, 50.0);
  r.se_p95 = percentile(pooled, 95.0);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// A fixed-budget study: every (Q, S) pair with Q*S = M at every side length.
struct SweepSpec {
  std::vector<std::pair<int, int>> pairs;  // (Q, S)
  std::vector<double> side_lengths_m;
  ScenarioConfig base;
  std::uint64_t master_seed = 1;
  std::string output_path;
};

/// Pairs (Q, M/Q) for every Q in `q_list`. Throws when Q does not divide M.
inline SweepSpec make_sweep(const ScenarioConfig& base, int total_antennas, const std::vector<int>& q_list,
                            const std::vector<double>& side_lengths_m) {
  SweepSpec spec;
  spec.base = base;
  spec.master_seed = base.mc.seed;
  spec.side_lengths_m = side_lengths_m;
  for (int q : q_list) {
    if (q <= 0 || total_antennas % q != 0)
      throw ConfigError({"Q=" + std::to_string(q) + " does not divide M=" + std::to_string(total_antennas)});
    spec.pairs.emplace_back(q, total_antennas / q);
  }
  return spec;
}

inline ScenarioConfig point_config(const SweepSpec& spec, std::pair<int, int> pair, double side_m) {
  ScenarioConfig cfg = spec.base;
  cfg.num_aps = pair.first;
  cfg.antennas_per_ap = pair.second;
  cfg.side_length_m = side_m;
  try {
    return finalize(cfg);
  } catch (const ConfigError& e) {
    std::ostringstream key;
    key << "point (Q=" << pair.first << ", S=" << pair.second << ", l=" << side_m << "): " << e.what();
    throw ConfigError({key.str()});
  }
}

struct SweepResult {
  std::vector<PointResult> rows;
  double wall_seconds = 0.0;
};

/// Runs every point of `spec`; rows are ordered pair-major, then by side
/// length, in the order given. All points share K, M and P.
inline SweepResult run_sweep(const SweepSpec& spec, const ProgressCallback& progress = {},
                             int workers = worker_count()) {
  if (spec.pairs.empty() || spec.side_lengths_m.empty()) throw ConfigError({"sweep has no points"});
  std::vector<ScenarioConfig> configs;
  for (const auto& pair : spec.pairs)
    for (double l : spec.side_lengths_m) configs.push_back(point_config(spec, pair, l));
  for (const auto& c : configs) {
    if (c.total_antennas != configs.front().total_antennas || c.num_ues != configs.front().num_ues ||
        c.downlink_total_power_w != configs.front().downlink_total_power_w) {
      throw ConfigError({"sweep points must share M, K and P"});
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult result;
  int done = 0;
  for (const auto& c : configs) {
    result.rows.push_back(
        run_point(c, point_seed(spec.master_seed, c.num_aps, c.antennas_per_ap, c.side_length_m), {}, workers));
    if (progress) progress(++done, static_cast<int>(configs.size()));
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline constexpr const char* kCsvHeader =
    "Q,S,l_m,M,density_aps_per_km2,mean_se_bps_hz,stderr,se_p5,se_p50,se_p95,n_net,n_ch,seed";

namespace detail {
inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}
}  // namespace detail

inline void write_csv(std::ostream& out, const SweepResult& result) {
  out << kCsvHeader << '\n';
  for (const auto& r : result.rows) {
    out << r.num_aps << ',' << r.antennas_per_ap << ',' << detail::fmt9(r.side_length_m) << ',' << r.total_antennas
        << ',' << detail::fmt9(r.density_per_km2) << ',' << detail::fmt9(r.mean_se) << ','
        << detail::fmt9(r.stderr_se) << ',' << detail::fmt9(r.se_p5) << ',' << detail::fmt9(r.se_p50) << ','
        << detail::fmt9(r.se_p95) << ',' << r.n_net << ',' << r.n_ch << ',' << r.seed << '\n';
  }
}

inline std::string to_csv(const SweepResult& result) {
  std::ostringstream out;
  write_csv(out, result);
  return out.str();
}

/// Writes the sweep CSV to `path`. An empty result is an error and leaves
/// no file behind.
inline void emit_csv(const SweepResult& result, const std::string& path) {
  if (result.rows.empty()) throw std::invalid_argument("refusing to write an empty sweep result");
  const std::string text = to_csv(result);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) {
    std::error_code ec;
    std::filesystem::remove(path, ec);
    throw std::runtime_error("failed writing '" + path + "'");
  }
}

/// Parses a CSV produced by write_csv(). Per-user vectors are not stored
/// in the file and come back empty.
inline SweepResult read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("unexpected CSV header");
  SweepResult result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 13) throw std::runtime_error("malformed CSV row: " + line);
    PointResult r;
    r.num_aps = std::stoi(f[0]);
    r.antennas_per_ap = std::stoi(f[1]);
    r.side_length_m = std::stod(f[2]);
    r.total_antennas = std::stoi(f[3]);
    r.density_per_km2 = std::stod(f[4]);
    r.mean_se = std::stod(f[5]);
    r.stderr_se = std::stod(f[6]);
    r.se_p5 = std::stod(f[7]);
    r.se_p50 = std::stod(f[8]);
    r.se_p95 = std::stod(f[9]);
    r.n_net = std::stoi(f[10]);
    r.n_ch = std::stoi(f[11]);
    r.seed = std::stoull(f[12]);
    result.rows.push_back(std::move(r));
  }
  return result;
}

}  // namespace dmimo

#endif  // DMIMO_RUNNER_HPP
