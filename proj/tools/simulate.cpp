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

// simulate: runs a fixed-budget (Q, S, l) sweep and writes the results CSV.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmimo/dmimo.hpp"

namespace {

struct SweepFile {
  std::optional<int> total_antennas;
  std::vector<int> q_list;
  std::vector<double> l_list;
};

SweepFile load_sweep_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dmimo::ConfigError({"cannot open sweep file '" + path + "'"});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw dmimo::ConfigError({std::string("malformed sweep file: ") + e.what()});
  }
  SweepFile s;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "total_antennas") s.total_antennas = it.value().get<int>();
      else if (it.key() == "q_list") s.q_list = it.value().get<std::vector<int>>();
      else if (it.key() == "l_list_m") s.l_list = it.value().get<std::vector<double>>();
      else throw dmimo::ConfigError({"unknown sweep key '" + it.key() + "'"});
    }
  } catch (const nlohmann::json::exception& e) {
    throw dmimo::ConfigError({std::string("malformed sweep file: ") + e.what()});
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downlink distributed massive MIMO Monte Carlo simulator"};

  std::string config_path, sweep_path, out_path, topology_path, channel_path;
  std::vector<int> q_list;
  std::vector<double> l_list;
  std::optional<int> total_antennas, n_net, n_ch;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false, perfect_csi = false, sinr_uplink_p = false, average_sinr = false, quiet = false;

  app.add_option("--config", config_path, "JSON scenario file (defaults to the built-in parameters)")
      ->check(CLI::ExistingFile);
  app.add_option("--sweep", sweep_path, "JSON sweep file with total_antennas, q_list, l_list_m")
      ->check(CLI::ExistingFile);
  app.add_option("--q-list", q_list, "numbers of APs (perfect squares dividing M)")->delimiter(',');
  app.add_option("--l-list", l_list, "side lengths in meters")->delimiter(',');
  app.add_option("--m", total_antennas, "total antenna count M");
  app.add_option("--n-net", n_net, "network realizations per point");
  app.add_option("--n-ch", n_ch, "channel realizations per network and pass");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_path, "output CSV (stdout when omitted)");
  app.add_flag("--paper-scale", paper_scale, "50 networks x 1000 channel realizations");
  app.add_flag("--perfect-csi", perfect_csi, "precode with the true channels");
  app.add_flag("--sinr-uplink-p", sinr_uplink_p, "use the uplink power in the SINR interference term");
  app.add_flag("--average-sinr", average_sinr, "average SINR over networks before log2");
  app.add_option("--topology-dump", topology_path, "write AP/UE positions of the first point as CSV");
  app.add_option("--channel-dump", channel_path, "write one channel realization of the first point (binary)");
  app.add_flag("-q,--quiet", quiet, "no progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    dmimo::ScenarioConfig base = config_path.empty() ? dmimo::default_config() : dmimo::load_config_file(config_path);

    SweepFile sweep;
    if (!sweep_path.empty()) sweep = load_sweep_file(sweep_path);
    if (!q_list.empty()) sweep.q_list = q_list;
    if (!l_list.empty()) sweep.l_list = l_list;
    if (total_antennas) sweep.total_antennas = total_antennas;
    const int m = sweep.total_antennas.value_or(base.total_antennas);
    if (sweep.q_list.empty()) {
      for (int q : {1, 4, 16, 64})
        if (m % q == 0 && m / q >= 1) sweep.q_list.push_back(q);
    }
    if (sweep.l_list.empty()) sweep.l_list = {125.0, 250.0, 500.0, 1000.0};

    if (paper_scale) {
      base.mc.networks = dmimo::kPaperScaleNetworks;
      base.mc.channels = dmimo::kPaperScaleChannels;
    }
    if (n_net) base.mc.networks = *n_net;
    if (n_ch) base.mc.channels = *n_ch;
    if (seed) base.mc.seed = *seed;
    base.options.perfect_csi |= perfect_csi;
    base.options.sinr_denominator_uses_uplink_p |= sinr_uplink_p;
    base.options.average_sinr_before_log |= average_sinr;
    base = dmimo::finalize(base);

    auto spec = dmimo::make_sweep(base, m, sweep.q_list, sweep.l_list);
    spec.output_path = out_path;

    if (!topology_path.empty() || !channel_path.empty()) {
      const auto cfg = dmimo::point_config(spec, spec.pairs.front(), spec.side_lengths_m.front());
      const auto ps = dmimo::point_seed(spec.master_seed, cfg.num_aps, cfg.antennas_per_ap, cfg.side_length_m);
      dmimo::RandomStream topo(dmimo::derive_seed(ps, 0, 0));
      const auto net = dmimo::build_network(cfg, topo);
      if (!topology_path.empty()) {
        std::ofstream out(topology_path);
        if (!out) throw std::runtime_error("cannot write '" + topology_path + "'");
        dmimo::write_topology_csv(out, 0, net.aps, net.ues, true);
      }
      if (!channel_path.empty()) {
        std::ofstream out(channel_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + channel_path + "'");
        dmimo::RandomStream rng(dmimo::derive_seed(ps, 0, 1));
        dmimo::write_channel_binary(out, dmimo::sample_channel(net, rng));
      }
    }

    const int total = static_cast<int>(spec.pairs.size() * spec.side_lengths_m.size());
    auto result = dmimo::run_sweep(spec, [&](int done, int) {
      if (quiet) return;
      std::cerr << "[" << done << "/" << total << "] points done\n";
    });
    for (const auto& row : result.rows)
      for (const auto& d : row.diagnostics)
        std::cerr << "warning: Q=" << row.num_aps << " l=" << row.side_length_m << ": " << d << '\n';

    if (out_path.empty()) {
      dmimo::write_csv(std::cout, result);
    } else {
      dmimo::emit_csv(result, out_path);
      if (!quiet) std::cerr << "wrote " << result.rows.size() << " rows to " << out_path << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
