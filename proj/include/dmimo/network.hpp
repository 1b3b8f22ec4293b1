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

#ifndef DMIMO_NETWORK_HPP
#define DMIMO_NETWORK_HPP

#include <vector>

#include "dmimo/channel.hpp"
#include "dmimo/config.hpp"
#include "dmimo/estimation.hpp"
#include "dmimo/geometry.hpp"
#include "dmimo/random.hpp"

namespace dmimo {

/// Effective pilot power: p, or tau_p * p when the pilot processing gain is enabled.
inline double pilot_power(const ScenarioConfig& cfg) {
  return cfg.options.pilot_gain_tau_p ? cfg.uplink_power_w * cfg.pilot_length : cfg.uplink_power_w;
}

/// Everything that stays fixed across the channel realizations of one
/// network drop: positions, link states, pilot plan and the estimator.
struct NetworkRealization {
  ScenarioConfig config;
  std::vector<Position> aps;
  std::vector<Position> ues;
  std::vector<LinkGeometry> geometry;  // index k * Q + q
  LinkStates links;
  PilotPlan pilots;
  LmmseEstimator estimator;
};

/// Link states for given UE positions; draws k-major then q.
inline NetworkRealization build_network(const ScenarioConfig& cfg, std::vector<Position> ues, RandomStream& rng) {
  auto aps = place_aps(cfg.num_aps, cfg.side_length_m, cfg.ap_height_m);
  std::vector<LinkGeometry> geometry;
  LinkStates links{cfg.num_ues, cfg.num_aps, cfg.antennas_per_ap, {}};
  geometry.reserve(static_cast<std::size_t>(cfg.num_ues) * cfg.num_aps);
  links.links.reserve(geometry.capacity());
  for (const auto& ue : ues) {
    for (const auto& ap : aps) {
      geometry.push_back(link_geometry(ue, ap, cfg.side_length_m));
      links.links.push_back(large_scale(geometry.back(), cfg.antennas_per_ap, cfg.channel, rng));
    }
  }
  auto plan = assign_pilots(cfg.num_ues, cfg.pilot_length);
  LmmseEstimator est(links, plan, pilot_power(cfg), cfg.noise_power_w);
  return NetworkRealization{cfg, std::move(aps), std::move(ues), std::move(geometry), std::move(links),
                            std::move(plan), std::move(est)};
}

/// Drops K UEs uniformly, then builds the link states from the same stream.
inline NetworkRealization build_network(const ScenarioConfig& cfg, RandomStream& rng) {
  auto ues = drop_ues(cfg.num_ues, cfg.side_length_m, cfg.ue_height_m, rng);
  return build_network(cfg, std::move(ues), rng);
}

inline ChannelRealization sample_channel(const NetworkRealization& net, RandomStream& rng) {
  return sample_channel(net.links, rng);
}

}  // namespace dmimo

#endif  // DMIMO_NETWORK_HPP
