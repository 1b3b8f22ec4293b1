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

#ifndef DMIMO_GEOMETRY_HPP
#define DMIMO_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dmimo/config.hpp"
#include "dmimo/random.hpp"
#include "dmimo/units.hpp"

namespace dmimo {

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;
  double z = 0.0;  // height
};

/// Horizontal and 3D distance between a UE and an AP on the torus, and the
/// azimuth of the UE seen from the AP (broadside along +x).
struct LinkGeometry {
  double d2d = 0.0;
  double d3d = 0.0;
  double azimuth = 0.0;  // radians, (-pi, pi]
};

/// APs at the centers of the sqrt(Q) x sqrt(Q) partition of the square,
/// row-major (x varies fastest).
inline std::vector<Position> place_aps(int num_aps, double side_m, double height_m) {
  if (!is_perfect_square(num_aps)) throw std::invalid_argument("Q must be a perfect square");
  if (!(side_m > 0.0)) throw std::invalid_argument("side length must be positive");
  const int n = grid_side(num_aps);
  const double pitch = side_m / n;
  std::vector<Position> aps;
  aps.reserve(static_cast<std::size_t>(num_aps));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) aps.push_back({(i + 0.5) * pitch, (j + 0.5) * pitch, height_m});
  return aps;
}

/// K UEs with each coordinate i.i.d. uniform on [0, l).
inline std::vector<Position> drop_ues(int num_ues, double side_m, double height_m, RandomStream& rng) {
  std::vector<Position> ues;
  ues.reserve(static_cast<std::size_t>(num_ues));
  for (int k = 0; k < num_ues; ++k) {
    const double x = rng.uniform(0.0, side_m);
    const double y = rng.uniform(0.0, side_m);
    ues.push_back({x, y, height_m});
  }
  return ues;
}

/// Wrap-around link geometry: the UE image among the 9 shifts
/// {-l, 0, +l}^2 closest to the AP. Ties go to the unshifted image, then to
/// the lexicographically smallest (dx, dy).
inline LinkGeometry link_geometry(const Position& ue, const Position& ap, double side_m) {
  static constexpr std::array<std::array<int, 2>, 9> kShifts{{
      {0, 0}, {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
  double best_sq = INFINITY, best_dx = 0.0, best_dy = 0.0;
  for (const auto& s : kShifts) {
    const double dx = ue.x + s[0] * side_m - ap.x;
    const double dy = ue.y + s[1] * side_m - ap.y;
    const double sq = dx * dx + dy * dy;
    if (sq < best_sq) {
      best_sq = sq;
      best_dx = dx;
      best_dy = dy;
    }
  }
  LinkGeometry g;
  g.d2d = std::sqrt(best_sq);
  const double dh = ap.z - ue.z;
  g.d3d = std::sqrt(best_sq + dh * dh);
  g.azimuth = g.d2d > 0.0 ? std::atan2(best_dy, best_dx) : 0.0;
  if (g.azimuth == -kPi) g.azimuth = kPi;
  return g;
}

/// CSV rows `network,kind,index,x_m,y_m,z_m` for one network realization.
inline void write_topology_csv(std::ostream& out, int network, const std::vector<Position>& aps,
                               const std::vector<Position>& ues, bool header) {
  if (header) out << "network,kind,index,x_m,y_m,z_m\n";
  auto row = [&](const char* kind, std::size_t i, const Position& p) {
    out << network << ',' << kind << ',' << i << ',' << p.x << ',' << p.y << ',' << p.z << '\n';
  };
  for (std::size_t i = 0; i < aps.size(); ++i) row("ap", i, aps[i]);
  for (std::size_t i = 0; i < ues.size(); ++i) row("ue", i, ues[i]);
}

}  // namespace dmimo

#endif  // DMIMO_GEOMETRY_HPP
