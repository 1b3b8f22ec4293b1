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

#ifndef DMIMO_CHANNEL_HPP
#define DMIMO_CHANNEL_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/config.hpp"
#include "dmimo/geometry.hpp"
#include "dmimo/random.hpp"
#include "dmimo/units.hpp"

namespace dmimo {

using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// Large-scale model
// ---------------------------------------------------------------------------

/// Probability that a link of horizontal length `d2d` has line of sight.
/// Equals 1 for d2d <= breakpoint and is nonincreasing in d2d.
inline double los_probability(double d2d, const ChannelConstants& c = {}) {
  if (d2d <= c.los_breakpoint_m) return 1.0;
  const double e = std::exp(-d2d / c.los_decay_m);
  return (c.los_breakpoint_m / d2d) * (1.0 - e) + e;
}

inline double path_loss_db(double d3d, bool los, const ChannelConstants& c = {}) {
  return los ? c.pl_los_intercept_db + c.pl_los_slope_db * std::log10(d3d)
             : c.pl_nlos_intercept_db + c.pl_nlos_slope_db * std::log10(d3d);
}

/// Linear Rician factor of a LoS link; NLoS links have kappa = 0.
inline double rician_factor(double d3d, const ChannelConstants& c = {}) {
  return std::pow(10.0, c.rician_log10_intercept - c.rician_log10_slope_per_m * d3d);
}

/// Half-wavelength ULA response: element s is exp(j*pi*s*sin(azimuth)), s = 0..S-1.
inline Eigen::VectorXcd steering_vector(double azimuth, int num_antennas) {
  if (num_antennas < 1) throw std::invalid_argument("S must be at least 1");
  Eigen::VectorXcd a(num_antennas);
  const double phase = kPi * std::sin(azimuth);
  for (int s = 0; s < num_antennas; ++s) a(s) = std::polar(1.0, phase * s);
  return a;
}

/// Gaussian local scattering covariance (small-angle closed form), before
/// any PSD correction. Entry (m, n) depends on the lag m - n only.
inline Eigen::MatrixXcd local_scattering_closed_form(double azimuth, double beta_nlos, int num_antennas,
                                                     double angular_std) {
  Eigen::MatrixXcd r(num_antennas, num_antennas);
  const double sin_phi = std::sin(azimuth), cos_phi = std::cos(azimuth);
  for (int m = 0; m < num_antennas; ++m) {
    for (int n = 0; n < num_antennas; ++n) {
      const double lag = m - n;
      const double spread = angular_std * kPi * lag * cos_phi;
      r(m, n) = beta_nlos * std::exp(-spread * spread / 2.0) * std::polar(1.0, kPi * lag * sin_phi);
    }
  }
  return r;
}

/// A Hermitian PSD matrix together with its lower-triangular Cholesky
/// factor L (L L^H = R up to a relative diagonal jitter of at most 1e-8).
struct PsdFactor {
  Eigen::MatrixXcd matrix;
  Eigen::MatrixXcd chol;
  double min_raw_eigenvalue = 0.0;  // before flooring
  bool floored = false;
};

/// Symmetrizes `raw`, floors negative eigenvalues at zero and factors the
/// result. Singular matrices get the smallest diagonal jitter in
/// {1e-12, 1e-11, ..., 1e-8} x max diag that makes Cholesky succeed.
inline PsdFactor psd_factor(const Eigen::MatrixXcd& raw) {
  PsdFactor out;
  const Eigen::MatrixXcd herm = (raw + raw.adjoint()) / 2.0;
  const auto n = herm.rows();
  const double scale = n ? herm.diagonal().real().cwiseAbs().maxCoeff() : 0.0;
  if (!(scale > 0.0)) {
    out.matrix = herm;
    out.chol = Eigen::MatrixXcd::Zero(n, n);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm / scale);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  out.min_raw_eigenvalue = scale * eig.eigenvalues().minCoeff();
  out.floored = out.min_raw_eigenvalue < 0.0;
  if (out.floored) {
    const Eigen::VectorXd lambda = (scale * eig.eigenvalues()).cwiseMax(0.0);
    const Eigen::MatrixXcd& u = eig.eigenvectors();
    out.matrix = u * lambda.asDiagonal() * u.adjoint();
    out.matrix = (out.matrix + out.matrix.adjoint()).eval() / 2.0;
  } else {
    out.matrix = herm;
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(out.matrix);
  for (double jitter = 1e-12; llt.info() != Eigen::Success; jitter *= 10.0) {
    if (jitter > 1e-8) throw std::runtime_error("covariance is not positive semidefinite");
    llt.compute(out.matrix + Eigen::MatrixXcd::Identity(n, n) * (jitter * scale));
  }
  out.chol = llt.matrixL();
  return out;
}

/// NLoS spatial covariance R with diag(R) = beta_nlos, Hermitian PSD.
inline Eigen::MatrixXcd spatial_covariance(double azimuth, double beta_nlos, int num_antennas,
                                           double angular_std) {
  return psd_factor(local_scattering_closed_form(azimuth, beta_nlos, num_antennas, angular_std)).matrix;
}

/// Large-scale state of one UE-AP link, frozen for a network realization.
struct LinkState {
  bool is_los = false;
  double beta = 0.0;   // total linear path gain
  double kappa = 0.0;  // Rician factor, 0 on NLoS links
  Eigen::VectorXcd h_bar;  // LoS mean
  Eigen::MatrixXcd r;      // NLoS covariance
  Eigen::MatrixXcd r_chol; // lower triangular, r_chol * r_chol^H = r

  double beta_nlos() const { return is_los ? beta / (kappa + 1.0) : beta; }
};

/// Builds a link state from explicit large-scale parameters.
inline LinkState make_link_state(bool is_los, double beta, double kappa, double azimuth, int num_antennas,
                                 double angular_std) {
  LinkState st;
  st.is_los = is_los;
  st.beta = beta;
  st.kappa = is_los ? kappa : 0.0;
  const double beta_nlos = st.beta_nlos();
  if (is_los) {
    st.h_bar = std::sqrt(beta * st.kappa / (st.kappa + 1.0)) * steering_vector(azimuth, num_antennas);
  } else {
    st.h_bar = Eigen::VectorXcd::Zero(num_antennas);
  }
  auto f = psd_factor(local_scattering_closed_form(azimuth, beta_nlos, num_antennas, angular_std));
  st.r = std::move(f.matrix);
  st.r_chol = std::move(f.chol);
  return st;
}

/// Draws the LoS state and builds path gain, Rician factor, LoS mean and
/// NLoS covariance for one link. Consumes the LoS uniform first, then one
/// normal when shadowing is enabled.
inline LinkState large_scale(const LinkGeometry& g, int num_antennas, const ChannelConstants& c, RandomStream& rng) {
  if (!(g.d3d > 0.0)) throw std::invalid_argument("3D distance must be positive");
  const bool los = rng.bernoulli(los_probability(g.d2d, c));
  double pl = path_loss_db(g.d3d, los, c);
  if (c.shadowing_std_db > 0.0) pl += c.shadowing_std_db * rng.normal();
  const double beta = std::pow(10.0, -pl / 10.0);
  const double kappa = los ? rician_factor(g.d3d, c) : 0.0;
  return make_link_state(los, beta, kappa, g.azimuth, num_antennas, c.angular_std_rad);
}

// ---------------------------------------------------------------------------
// Small-scale realizations
// ---------------------------------------------------------------------------

/// All K x Q link states of a network realization, index k * Q + q.
struct LinkStates {
  int num_ues = 0;
  int num_aps = 0;
  int antennas_per_ap = 0;
  std::vector<LinkState> links;

  const LinkState& at(int k, int q) const { return links[static_cast<std::size_t>(k) * num_aps + q]; }
  LinkState& at(int k, int q) { return links[static_cast<std::size_t>(k) * num_aps + q]; }
};

/// One draw of every channel vector. Column k of `h` is the collective
/// M-vector of UE k: the S-blocks of APs 0..Q-1 stacked in order.
struct ChannelRealization {
  int num_ues = 0;
  int num_aps = 0;
  int antennas_per_ap = 0;
  Eigen::MatrixXcd h;  // M x K

  auto link(int k, int q) { return h.col(k).segment(static_cast<Eigen::Index>(q) * antennas_per_ap, antennas_per_ap); }
  auto link(int k, int q) const {
    return h.col(k).segment(static_cast<Eigen::Index>(q) * antennas_per_ap, antennas_per_ap);
  }
};

/// h_kq = h_bar_kq + L_kq e with e ~ CN(0, I_S), drawn k-major then q.
inline ChannelRealization sample_channel(const LinkStates& ls, RandomStream& rng) {
  ChannelRealization ch{ls.num_ues, ls.num_aps, ls.antennas_per_ap,
                        Eigen::MatrixXcd(static_cast<Eigen::Index>(ls.num_aps) * ls.antennas_per_ap, ls.num_ues)};
  Eigen::VectorXcd e(ls.antennas_per_ap);
  for (int k = 0; k < ls.num_ues; ++k) {
    for (int q = 0; q < ls.num_aps; ++q) {
      const LinkState& st = ls.at(k, q);
      for (int s = 0; s < ls.antennas_per_ap; ++s) e(s) = rng.complex_normal();
      ch.link(k, q) = st.h_bar;
      ch.link(k, q).noalias() += st.r_chol.triangularView<Eigen::Lower>() * e;
    }
  }
  return ch;
}

// Binary fixture layout: "DMCH", uint32 version, uint32 K, Q, S, then
// K*Q*S little-endian (re, im) double pairs in row-major (k, q, s) order.
namespace detail {
inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}
inline void put_f64(std::ostream& out, double d) {
  std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}
inline double get_f64(std::istream& in) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return std::bit_cast<double>(v);
}
}  // namespace detail

inline constexpr std::uint32_t kChannelDumpVersion = 1;

inline void write_channel_binary(std::ostream& out, const ChannelRealization& ch) {
  out.write("DMCH", 4);
  detail::put_u32(out, kChannelDumpVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(ch.num_ues));
  detail::put_u32(out, static_cast<std::uint32_t>(ch.num_aps));
  detail::put_u32(out, static_cast<std::uint32_t>(ch.antennas_per_ap));
  for (int k = 0; k < ch.num_ues; ++k)
    for (int q = 0; q < ch.num_aps; ++q)
      for (int s = 0; s < ch.antennas_per_ap; ++s) {
        const cd v = ch.link(k, q)(s);
        detail::put_f64(out, v.real());
        detail::put_f64(out, v.imag());
      }
}

inline ChannelRealization read_channel_binary(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DMCH", 4) != 0) throw std::runtime_error("not a channel dump");
  if (detail::get_u32(in) != kChannelDumpVersion) throw std::runtime_error("unsupported channel dump version");
  ChannelRealization ch;
  ch.num_ues = static_cast<int>(detail::get_u32(in));
  ch.num_aps = static_cast<int>(detail::get_u32(in));
  ch.antennas_per_ap = static_cast<int>(detail::get_u32(in));
  ch.h.resize(static_cast<Eigen::Index>(ch.num_aps) * ch.antennas_per_ap, ch.num_ues);
  for (int k = 0; k < ch.num_ues; ++k)
    for (int q = 0; q < ch.num_aps; ++q)
      for (int s = 0; s < ch.antennas_per_ap; ++s) {
        const double re = detail::get_f64(in);
        const double im = detail::get_f64(in);
        ch.link(k, q)(s) = cd(re, im);
      }
  if (!in) throw std::runtime_error("truncated channel dump");
  return ch;
}

}  // namespace dmimo

#endif  // DMIMO_CHANNEL_HPP
