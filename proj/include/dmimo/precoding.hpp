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

#ifndef DMIMO_PRECODING_HPP
#define DMIMO_PRECODING_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/channel.hpp"
#include "dmimo/estimation.hpp"
#include "dmimo/network.hpp"
#include "dmimo/random.hpp"

namespace dmimo {

/// Raised when Monte Carlo statistics violate an invariant they must satisfy.
class StatisticalInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// MRT: w_kq = h_hat_kq, same M x K layout.
inline Eigen::MatrixXcd mrt_precoders(const EstimationOutput& est) { return est.h_hat; }

struct PrecoderSet {
  Eigen::MatrixXcd w;     // M x K
  std::vector<double> mu; // per AP
};

/// Running sum of sum_i ||w_iq||^2 per AP over precoder samples.
class PowerAccumulator {
 public:
  PowerAccumulator(int num_aps, int antennas_per_ap)
      : antennas_(antennas_per_ap), sums_(static_cast<std::size_t>(num_aps), 0.0) {}

  void add(const Eigen::MatrixXcd& w) {
    for (std::size_t q = 0; q < sums_.size(); ++q)
      sums_[q] += w.middleRows(static_cast<Eigen::Index>(q) * antennas_, antennas_).squaredNorm();
    ++count_;
  }

  std::size_t count() const { return count_; }

  /// mu_q = 1 / mean(sum_i ||w_iq||^2). An AP whose precoders are all zero
  /// gets mu_q = 0 and is reported in `degenerate`.
  std::vector<double> mu(std::vector<int>* degenerate = nullptr) const {
    if (count_ == 0) throw std::invalid_argument("normalization needs at least one realization");
    std::vector<double> mu(sums_.size());
    for (std::size_t q = 0; q < sums_.size(); ++q) {
      const double mean = sums_[q] / static_cast<double>(count_);
      if (mean > 0.0) {
        mu[q] = 1.0 / mean;
      } else {
        mu[q] = 0.0;
        if (degenerate) degenerate->push_back(static_cast<int>(q));
      }
    }
    return mu;
  }

 private:
  int antennas_;
  std::vector<double> sums_;
  std::size_t count_ = 0;
};

/// Per-AP normalization from precoder samples of one network realization.
inline std::vector<double> normalization(std::span<const Eigen::MatrixXcd> w_samples, int num_aps,
                                         int antennas_per_ap, std::vector<int>* degenerate = nullptr) {
  PowerAccumulator acc(num_aps, antennas_per_ap);
  for (const auto& w : w_samples) acc.add(w);
  return acc.mu(degenerate);
}

/// p_d mu_q sum_i ||w_iq||^2 for every AP: the transmit power E_s ||x_q||^2
/// of one precoder realization.
inline std::vector<double> ap_transmit_power(const Eigen::MatrixXcd& w, std::span<const double> mu, double ap_power,
                                             int antennas_per_ap) {
  std::vector<double> out(mu.size());
  for (std::size_t q = 0; q < mu.size(); ++q)
    out[q] = ap_power * mu[q] *
             w.middleRows(static_cast<Eigen::Index>(q) * antennas_per_ap, antennas_per_ap).squaredNorm();
  return out;
}

/// Monte Carlo estimates of the use-and-then-forget terms.
///   ds(k, q)           = E{ sqrt(mu_q) h_kq^H w_kq }
///   interference(k, i) = E{ |sum_q sqrt(mu_q) h_kq^H w_iq|^2 }
struct UatFStatistics {
  Eigen::MatrixXcd ds;            // K x Q
  Eigen::MatrixXd interference;   // K x K
  std::vector<double> mu;
  std::vector<int> degenerate_aps;
  int normalization_samples = 0;
  int samples = 0;

  std::complex<double> ds_sum(int k) const { return ds.row(k).sum(); }
};

/// One channel draw of a network realization with its precoders.
struct PrecodedDraw {
  ChannelRealization channel;
  Eigen::MatrixXcd w;
};

/// Samples a channel, synthesizes pilots, estimates and applies MRT. With
/// perfect CSI the precoder is the true channel and no pilots are drawn.
inline PrecodedDraw draw_precoded(const NetworkRealization& net, RandomStream& rng, bool perfect_csi) {
  PrecodedDraw d{sample_channel(net, rng), {}};
  if (perfect_csi) {
    d.w = d.channel.h;
    return d;
  }
  const auto obs = receive_pilots(d.channel, net.pilots, pilot_power(net.config), net.config.noise_power_w, rng);
  d.w = mrt_precoders(net.estimator.estimate(obs));
  return d;
}

inline constexpr std::uint64_t kNormalizationPass = 0;
inline constexpr std::uint64_t kStatisticsPass = 1;

/// Two-pass estimator: mu from `n_realizations` draws, then DS and INT from
/// another `n_realizations` independent draws. Draw r of pass P uses the
/// stream derive_seed(seed, P, r).
inline UatFStatistics estimate_uatf_stats(const NetworkRealization& net, int n_realizations, std::uint64_t seed,
                                          bool perfect_csi = false) {
  if (n_realizations < 2) throw std::invalid_argument("need at least 2 channel realizations");
  const int K = net.config.num_ues, Q = net.config.num_aps, S = net.config.antennas_per_ap;

  UatFStatistics st;
  PowerAccumulator power(Q, S);
  for (int r = 0; r < n_realizations; ++r) {
    RandomStream rng(derive_seed(seed, kNormalizationPass, static_cast<std::uint64_t>(r)));
    power.add(draw_precoded(net, rng, perfect_csi).w);
  }
  st.mu = power.mu(&st.degenerate_aps);
  st.normalization_samples = n_realizations;

  Eigen::VectorXd sqrt_mu_rows(static_cast<Eigen::Index>(Q) * S);
  for (int q = 0; q < Q; ++q) sqrt_mu_rows.segment(static_cast<Eigen::Index>(q) * S, S).setConstant(std::sqrt(st.mu[q]));

  Eigen::MatrixXcd ds_sum = Eigen::MatrixXcd::Zero(K, Q);
  Eigen::MatrixXd int_sum = Eigen::MatrixXd::Zero(K, K);
  Eigen::MatrixXcd scaled_w, gains;
  for (int r = 0; r < n_realizations; ++r) {
    RandomStream rng(derive_seed(seed, kStatisticsPass, static_cast<std::uint64_t>(r)));
    const auto d = draw_precoded(net, rng, perfect_csi);
    const auto& h = d.channel.h;
    for (int q = 0; q < Q; ++q) {
      const auto hq = h.middleRows(static_cast<Eigen::Index>(q) * S, S);
      const auto wq = d.w.middleRows(static_cast<Eigen::Index>(q) * S, S);
      for (int k = 0; k < K; ++k) ds_sum(k, q) += hq.col(k).dot(wq.col(k));
    }
    scaled_w = sqrt_mu_rows.asDiagonal() * d.w;
    gains.noalias() = h.adjoint() * scaled_w;  // gains(k, i) = sum_q sqrt(mu_q) h_kq^H w_iq
    int_sum += gains.cwiseAbs2();
  }
  const double n = n_realizations;
  st.ds = ds_sum / n;
  for (int q = 0; q < Q; ++q) st.ds.col(q) *= std::sqrt(st.mu[q]);
  st.interference = int_sum / n;
  st.samples = n_realizations;
  return st;
}

/// Effective downlink SINR of every UE:
///   p_d |sum_q DS_kq|^2 / (p_int sum_i INT_ki - p_d |sum_q DS_kq|^2 + sigma2)
/// with p_int = p_d unless the printed uplink-power form is requested.
/// Denominators below 1e-3 sigma2 are clamped to sigma2 / 2 (reported via
/// `diagnostics`); below -1e-3 sigma2 they raise StatisticalInconsistency.
inline std::vector<double> uatf_sinr(const UatFStatistics& stats, double ap_power, double sigma2,
                                     double interference_power, std::vector<std::string>* diagnostics = nullptr) {
  const auto K = stats.interference.rows();
  std::vector<double> gamma(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) {
    const double desired = ap_power * std::norm(stats.ds.row(k).sum());
    double den = interference_power * stats.interference.row(k).sum() - desired + sigma2;
    if (den < 1e-3 * sigma2) {
      if (den < -1e-3 * sigma2) {
        throw StatisticalInconsistency("negative SINR denominator for user " + std::to_string(k));
      }
      if (diagnostics) diagnostics->push_back("clamped SINR denominator for user " + std::to_string(k));
      den = sigma2 / 2.0;
    }
    gamma[static_cast<std::size_t>(k)] = desired / den;
  }
  return gamma;
}

inline std::vector<double> uatf_sinr(const UatFStatistics& stats, double ap_power, double sigma2) {
  return uatf_sinr(stats, ap_power, sigma2, ap_power);
}

/// SE_k = (tau_d / tau_c) log2(1 + gamma_k) bits/s/Hz.
inline std::vector<double> se_per_user(std::span<const double> gamma, int coherence_block, int downlink_samples) {
  std::vector<double> se(gamma.size());
  const double prefactor = static_cast<double>(downlink_samples) / coherence_block;
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    if (gamma[k] < 0.0) throw std::invalid_argument("SINR must be nonnegative");
    se[k] = prefactor * std::log2(1.0 + gamma[k]);
  }
  return se;
}

}  // namespace dmimo

#endif  // DMIMO_PRECODING_HPP
