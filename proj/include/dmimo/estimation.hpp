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

#ifndef DMIMO_ESTIMATION_HPP
#define DMIMO_ESTIMATION_HPP

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dmimo/channel.hpp"
#include "dmimo/random.hpp"

namespace dmimo {

/// Balanced cyclic pilot assignment. UE k (0-based) uses slot k mod tau_p,
/// i.e. the 1-based pilot index n_k = k - floor((k-1)/tau_p) * tau_p.
struct PilotPlan {
  int pilot_length = 0;
  std::vector<int> slot;                // per UE, 0-based
  std::vector<std::vector<int>> cohort; // per slot, UEs sharing it (ascending)

  int pilot_index(int k) const { return slot[static_cast<std::size_t>(k)] + 1; }
};

inline PilotPlan assign_pilots(int num_ues, int pilot_length) {
  if (num_ues < 1 || pilot_length < 1) throw std::invalid_argument("K and tau_p must be positive");
  PilotPlan plan;
  plan.pilot_length = pilot_length;
  plan.slot.resize(static_cast<std::size_t>(num_ues));
  plan.cohort.resize(static_cast<std::size_t>(pilot_length));
  for (int k = 0; k < num_ues; ++k) {
    const int t = k % pilot_length;
    plan.slot[static_cast<std::size_t>(k)] = t;
    plan.cohort[static_cast<std::size_t>(t)].push_back(k);
  }
  return plan;
}

/// Received pilot signals. Column t of `y` stacks the S-vectors y_{q,t} of
/// all APs, same layout as ChannelRealization::h.
struct PilotObservation {
  int num_aps = 0;
  int antennas_per_ap = 0;
  int pilot_length = 0;
  Eigen::MatrixXcd y;  // M x tau_p

  auto at(int q, int t) const {
    return y.col(t).segment(static_cast<Eigen::Index>(q) * antennas_per_ap, antennas_per_ap);
  }
};

/// y_{q,t} = sum_{i in P_t} sqrt(p) h_iq + z, z ~ CN(0, sigma2 I). Noise is
/// drawn slot-major, entries in column order.
inline PilotObservation receive_pilots(const ChannelRealization& ch, const PilotPlan& plan, double pilot_power,
                                       double sigma2, RandomStream& rng) {
  PilotObservation obs{ch.num_aps, ch.antennas_per_ap, plan.pilot_length,
                       Eigen::MatrixXcd::Zero(ch.h.rows(), plan.pilot_length)};
  const double amp = std::sqrt(pilot_power);
  for (int t = 0; t < plan.pilot_length; ++t) {
    auto col = obs.y.col(t);
    for (int i : plan.cohort[static_cast<std::size_t>(t)]) col += amp * ch.h.col(i);
    if (sigma2 > 0.0)
      for (Eigen::Index m = 0; m < col.size(); ++m) col(m) += rng.complex_normal(sigma2);
  }
  return obs;
}

/// Psi = sum_i p R_i + sigma2 I over the co-pilot covariances.
inline Eigen::MatrixXcd psi_matrix(std::span<const Eigen::MatrixXcd> cohort_covariances, int num_antennas,
                                   double pilot_power, double sigma2) {
  Eigen::MatrixXcd psi = sigma2 * Eigen::MatrixXcd::Identity(num_antennas, num_antennas);
  for (const auto& r : cohort_covariances) psi += pilot_power * r;
  return psi;
}

/// sqrt(p) R Psi^{-1} y, solved through the Cholesky factor of Psi.
inline Eigen::VectorXcd lmmse_estimate(const Eigen::VectorXcd& y, const Eigen::MatrixXcd& r,
                                       const Eigen::MatrixXcd& psi, double pilot_power) {
  Eigen::LLT<Eigen::MatrixXcd> llt(psi);
  if (llt.info() != Eigen::Success) throw std::runtime_error("Psi is not positive definite");
  return std::sqrt(pilot_power) * (r * llt.solve(y));
}

/// LMMSE estimates of every link, same layout as ChannelRealization::h.
/// `psi` is shared with the estimator that produced it (index t * Q + q).
struct EstimationOutput {
  Eigen::MatrixXcd h_hat;  // M x K
  std::shared_ptr<const std::vector<Eigen::MatrixXcd>> psi;
};

/// LMMSE estimator bound to one network realization. Psi_{t,q} and the
/// estimator matrices A_kq = sqrt(p) R_kq Psi_{n_k,q}^{-1} depend only on
/// second-order statistics, so they are factored once here and reused for
/// every channel realization.
class LmmseEstimator {
 public:
  LmmseEstimator(const LinkStates& links, const PilotPlan& plan, double pilot_power, double sigma2)
      : num_ues_(links.num_ues), num_aps_(links.num_aps), antennas_(links.antennas_per_ap), plan_(plan) {
    auto psi = std::make_shared<std::vector<Eigen::MatrixXcd>>();
    psi->reserve(static_cast<std::size_t>(plan.pilot_length) * num_aps_);
    std::vector<Eigen::MatrixXcd> covs;
    for (int t = 0; t < plan.pilot_length; ++t) {
      for (int q = 0; q < num_aps_; ++q) {
        covs.clear();
        for (int i : plan.cohort[static_cast<std::size_t>(t)]) covs.push_back(links.at(i, q).r);
        psi->push_back(psi_matrix(covs, antennas_, pilot_power, sigma2));
      }
    }
    const double amp = std::sqrt(pilot_power);
    gain_.reserve(static_cast<std::size_t>(num_ues_) * num_aps_);
    for (int k = 0; k < num_ues_; ++k) {
      for (int q = 0; q < num_aps_; ++q) {
        const auto& p = (*psi)[static_cast<std::size_t>(plan.slot[static_cast<std::size_t>(k)]) * num_aps_ + q];
        Eigen::LLT<Eigen::MatrixXcd> llt(p);
        if (llt.info() != Eigen::Success) throw std::runtime_error("Psi is not positive definite");
        // R Psi^{-1} = (Psi^{-1} R)^H for Hermitian R and Psi.
        gain_.push_back(amp * llt.solve(links.at(k, q).r).adjoint());
      }
    }
    psi_ = std::move(psi);
  }

  EstimationOutput estimate(const PilotObservation& obs) const {
    EstimationOutput out{Eigen::MatrixXcd(static_cast<Eigen::Index>(num_aps_) * antennas_, num_ues_), psi_};
    for (int k = 0; k < num_ues_; ++k) {
      const int t = plan_.slot[static_cast<std::size_t>(k)];
      for (int q = 0; q < num_aps_; ++q) {
        out.h_hat.col(k).segment(static_cast<Eigen::Index>(q) * antennas_, antennas_).noalias() =
            gain_[static_cast<std::size_t>(k) * num_aps_ + q] * obs.at(q, t);
      }
    }
    return out;
  }

  const Eigen::MatrixXcd& psi(int t, int q) const { return (*psi_)[static_cast<std::size_t>(t) * num_aps_ + q]; }
  const Eigen::MatrixXcd& gain(int k, int q) const { return gain_[static_cast<std::size_t>(k) * num_aps_ + q]; }

 private:
  int num_ues_, num_aps_, antennas_;
  PilotPlan plan_;
  std::shared_ptr<const std::vector<Eigen::MatrixXcd>> psi_;
  std::vector<Eigen::MatrixXcd> gain_;
};

}  // namespace dmimo

#endif  // DMIMO_ESTIMATION_HPP
