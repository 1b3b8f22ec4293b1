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

#ifndef DMIMO_CONFIG_HPP
#define DMIMO_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmimo/units.hpp"

namespace dmimo {

/// Raised when a configuration fails validation. `issues()` lists every
/// violated constraint, not just the first one found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& s : issues) out += " " + s + ";";
    return out;
  }
  std::vector<std::string> issues_;
};

/// Large-scale propagation constants (3GPP urban-micro family).
/// Distances in meters, angles in radians.
struct ChannelConstants {
  // P_LoS(d) = min(b/d, 1)(1 - exp(-d/c)) + exp(-d/c), evaluated on the 2D distance.
  double los_breakpoint_m = 18.0;
  double los_decay_m = 36.0;
  // PL_dB = intercept + slope * log10(d3D)
  double pl_los_intercept_db = 30.18;
  double pl_los_slope_db = 26.0;
  double pl_nlos_intercept_db = 34.53;
  double pl_nlos_slope_db = 38.0;
  // kappa = 10^(intercept - slope * d3D) on LoS links
  double rician_log10_intercept = 1.3;
  double rician_log10_slope_per_m = 0.003;
  double angular_std_rad = degrees_to_radians(15.0);
  // 0 disables log-normal shadowing.
  double shadowing_std_db = 0.0;
};

/// Switches that select between printed and alternative model forms.
struct ModelOptions {
  // Multiply pilot power by tau_p (processing gain of the orthogonal pilots).
  bool pilot_gain_tau_p = false;
  // Use the uplink power p instead of p_d in front of the interference sum.
  bool sinr_denominator_uses_uplink_p = false;
  // Precode with the true channel instead of the LMMSE estimate.
  bool perfect_csi = false;
  // Average SINR over network realizations before taking log2.
  bool average_sinr_before_log = false;
};

struct MonteCarloSettings {
  int networks = 10;
  int channels = 200;
  std::uint64_t seed = 1;
};

inline constexpr int kPaperScaleNetworks = 50;
inline constexpr int kPaperScaleChannels = 1000;

/// Thermal noise power in watts for bandwidth `bandwidth_hz` and receiver
/// noise figure `noise_figure_db`: -174 dBm/Hz + 10 log10(B) + NF.
inline double derive_noise_power(double bandwidth_hz, double noise_figure_db) {
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  return dbm_to_watts(kThermalNoiseDbmPerHz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

/// Every parameter of one simulated scenario. Powers are linear watts.
/// Derived fields (total_antennas, ap_power_w, downlink_samples,
/// noise_power_w) are filled by finalize(); do not set them directly.
struct ScenarioConfig {
  int num_ues = 20;          // K
  int num_aps = 16;          // Q
  int antennas_per_ap = 4;   // S
  int total_antennas = 64;   // M = Q*S (derived)

  double side_length_m = 500.0;
  double bandwidth_hz = 20e6;
  double carrier_frequency_hz = 2e9;

  int coherence_block = 200;  // tau_c
  int pilot_length = 10;      // tau_p
  int downlink_samples = 189; // tau_d = tau_c - tau_p - 1 (derived)

  double uplink_power_w = dbm_to_watts(23.0);
  double downlink_total_power_w = dbm_to_watts(49.03);
  double ap_power_w = dbm_to_watts(49.03) / 16.0;  // p_d = P/Q (derived)

  double noise_figure_db = 9.0;
  std::optional<double> noise_power_explicit_w;  // wins over the derived value
  double noise_power_w = derive_noise_power(20e6, 9.0);

  double ap_height_m = 12.5;
  double ue_height_m = 1.5;
  double antenna_spacing_wavelengths = 0.5;

  ChannelConstants channel;
  ModelOptions options;
  MonteCarloSettings mc;

  double ap_density_per_km2() const {
    const double side_km = side_length_m / 1000.0;
    return static_cast<double>(num_aps) / (side_km * side_km);
  }
};

inline bool is_perfect_square(int n) {
  if (n <= 0) return false;
  int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n;
}

inline int grid_side(int num_aps) {
  return static_cast<int>(std::lround(std::sqrt(static_cast<double>(num_aps))));
}

/// Lists every constraint violated by `cfg` (derived fields are not trusted).
inline std::vector<std::string> validation_issues(const ScenarioConfig& cfg) {
  std::vector<std::string> issues;
  if (cfg.num_ues <= 0) issues.emplace_back("K must be positive");
  if (cfg.num_aps <= 0) {
    issues.emplace_back("Q must be positive");
  } else if (!is_perfect_square(cfg.num_aps)) {
    issues.emplace_back("Q must be a perfect square");
  }
  if (cfg.antennas_per_ap <= 0) issues.emplace_back("S must be positive");
  if (cfg.num_aps > 0 && cfg.antennas_per_ap > 0 && cfg.num_ues > 0 &&
      static_cast<long long>(cfg.num_aps) * cfg.antennas_per_ap <= cfg.num_ues) {
    issues.emplace_back("M = Q*S must exceed K");
  }
  if (!(cfg.side_length_m > 0.0)) issues.emplace_back("side length must be positive");
  if (!(cfg.bandwidth_hz > 0.0)) issues.emplace_back("bandwidth must be positive");
  if (!(cfg.carrier_frequency_hz > 0.0)) issues.emplace_back("carrier frequency must be positive");
  if (cfg.pilot_length <= 0) issues.emplace_back("tau_p must be positive");
  if (cfg.coherence_block <= 0) issues.emplace_back("tau_c must be positive");
  if (cfg.pilot_length > 0 && cfg.coherence_block > 0 &&
      cfg.coherence_block - cfg.pilot_length - 1 <= 0) {
    issues.emplace_back("tau_p must be smaller than tau_c - 1 (need tau_d > 0)");
  }
  if (!(cfg.uplink_power_w > 0.0)) issues.emplace_back("uplink power must be positive");
  if (!(cfg.downlink_total_power_w > 0.0)) issues.emplace_back("downlink total power must be positive");
  if (cfg.noise_power_explicit_w && !(*cfg.noise_power_explicit_w > 0.0)) {
    issues.emplace_back("noise power must be positive");
  }
  if (!(cfg.ap_height_m > 0.0) || !(cfg.ue_height_m > 0.0)) issues.emplace_back("heights must be positive");
  if (!(cfg.ap_height_m > cfg.ue_height_m)) issues.emplace_back("AP height must exceed UE height");
  if (cfg.antenna_spacing_wavelengths != 0.5) issues.emplace_back("antenna spacing is fixed at half a wavelength");
  const auto& ch = cfg.channel;
  if (!(ch.los_breakpoint_m > 0.0) || !(ch.los_decay_m > 0.0)) issues.emplace_back("LoS probability constants must be positive");
  if (!(ch.angular_std_rad > 0.0)) issues.emplace_back("angular standard deviation must be positive");
  if (ch.shadowing_std_db < 0.0) issues.emplace_back("shadowing std must be nonnegative");
  if (cfg.mc.networks <= 0) issues.emplace_back("network realization count must be positive");
  if (cfg.mc.channels < 2) issues.emplace_back("channel realization count must be at least 2");
  return issues;
}

/// Validates `cfg` and fills the derived fields. Throws ConfigError.
inline ScenarioConfig finalize(ScenarioConfig cfg) {
  if (auto issues = validation_issues(cfg); !issues.empty()) throw ConfigError(std::move(issues));
  cfg.total_antennas = cfg.num_aps * cfg.antennas_per_ap;
  cfg.downlink_samples = cfg.coherence_block - cfg.pilot_length - 1;
  cfg.ap_power_w = cfg.downlink_total_power_w / cfg.num_aps;
  cfg.noise_power_w = cfg.noise_power_explicit_w.value_or(derive_noise_power(cfg.bandwidth_hz, cfg.noise_figure_db));
  return cfg;
}

/// Table 1 parameters with Q=16, S=4 (M=64), l=500 m.
inline ScenarioConfig default_config() { return finalize(ScenarioConfig{}); }

namespace detail {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string prefix, std::vector<std::string>& issues)
      : obj_(obj), prefix_(std::move(prefix)), issues_(issues) {
    if (!obj_.is_object()) issues_.push_back(where("") + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      out = obj_.at(key).template get<T>();
    } catch (const json::exception&) {
      issues_.push_back(where(key) + " has the wrong type");
    }
  }

  void touch(const char* key) { seen_.insert(key); }

  bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }

  const json* child(const char* key) {
    seen_.insert(key);
    return has(key) ? &obj_.at(key) : nullptr;
  }

  // Reads either <stem>_dbm or <stem>_w into watts.
  void power(const std::string& stem, double& watts) {
    const std::string dbm = stem + "_dbm", w = stem + "_w";
    seen_.insert(dbm);
    seen_.insert(w);
    if (has(dbm.c_str()) && has(w.c_str())) {
      issues_.push_back(where(stem.c_str()) + " given in both dBm and W");
      return;
    }
    double v = 0.0;
    if (has(dbm.c_str())) {
      get(dbm.c_str(), v);
      watts = dbm_to_watts(v);
    } else if (has(w.c_str())) {
      get(w.c_str(), v);
      watts = v;
    }
  }

  void reject_unknown() {
    if (!obj_.is_object()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) issues_.push_back("unknown key " + where(it.key().c_str()));
    }
  }

 private:
  std::string where(const char* key) const {
    std::string k = prefix_.empty() ? key : prefix_ + "." + key;
    return k.empty() ? std::string("document") : "'" + k + "'";
  }

  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parses a JSON configuration document. Missing keys keep the Table 1
/// defaults of ScenarioConfig; unknown keys are rejected. Powers may be
/// given as `<name>_dbm` or `<name>_w`. Throws ConfigError.
inline ScenarioConfig load_config(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed document: ") + e.what()});
  }

  std::vector<std::string> issues;
  ScenarioConfig cfg;
  detail::Reader top(doc, "", issues);

  top.get("num_ues", cfg.num_ues);
  top.get("num_aps", cfg.num_aps);
  std::optional<int> s, m;
  if (top.has("antennas_per_ap")) { int v = 0; top.get("antennas_per_ap", v); s = v; } else { top.get("antennas_per_ap", cfg.antennas_per_ap); }
  if (top.has("total_antennas")) { int v = 0; top.get("total_antennas", v); m = v; } else { top.get("total_antennas", cfg.total_antennas); }
  if (s) {
    cfg.antennas_per_ap = *s;
    if (m && cfg.num_aps > 0 && *m != cfg.num_aps * *s) issues.emplace_back("total_antennas must equal num_aps * antennas_per_ap");
  } else if (m) {
    if (cfg.num_aps > 0 && *m % cfg.num_aps == 0) {
      cfg.antennas_per_ap = *m / cfg.num_aps;
    } else {
      issues.emplace_back("total_antennas must be a multiple of num_aps");
    }
  }

  top.get("side_length_m", cfg.side_length_m);
  top.get("bandwidth_hz", cfg.bandwidth_hz);
  top.get("carrier_frequency_hz", cfg.carrier_frequency_hz);
  top.get("coherence_block_samples", cfg.coherence_block);
  top.get("pilot_length_samples", cfg.pilot_length);
  top.power("uplink_power", cfg.uplink_power_w);
  top.power("downlink_total_power", cfg.downlink_total_power_w);
  top.get("noise_figure_db", cfg.noise_figure_db);
  {
    double noise = 0.0;
    bool had = top.has("noise_power_dbm") || top.has("noise_power_w");
    top.power("noise_power", noise);
    if (had) cfg.noise_power_explicit_w = noise;
  }
  top.get("ap_height_m", cfg.ap_height_m);
  top.get("ue_height_m", cfg.ue_height_m);
  top.get("antenna_spacing_wavelengths", cfg.antenna_spacing_wavelengths);

  if (const auto* ch = top.child("channel")) {
    detail::Reader r(*ch, "channel", issues);
    auto& c = cfg.channel;
    r.get("los_breakpoint_m", c.los_breakpoint_m);
    r.get("los_decay_m", c.los_decay_m);
    r.get("pl_los_intercept_db", c.pl_los_intercept_db);
    r.get("pl_los_slope_db", c.pl_los_slope_db);
    r.get("pl_nlos_intercept_db", c.pl_nlos_intercept_db);
    r.get("pl_nlos_slope_db", c.pl_nlos_slope_db);
    r.get("rician_log10_intercept", c.rician_log10_intercept);
    r.get("rician_log10_slope_per_m", c.rician_log10_slope_per_m);
    if (r.has("angular_std_deg") && r.has("angular_std_rad")) {
      issues.emplace_back("'channel' angular std given in both deg and rad");
    }
    double deg = 0.0;
    if (r.has("angular_std_deg")) {
      r.get("angular_std_deg", deg);
      c.angular_std_rad = degrees_to_radians(deg);
    }
    r.get("angular_std_rad", c.angular_std_rad);
    r.touch("angular_std_deg");
    r.get("shadowing_std_db", c.shadowing_std_db);
    r.reject_unknown();
  }
  if (const auto* op = top.child("options")) {
    detail::Reader r(*op, "options", issues);
    auto& o = cfg.options;
    r.get("pilot_gain_tau_p", o.pilot_gain_tau_p);
    r.get("sinr_denominator_uses_uplink_p", o.sinr_denominator_uses_uplink_p);
    r.get("perfect_csi", o.perfect_csi);
    r.get("average_sinr_before_log", o.average_sinr_before_log);
    r.reject_unknown();
  }
  if (const auto* mc = top.child("monte_carlo")) {
    detail::Reader r(*mc, "monte_carlo", issues);
    r.get("networks", cfg.mc.networks);
    r.get("channels", cfg.mc.channels);
    r.get("seed", cfg.mc.seed);
    r.reject_unknown();
  }
  top.reject_unknown();

  if (!issues.empty()) throw ConfigError(std::move(issues));
  return finalize(cfg);
}

inline ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

/// Serializes `cfg` with powers in watts; load_config() reproduces every field.
inline std::string dump_config(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["num_ues"] = cfg.num_ues;
  j["num_aps"] = cfg.num_aps;
  j["antennas_per_ap"] = cfg.antennas_per_ap;
  j["side_length_m"] = cfg.side_length_m;
  j["bandwidth_hz"] = cfg.bandwidth_hz;
  j["carrier_frequency_hz"] = cfg.carrier_frequency_hz;
  j["coherence_block_samples"] = cfg.coherence_block;
  j["pilot_length_samples"] = cfg.pilot_length;
  j["uplink_power_w"] = cfg.uplink_power_w;
  j["downlink_total_power_w"] = cfg.downlink_total_power_w;
  j["noise_figure_db"] = cfg.noise_figure_db;
  if (cfg.noise_power_explicit_w) j["noise_power_w"] = *cfg.noise_power_explicit_w;
  j["ap_height_m"] = cfg.ap_height_m;
  j["ue_height_m"] = cfg.ue_height_m;
  j["antenna_spacing_wavelengths"] = cfg.antenna_spacing_wavelengths;
  const auto& c = cfg.channel;
  j["channel"] = {{"los_breakpoint_m", c.los_breakpoint_m},
                  {"los_decay_m", c.los_decay_m},
                  {"pl_los_intercept_db", c.pl_los_intercept_db},
                  {"pl_los_slope_db", c.pl_los_slope_db},
                  {"pl_nlos_intercept_db", c.pl_nlos_intercept_db},
                  {"pl_nlos_slope_db", c.pl_nlos_slope_db},
                  {"rician_log10_intercept", c.rician_log10_intercept},
                  {"rician_log10_slope_per_m", c.rician_log10_slope_per_m},
                  {"angular_std_rad", c.angular_std_rad},
                  {"shadowing_std_db", c.shadowing_std_db}};
  const auto& o = cfg.options;
  j["options"] = {{"pilot_gain_tau_p", o.pilot_gain_tau_p},
                  {"sinr_denominator_uses_uplink_p", o.sinr_denominator_uses_uplink_p},
                  {"perfect_csi", o.perfect_csi},
                  {"average_sinr_before_log", o.average_sinr_before_log}};
  j["monte_carlo"] = {{"networks", cfg.mc.networks}, {"channels", cfg.mc.channels}, {"seed", cfg.mc.seed}};
  return j.dump(2);
}

}  // namespace dmimo

#endif  // DMIMO_CONFIG_HPP
