// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace macopt {

/// Per-user rates in bits per subcarrier-use, summed over subcarriers.
struct RateVector {
  std::vector<double> r;

  RateVector() = default;
  explicit RateVector(std::size_t users, double value = 0.0) : r(users, value) {}
  explicit RateVector(std::vector<double> values) : r(std::move(values)) {}

  std::size_t size() const noexcept { return r.size(); }
  double& operator[](std::size_t u) { return r[u]; }
  double operator[](std::size_t u) const { return r[u]; }
  double sum() const noexcept;
  bool valid() const noexcept;
};

/// Static description of one uplink problem instance.
///
/// Rates are bits per subcarrier-use aggregated over the N subcarriers; power
/// and energy are linear mW (unit symbol duration, so energy == average power).
struct Scenario {
  int num_users = 3;
  int num_ap_antennas = 2;
  int num_subcarriers = 64;
  double bandwidth_hz = 80e6;
  double noise_psd_dbm_hz = -174.0;
  std::vector<double> rate_targets;
  std::vector<double> energy_weights;
  double max_power_dbm = 17.0;
  double snr_db = 20.0;
  std::vector<double> distances_m;
  double pathloss_exponent = 4.0;
  std::uint64_t seed = 1;

  /// Noise power per subcarrier in mW (PSD integrated over B/N).
  double noise_power_mw() const;
  double subcarrier_rate_hz() const { return bandwidth_hz / num_subcarriers; }
  double max_power_mw() const;

  /// Fills empty per-user lists with defaults: theta = 1, distance = 3 m and
  /// an equal split of a 500 Mbps aggregate uplink requirement.
  void fill_defaults();

  /// Three users, two AP antennas, 80 MHz over 64 subcarriers, 3 m.
  static Scenario case_study();
  /// Case study on 8 subcarriers; the default for experiments and training.
  static Scenario desk_scale();

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Aggregate uplink requirement used to derive default rate targets.
inline constexpr double kDefaultAggregateRateBps = 500e6;

/// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate(const Scenario& scenario);

/// Throws ConfigError listing every violation.
void require_valid(const Scenario& scenario);

namespace units {

double dbm_to_mw(double dbm);
double mw_to_dbm(double mw);
/// Total noise power in mW for a PSD in dBm/Hz integrated over bandwidth_hz.
double noise_power_mw(double psd_dbm_hz, double bandwidth_hz);
/// bits: per-use rate summed over subcarriers; returns Mbps at symbol rate B/N.
double bits_per_use_to_mbps(double bits, double bandwidth_hz, int subcarriers);
double mbps_to_bits_per_use(double mbps, double bandwidth_hz, int subcarriers);

}  // namespace units

/// Parses `key = value` text. Unknown keys, duplicates and malformed values
/// raise ConfigError naming the line.
Scenario parse_config(std::string_view text);
Scenario load_config(const std::string& path);
/// Writes every field; parse_config(write_config(s)) == s bit-exactly.
std::string write_config(const Scenario& scenario);
void save_config(const Scenario& scenario, const std::string& path);

/// Shortest decimal text that round-trips a double exactly.
std::string format_double(double value);
/// Strict parse of a full token; returns false on garbage or trailing text.
bool parse_double(std::string_view token, double& out);

}  // namespace macopt
