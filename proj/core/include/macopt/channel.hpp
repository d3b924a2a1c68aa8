// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "macopt/scenario.hpp"

namespace macopt {

using cdouble = std::complex<double>;

/// Non-owning view of one channel realization: h(u, n) is the length-L
/// complex gain vector from user u to the AP antennas on subcarrier n.
class ChannelSlice {
 public:
  ChannelSlice(int users, int antennas, int subcarriers, const cdouble* data) noexcept
      : users_(users), antennas_(antennas), subcarriers_(subcarriers), data_(data) {}

  int users() const noexcept { return users_; }
  int antennas() const noexcept { return antennas_; }
  int subcarriers() const noexcept { return subcarriers_; }

  Eigen::Map<const Eigen::VectorXcd> h(int u, int n) const {
    return Eigen::Map<const Eigen::VectorXcd>(
        data_ + (static_cast<std::size_t>(u) * subcarriers_ + n) * antennas_, antennas_);
  }
  /// ||h(u, n)||^2
  double gain(int u, int n) const { return h(u, n).squaredNorm(); }
  /// Sum of ||h(u, n)||^2 over subcarriers.
  double total_gain(int u) const;

 private:
  int users_;
  int antennas_;
  int subcarriers_;
  const cdouble* data_;
};

/// Channel realizations for several Monte Carlo trials.
/// Storage is row-major [trial][user][subcarrier][antenna].
struct ChannelTrace {
  int users = 0;
  int antennas = 0;
  int subcarriers = 0;
  int trials = 0;
  std::vector<cdouble> data;
  std::string generator = "external";
  std::uint64_t seed = 0;
  double pathloss_exponent = 0.0;

  ChannelTrace() = default;
  ChannelTrace(int users, int antennas, int subcarriers, int trials);

  std::size_t index(int trial, int u, int n, int l) const {
    return ((static_cast<std::size_t>(trial) * users + u) * subcarriers + n) * antennas + l;
  }
  cdouble& at(int trial, int u, int n, int l) { return data[index(trial, u, n, l)]; }
  cdouble at(int trial, int u, int n, int l) const { return data[index(trial, u, n, l)]; }

  ChannelSlice slice(int trial) const {
    return {users, antennas, subcarriers, data.data() + index(trial, 0, 0, 0)};
  }

  /// True when dimensions agree with storage and every entry is finite.
  bool consistent() const;

  /// Bitwise equality of values and dimensions (metadata ignored).
  bool same_values(const ChannelTrace& other) const;
};

/// Single-trial trace from per-(user, subcarrier) vectors; handy for tests.
/// gains[u][n] is the length-L channel vector.
ChannelTrace make_trace(const std::vector<std::vector<std::vector<cdouble>>>& gains);
/// Single-antenna, single-trial trace with h(u, n) = sqrt(power_gain[u][n]).
ChannelTrace make_scalar_trace(const std::vector<std::vector<double>>& power_gain);

struct Fading {
  enum class Kind { kRayleigh, kRician };
  Kind kind = Kind::kRayleigh;
  double k_factor_db = 0.0;

  static Fading rayleigh() { return {}; }
  static Fading rician(double k_db) { return {Kind::kRician, k_db}; }
  std::string name() const;
  /// Parses "rayleigh" or "rician:<k_db>".
  static Fading parse(const std::string& text);
};

/// Distance path loss d^-exponent times i.i.d. fading per user, subcarrier
/// and antenna. Trial t draws from CounterRng(substream_seed(seed, t)), so the
/// result is independent of `threads`.
ChannelTrace generate(const Scenario& scenario, int trials, Fading fading = Fading::rayleigh(),
                      int threads = 1);

/// Text format `MACOPT-CHAN v1`; values written as shortest round-trip decimals.
void save_trace(const ChannelTrace& trace, const std::string& path);
std::string write_trace(const ChannelTrace& trace);
ChannelTrace load_trace(const std::string& path);
ChannelTrace parse_trace(const std::string& text);

/// Mean over trials, users and subcarriers of p_max * ||h||^2 / (L * sigma^2).
double mean_receive_snr(const ChannelTrace& trace, const Scenario& scenario);

/// Rescales every gain by one common factor so that mean_receive_snr equals
/// 10^(target_snr_db / 10). Throws DomainError on an all-zero trace.
ChannelTrace scale_to_snr(const ChannelTrace& trace, const Scenario& scenario, double target_snr_db);

/// Multiplies every power gain by 10^(delta_db / 10).
ChannelTrace scale_by_db(const ChannelTrace& trace, double delta_db);

}  // namespace macopt
