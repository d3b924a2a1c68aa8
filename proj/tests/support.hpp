// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "macopt/channel.hpp"
#include "macopt/rng.hpp"
#include "macopt/scenario.hpp"

namespace macopt::testing {

/// i.i.d. CN(0, 1) gains, no path loss.
inline ChannelTrace unit_rayleigh(int users, int antennas, int subcarriers, std::uint64_t seed, int trials = 1) {
  Scenario s;
  s.num_users = users;
  s.num_ap_antennas = antennas;
  s.num_subcarriers = subcarriers;
  s.pathloss_exponent = 0.0;
  s.seed = seed;
  s.fill_defaults();
  return generate(s, trials);
}

inline std::vector<double> uniform_vector(CounterRng& rng, int n, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)}); }

/// Small oracle-sized instance i: U = 1 + i % 3, L = 1 + (i / 3) % 2,
/// N = 1 + (i / 6) % 2 at 10 dB receive SNR with random targets and weights.
struct SmallInstance {
  Scenario s;
  ChannelTrace trace;
  std::vector<double> targets;
  std::vector<double> theta;
  double sigma2 = 0.0;
};

inline SmallInstance small_instance(int i) {
  SmallInstance out;
  Scenario& s = out.s;
  s.num_users = 1 + i % 3;
  s.num_ap_antennas = 1 + (i / 3) % 2;
  s.num_subcarriers = 1 + (i / 6) % 2;
  s.seed = static_cast<std::uint64_t>(i);
  s.fill_defaults();
  out.trace = scale_to_snr(generate(s, 1), s, 10.0);
  CounterRng r(static_cast<std::uint64_t>(i) + 1000);
  out.targets = uniform_vector(r, s.num_users, 0.5, 3.5);
  out.theta = uniform_vector(r, s.num_users, 0.5, 1.5);
  out.sigma2 = s.noise_power_mw();
  return out;
}

}  // namespace macopt::testing
