// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "macopt/channel.hpp"
#include "macopt/scenario.hpp"

namespace macopt {

/// Transmit powers in mW, one row per user, one column per subcarrier.
using PowerMatrix = Eigen::MatrixXd;

/// perm[0] is decoded first and therefore sees interference from every other
/// user; perm.back() is decoded last and sees only noise.
struct DecodingOrder {
  std::vector<int> perm;

  static DecodingOrder identity(int users);
  bool is_permutation_of(int users) const;
  /// Position of each user in the decoding sequence.
  std::vector<int> positions() const;
  std::size_t size() const noexcept { return perm.size(); }
  friend bool operator==(const DecodingOrder&, const DecodingOrder&) = default;
};

struct Allocation {
  PowerMatrix p;
  RateVector achieved_rates;
  std::vector<double> energy;  ///< E_u = sum_n p(u, n)

  Allocation() = default;
  Allocation(PowerMatrix powers, RateVector rates);

  double total_energy() const;
  double weighted_energy(std::span<const double> theta) const;
};

/// Bitmask over users (bit u set when u is in the set). Supports U <= 63.
using UserSet = std::uint64_t;

inline constexpr UserSet all_users(int users) {
  return users >= 64 ? ~UserSet{0} : ((UserSet{1} << users) - 1);
}

/// Per-user SIC rates for the given decoding order, bits per use summed over
/// subcarriers. Each rate is a difference of two log-dets.
RateVector sic_rates(const ChannelSlice& h, const PowerMatrix& p, const DecodingOrder& order,
                     double sigma2);

/// Polymatroid rank function f(S) = sum_n log2 det(I + sigma^-2 sum_{u in S} p h h^H).
double subset_capacity(const ChannelSlice& h, const PowerMatrix& p, UserSet subset, double sigma2);
double subset_capacity(const ChannelSlice& h, const PowerMatrix& p, std::span<const int> subset,
                       double sigma2);

/// MMSE-SIC receiver for one decoding order.
struct GdfeFilters {
  int users = 0;
  int antennas = 0;
  int subcarriers = 0;
  DecodingOrder order;
  /// feedforward[n].col(u): unbiased feedforward vector w_u with
  /// w_u^H h_u sqrt(p_u) = 1 (zero when p_u = 0).
  std::vector<Eigen::MatrixXcd> feedforward;
  /// feedback[n](u, v) = w_u^H h_v sqrt(p_v): the contribution of the already
  /// decoded user v removed before detecting u. Non-zero only when v is decoded
  /// before u.
  std::vector<Eigen::MatrixXcd> feedback;
  /// unbiased_sinr(u, n) = p_u h_u^H K_u^{-1} h_u, K_u = noise plus users
  /// decoded after u.
  Eigen::MatrixXd unbiased_sinr;

  /// sum_n log2(1 + unbiased_sinr(u, n)).
  RateVector rates() const;
};

/// Throws DomainError for sigma2 <= 0 and DimensionError on shape mismatch.
GdfeFilters gdfe_synthesize(const ChannelSlice& h, const PowerMatrix& p, const DecodingOrder& order,
                            double sigma2);

struct IwfOptions {
  double tol = 1e-10;
  int max_iters = 1000;
};

struct IwfResult {
  Allocation allocation;
  double sum_rate = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Sum rate after every full sweep over users.
  std::vector<double> history;
};

/// Cyclic iterative water-filling for the sum capacity under per-user power
/// budgets. Each user water-fills against noise plus the current interference
/// of all other users.
IwfResult iwf_max_sumrate(const ChannelSlice& h, std::span<const double> budgets, double sigma2,
                          IwfOptions options = {});

/// Descending aggregate channel norm sum_{n} ||h(u, n)||^2; ties by index.
DecodingOrder strongest_first_order(const ChannelSlice& h);

/// Validates dimensions of a power matrix against a channel slice.
void check_powers(const ChannelSlice& h, const PowerMatrix& p);

}  // namespace macopt
