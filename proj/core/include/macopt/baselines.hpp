// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "macopt/capacity.hpp"
#include "macopt/channel.hpp"
#include "macopt/scenario.hpp"

namespace macopt {

enum class SchemeId { kOma, kNoma, kMcNoma };

/// "oma", "noma", "mcnoma"
std::string scheme_name(SchemeId scheme);
/// Throws ConfigError for anything else.
SchemeId parse_scheme(std::string_view name);

/// Exclusive subcarrier plan for OMA: tau(u, n) is the share of subcarrier n's
/// time given to user u.
///
/// With K users that need resources and N >= K, subcarriers go greedily to the
/// strongest (user, subcarrier) pairs, each user taking floor(N/K) or
/// floor(N/K)+1 of them. With N < K the users share subcarriers round-robin in
/// equal time fractions.
Eigen::MatrixXd oma_assignment(const ChannelSlice& h, const std::vector<bool>& needs);

/// Minimum-energy allocation meeting every target for a baseline scheme.
/// OMA powers are time-averaged (tau times the active-fraction power).
Allocation baseline_min_energy(SchemeId scheme, const ChannelSlice& h, std::span<const double> targets,
                               std::span<const double> theta, double sigma2);
Allocation baseline_min_energy(SchemeId scheme, const Scenario& scenario, const ChannelSlice& h);

struct SumRateResult {
  Allocation allocation;
  double sum_rate = 0.0;
  /// OMA users with a budget but no resources.
  std::vector<int> idle_users;
};

/// Sum-rate allocation at per-user budgets for a baseline scheme.
SumRateResult baseline_max_sumrate(SchemeId scheme, const ChannelSlice& h, std::span<const double> budgets,
                                   double sigma2);
SumRateResult baseline_max_sumrate(SchemeId scheme, const Scenario& scenario, const ChannelSlice& h,
                                   std::span<const double> budgets);

}  // namespace macopt
