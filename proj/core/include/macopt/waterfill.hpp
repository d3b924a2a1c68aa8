// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <span>
#include <vector>

namespace macopt {

// Single-user water-filling over parallel channels with power-to-SNR slopes
// a_n (SNR per mW). Optional time fractions tau_n weight both rate and energy:
//   rate   = sum_n tau_n log2(1 + p_n a_n)
//   energy = sum_n tau_n p_n
// Both problems have the solution p_n = max(0, mu - 1/a_n).

/// Maximizes rate subject to energy == budget. Exhausts the budget exactly
/// whenever some a_n > 0.
std::vector<double> waterfill_budget(std::span<const double> slopes, double budget,
                                     std::span<const double> tau = {});

/// Minimizes energy subject to rate >= target_bits. Throws InfeasibleError
/// when target_bits > 0 and every slope is zero.
std::vector<double> waterfill_rate(std::span<const double> slopes, double target_bits,
                                   std::span<const double> tau = {});

double waterfill_rate_of(std::span<const double> slopes, std::span<const double> powers,
                         std::span<const double> tau = {});

}  // namespace macopt
