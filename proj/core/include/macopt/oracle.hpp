// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <span>

#include "macopt/minpmac.hpp"

namespace macopt {

inline constexpr int kOracleMaxUsers = 4;
inline constexpr int kOracleMaxSubcarriers = 4;

/// Brute-force reference: minimizes sum theta E over p >= 0 subject to every
/// subset constraint sum_{u in S} b_u <= f_p(S) with a primal log-barrier
/// method, then time-shares all U! decoding orders at the resulting powers.
/// Independent of the dual machinery in min_pmac. Throws SizeError beyond
/// U = 4 or N = 4.
MacSolution oracle_min_energy(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                              double sigma2, double tol = 1e-9);

MacSolution oracle_min_energy(const Scenario& scenario, const ChannelSlice& h, double tol = 1e-9);

}  // namespace macopt
