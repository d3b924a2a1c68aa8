// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <vector>

namespace macopt {

/// min c^T x  s.t.  A_ge x >= b_ge,  A_eq x = b_eq,  x >= 0.
/// Rows of A_ge / A_eq are dense and have length c.size().
struct LinearProgram {
  std::vector<double> c;
  std::vector<std::vector<double>> a_ge;
  std::vector<double> b_ge;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
};

struct LpSolution {
  enum class Status { kOptimal, kInfeasible, kUnbounded };
  Status status = Status::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  int pivots = 0;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule.
/// feasibility_tol bounds the phase-one residual accepted as feasible.
LpSolution solve_lp(const LinearProgram& lp, double feasibility_tol = 1e-9);

}  // namespace macopt
