// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace macopt {

/// One smooth inequality g(x) >= 0 evaluated at a point.
struct BarrierTerm {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// min c.x  s.t.  g_i(x) >= 0,  x >= 0.
/// The g_i need not be concave; an indefinite barrier Hessian is shifted
/// until it factors, which gives a local method in that case.
struct BarrierProblem {
  Eigen::VectorXd cost;
  std::function<void(const Eigen::VectorXd& x, bool want_hessian, std::vector<BarrierTerm>& out)> constraints;
};

struct BarrierOptions {
  /// Stop when (constraints + dim) / t <= tol * max(1e-300, c.x).
  double tol = 1e-9;
  double growth = 8.0;
  int max_newton = 2000;
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double t = 0.0;
  /// g_i at the returned point (all > 0).
  std::vector<double> slacks;
  int newton_iterations = 0;
  bool converged = false;
};

/// Log-barrier path following with damped Newton centering. x0 must be
/// strictly feasible (x0 > 0 and every g_i(x0) > 0).
BarrierResult barrier_minimize(const BarrierProblem& problem, Eigen::VectorXd x0, const BarrierOptions& options = {});

}  // namespace macopt
