// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/barrier.hpp"

#include <cmath>
#include <limits>

#include "macopt/errors.hpp"

namespace macopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Eval {
  double phi = kInf;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

}  // namespace

BarrierResult barrier_minimize(const BarrierProblem& problem, Eigen::VectorXd x, const BarrierOptions& opt) {
  const Eigen::Index n = x.size();
  if (problem.cost.size() != n) throw DimensionError("barrier_minimize: cost size mismatch");
  std::vector<BarrierTerm> terms;

  auto evaluate = [&](const Eigen::VectorXd& y, double t, bool derivatives) {
    Eval e;
    if ((y.array() <= 0).any()) return e;
    problem.constraints(y, derivatives, terms);
    double phi = t * problem.cost.dot(y) - y.array().log().sum();
    for (const auto& g : terms) {
      if (!(g.value > 0)) return e;
      phi -= std::log(g.value);
    }
    e.phi = phi;
    if (!derivatives) return e;
    e.grad = t * problem.cost - y.cwiseInverse();
    e.hess = y.array().square().inverse().matrix().asDiagonal();
    for (const auto& g : terms) {
      e.grad -= g.grad / g.value;
      e.hess.noalias() += g.grad * g.grad.transpose() / (g.value * g.value);
      if (g.hess.size() > 0) e.hess -= g.hess / g.value;
    }
    return e;
  };

  double t0 = 1.0;
  {
    const Eval e = evaluate(x, 1.0, false);
    if (!std::isfinite(e.phi)) throw DomainError("barrier_minimize: starting point is not strictly feasible");
  }
  const double m = static_cast<double>(terms.size() + static_cast<std::size_t>(n));
  t0 = m / std::max(problem.cost.dot(x), 1e-300);

  BarrierResult res;
  double t = t0;
  while (true) {
    for (; res.newton_iterations < opt.max_newton; ++res.newton_iterations) {
      Eval e = evaluate(x, t, true);
      Eigen::MatrixXd h = e.hess;
      double shift = 0.0;
      const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-300);
      Eigen::LLT<Eigen::MatrixXd> llt(h);
      while (llt.info() != Eigen::Success) {
        shift = shift == 0.0 ? 1e-12 * scale : 10.0 * shift;
        h = e.hess;
        h.diagonal().array() += shift;
        llt.compute(h);
        if (shift > 1e6 * scale) throw NumericalError("barrier_minimize: Hessian cannot be regularized");
      }
      const Eigen::VectorXd d = -llt.solve(e.grad);
      const double dec2 = -e.grad.dot(d);
      if (!(dec2 > 1e-10)) break;
      double s = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 80; ++ls, s *= 0.5) {
        const Eigen::VectorXd y = x + s * d;
        const Eval f = evaluate(y, t, false);
        if (f.phi <= e.phi - 0.25 * s * dec2) {
          x = y;
          moved = e.phi - f.phi > 1e-15 * std::abs(e.phi);
          break;
        }
      }
      if (!moved) break;
    }
    const double obj = problem.cost.dot(x);
    if (m / t <= opt.tol * std::max(obj, 1e-300)) {
      res.converged = true;
      break;
    }
    if (res.newton_iterations >= opt.max_newton) break;
    t *= opt.growth;
  }
  problem.constraints(x, false, terms);
  res.slacks.clear();
  for (const auto& g : terms) res.slacks.push_back(g.value);
  res.x = std::move(x);
  res.objective = problem.cost.dot(res.x);
  res.t = t;
  return res;
}

}  // namespace macopt
