// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/oracle.hpp"

#include <algorithm>
#include <numbers>

#include "macopt/barrier.hpp"
#include "macopt/detail/set_logdet.hpp"
#include "macopt/errors.hpp"

namespace macopt {

MacSolution oracle_min_energy(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                              double sigma2, double tol) {
  const int users = h.users();
  const int subs = h.subcarriers();
  if (users > kOracleMaxUsers || subs > kOracleMaxSubcarriers)
    throw SizeError("oracle_min_energy: limited to U <= 4 and N <= 4");
  if (static_cast<int>(targets.size()) != users || static_cast<int>(theta.size()) != users)
    throw DimensionError("oracle_min_energy: targets and weights need one entry per user");
  for (int u = 0; u < users; ++u) {
    if (targets[u] > 0 && !(h.total_gain(u) > 0))
      throw InfeasibleError("oracle_min_energy: positive target on an all-zero channel");
  }

  std::vector<UserSet> sets;
  std::vector<double> set_targets;
  for (UserSet s = 1; s <= all_users(users); ++s) {
    double bs = 0.0;
    for (int u = 0; u < users; ++u)
      if ((s >> u) & 1U) bs += targets[u];
    if (bs > 0) {
      sets.push_back(s);
      set_targets.push_back(bs);
    }
  }

  const int dim = users * subs;
  auto to_powers = [&](const Eigen::VectorXd& x) {
    PowerMatrix p(users, subs);
    for (int u = 0; u < users; ++u)
      for (int n = 0; n < subs; ++n) p(u, n) = x(u * subs + n);
    return p;
  };

  BarrierProblem prob;
  prob.cost.resize(dim);
  for (int u = 0; u < users; ++u)
    for (int n = 0; n < subs; ++n) prob.cost(u * subs + n) = theta[u];
  prob.constraints = [&](const Eigen::VectorXd& x, bool want_hessian, std::vector<BarrierTerm>& out) {
    out.assign(sets.size(), BarrierTerm{});
    const PowerMatrix p = to_powers(x);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      auto& term = out[i];
      term.value = -set_targets[i];
      term.grad = Eigen::VectorXd::Zero(dim);
      if (want_hessian) term.hess = Eigen::MatrixXd::Zero(dim, dim);
      for (int n = 0; n < subs; ++n) {
        const auto s = detail::set_logdet(h, n, p.col(n), sets[i], sigma2, want_hessian);
        term.value += s.value / std::numbers::ln2;
        for (int u = 0; u < users; ++u) {
          term.grad(u * subs + n) = s.grad(u) / std::numbers::ln2;
          if (!want_hessian) continue;
          for (int v = 0; v < users; ++v) term.hess(u * subs + n, v * subs + n) = s.hess(u, v) / std::numbers::ln2;
        }
      }
    }
  };

  // Uniform start, doubled until strictly feasible.
  double level = sigma2;
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(dim, level);
  std::vector<BarrierTerm> probe;
  for (int i = 0; i < 400; ++i) {
    prob.constraints(x0, false, probe);
    if (std::all_of(probe.begin(), probe.end(), [](const BarrierTerm& g) { return g.value > 0; })) break;
    level *= 2.0;
    x0.setConstant(level);
  }

  BarrierOptions bopt;
  bopt.tol = tol;
  const auto br = barrier_minimize(prob, x0, bopt);
  const PowerMatrix p = to_powers(br.x);

  MacSolution sol;
  sol.lambdas.assign(users, 0.0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const double mu = 1.0 / (br.t * br.slacks[i]);
    for (int u = 0; u < users; ++u)
      if ((sets[i] >> u) & 1U) sol.lambdas[u] += mu;
  }

  DecodingOrder o = DecodingOrder::identity(users);
  std::vector<Vertex> vertices;
  double e = 0.0;
  for (int u = 0; u < users; ++u) e += theta[u] * p.row(u).sum();
  do {
    sol.orders.push_back(o);
    sol.vertex_allocations.emplace_back(p, sic_rates(h, p, o, sigma2));
    vertices.push_back({sol.vertex_allocations.back().achieved_rates, e});
  } while (std::next_permutation(o.perm.begin(), o.perm.end()));
  sol.timeshare_weights = timeshare_lp(vertices, targets);

  sol.blended_rates = RateVector(static_cast<std::size_t>(users));
  for (std::size_t k = 0; k < sol.orders.size(); ++k)
    for (int u = 0; u < users; ++u)
      sol.blended_rates[u] += sol.timeshare_weights[k] * sol.vertex_allocations[k].achieved_rates[u];
  sol.total_weighted_energy = sol.weighted_energy(theta);
  sol.duality_gap = static_cast<double>(sets.size() + static_cast<std::size_t>(dim)) / br.t;
  sol.dual_value = sol.total_weighted_energy - sol.duality_gap;
  sol.iterations = br.newton_iterations;
  sol.converged = br.converged;
  return sol;
}

MacSolution oracle_min_energy(const Scenario& scenario, const ChannelSlice& h, double tol) {
  require_valid(scenario);
  return oracle_min_energy(h, scenario.rate_targets, scenario.energy_weights, scenario.noise_power_mw(), tol);
}

}  // namespace macopt
