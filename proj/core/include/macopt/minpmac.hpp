// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "macopt/capacity.hpp"
#include "macopt/channel.hpp"
#include "macopt/lagrangian.hpp"
#include "macopt/scenario.hpp"

namespace macopt {

/// Result of a minimum weighted-energy solve: a power allocation per decoding
/// order (vertex) and time-share weights that blend the vertices so every rate
/// target is met.
struct MacSolution {
  std::vector<double> lambdas;
  std::vector<DecodingOrder> orders;
  std::vector<Allocation> vertex_allocations;
  std::vector<double> timeshare_weights;
  RateVector blended_rates;
  double total_weighted_energy = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  bool converged = false;

  /// Best dual value found and the dual value of every outer iterate.
  double dual_value = 0.0;
  std::vector<double> dual_history;
  /// True when tied clusters admitted more orders than the enumeration cap and
  /// a random subset was used.
  bool orders_sampled = false;
  /// Users whose energy exceeds the scenario power cap (reported, not enforced).
  std::vector<int> cap_violations;

  /// sum_k w_k sum_u theta_u E_u^(k)
  double weighted_energy(std::span<const double> theta) const;
  /// sum_k w_k p^(k)
  PowerMatrix blended_powers() const;
};

struct DualOptions {
  double eps_rate = 1e-6;
  int max_iters = 5000;
  double gap_rel = 1e-5;
  double gap_abs = 1e-7;
  /// Users i, j are tied when |l_i - l_j| <= tie_tol * (1 + max(l_i, l_j)).
  double tie_tol = 1e-6;
  int max_orders = 5040;
  /// Ellipsoid method up to this many users; projected subgradient above.
  int ellipsoid_max_users = 12;
  /// Newton iterations of the primal recovery step.
  int polish_max_iters = 60;
  /// Seed for order sampling beyond max_orders.
  std::uint64_t sample_seed = 0x6d61636f7074ULL;
  InnerOptions inner;
};

struct DualResult {
  std::vector<double> lambda;
  std::vector<DecodingOrder> orders;
  std::vector<Allocation> vertex_allocations;
  std::vector<double> timeshare_weights;
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;
  bool orders_sampled = false;
  std::vector<double> dual_history;
};

/// g(lambda) = min_p [sum theta E - sum lambda (R - b)], evaluated with the
/// ascending-lambda decoding order. Returns the value; the inner maximizer is
/// written to `argmax` (which may also carry a warm start in).
double dual_function(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> targets,
                     std::span<const double> theta, double sigma2, PowerMatrix& argmax,
                     const InnerOptions& inner = {});

/// Maximizes the dual over lambda >= 0, then recovers a primal allocation
/// whose vertices (one per decoding order consistent with the dual prices)
/// can be time-shared to meet every target.
DualResult dual_solve(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                      double sigma2, const DualOptions& options = {});

/// A vertex for time-sharing: its rate tuple and weighted energy.
struct Vertex {
  RateVector rates;
  double weighted_energy = 0.0;
};

/// min sum_k w_k e_k  s.t.  sum_k w_k r_k >= b,  sum w = 1,  w >= 0.
/// Throws InfeasibleError when no convex combination meets the targets.
std::vector<double> timeshare_lp(std::span<const Vertex> vertices, std::span<const double> targets,
                                 double feasibility_tol = 1e-9);

/// Clusters users whose dual prices tie and enumerates the decoding orders
/// obtained by permuting within clusters (ascending price between clusters).
/// Beyond max_orders, max_orders distinct orders are sampled with `seed`.
std::vector<DecodingOrder> tied_orders(std::span<const double> lambda, double tie_tol, int max_orders,
                                       std::uint64_t seed, bool* sampled = nullptr);

/// End-to-end minimum weighted-energy solve for one channel realization.
MacSolution min_pmac(const Scenario& scenario, const ChannelSlice& h, const DualOptions& options = {});

/// Same, with explicit targets / weights / noise (scenario-free form).
MacSolution min_pmac(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                     double sigma2, const DualOptions& options = {});

namespace detail {

/// Minimum weighted energy subject to the nested constraints
/// f_p(T_k) >= b(T_k), T_k = users at positions >= k of `order`, solved by
/// projected Newton ascent on the chain multipliers mu >= 0.
struct ChainSolve {
  std::vector<double> mu;
  PowerMatrix p;
  /// f_p(T_k) in bits.
  std::vector<double> chain_rates;
  double primal = 0.0;  ///< theta . E(p)
  double dual = 0.0;    ///< dual value at lambda = cumulative mu
  double violation = 0.0;
  int iterations = 0;
  bool converged = false;
};

ChainSolve chain_solve(const ChannelSlice& h, const DecodingOrder& order, std::vector<double> mu,
                       std::span<const double> targets, std::span<const double> theta, double sigma2,
                       PowerMatrix p, const InnerOptions& inner, int max_iters);

/// dual_solve restricted to one decoding order: maximizes the dual over
/// lambda ascending along `order` and recovers powers for that order alone.
/// `feasible_energy` is the weighted energy of any point meeting the targets
/// under `order` (it bounds the search box). When the nested constraints do
/// not pin every user's rate the result may be non-converged with primal = inf.
DualResult fixed_order_solve(const ChannelSlice& h, const DecodingOrder& order, std::span<const double> targets,
                             std::span<const double> theta, double sigma2, double feasible_energy,
                             const DualOptions& options = {});

/// lambda_{order[k]} = mu_0 + ... + mu_k
std::vector<double> lambda_from_mu(const DecodingOrder& order, std::span<const double> mu);

}  // namespace detail

/// Text dump of a solution (lambdas, orders, weights, per-order powers and
/// rates, energy, gap).
std::string format_solution(const MacSolution& solution);

}  // namespace macopt
