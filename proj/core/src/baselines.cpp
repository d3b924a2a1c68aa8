// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "macopt/barrier.hpp"
#include "macopt/detail/set_logdet.hpp"
#include "macopt/errors.hpp"
#include "macopt/linalg.hpp"
#include "macopt/minpmac.hpp"
#include "macopt/waterfill.hpp"

namespace macopt {

std::string scheme_name(SchemeId scheme) {
  switch (scheme) {
    case SchemeId::kOma:
      return "oma";
    case SchemeId::kNoma:
      return "noma";
    case SchemeId::kMcNoma:
      return "mcnoma";
  }
  return "?";
}

SchemeId parse_scheme(std::string_view name) {
  if (name == "oma") return SchemeId::kOma;
  if (name == "noma") return SchemeId::kNoma;
  if (name == "mcnoma") return SchemeId::kMcNoma;
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

namespace {

void check_sizes(const ChannelSlice& h, std::size_t values, double sigma2) {
  if (static_cast<int>(values) != h.users()) throw DimensionError("baseline: one value per user is required");
  if (!(sigma2 > 0) || !std::isfinite(sigma2)) throw DomainError("baseline: noise power must be finite and > 0");
}

void check_targets(const ChannelSlice& h, std::span<const double> targets) {
  for (int u = 0; u < h.users(); ++u) {
    if (!std::isfinite(targets[u]) || targets[u] < 0) throw DomainError("baseline: rate targets must be >= 0");
    if (targets[u] > 0 && !(h.total_gain(u) > 0))
      throw InfeasibleError("baseline: user " + std::to_string(u) + " has an all-zero channel and a positive target");
  }
}

std::vector<double> slopes_of(const ChannelSlice& h, int u, double sigma2) {
  std::vector<double> a(h.subcarriers());
  for (int n = 0; n < h.subcarriers(); ++n) a[n] = h.gain(u, n) / sigma2;
  return a;
}

// Per-user single-user water-filling on the OMA plan. `energy_mode` meets
// values[u] bits, otherwise spends values[u] mW.
SumRateResult oma_solve(const ChannelSlice& h, std::span<const double> values, double sigma2, bool energy_mode) {
  const int users = h.users();
  const int subs = h.subcarriers();
  std::vector<bool> needs(users);
  for (int u = 0; u < users; ++u) needs[u] = values[u] > 0;
  const Eigen::MatrixXd tau = oma_assignment(h, needs);
  PowerMatrix p = PowerMatrix::Zero(users, subs);
  RateVector rates(static_cast<std::size_t>(users));
  SumRateResult out;
  for (int u = 0; u < users; ++u) {
    if (!needs[u]) continue;
    std::vector<double> t(subs);
    bool owns = false;
    for (int n = 0; n < subs; ++n) {
      t[n] = tau(u, n);
      owns = owns || t[n] > 0;
    }
    if (!owns) {
      if (energy_mode) throw InfeasibleError("oma: user without resources has a positive target");
      out.idle_users.push_back(u);
      continue;
    }
    const auto a = slopes_of(h, u, sigma2);
    std::vector<double> inst;
    if (energy_mode) {
      inst = waterfill_rate(a, values[u], t);
    } else {
      inst = waterfill_budget(a, values[u], t);
      bool any = false;
      for (int n = 0; n < subs; ++n) any = any || (t[n] > 0 && a[n] > 0);
      if (!any) out.idle_users.push_back(u);
    }
    rates[u] = waterfill_rate_of(a, inst, t);
    for (int n = 0; n < subs; ++n) p(u, n) = t[n] * inst[n];
  }
  out.sum_rate = rates.sum();
  out.allocation = Allocation(std::move(p), std::move(rates));
  return out;
}

// Flat per-user levels for the given order, solved from the last-decoded user
// backwards so each level only sees users decoded after it.
PowerMatrix noma_levels(const ChannelSlice& h, const DecodingOrder& order, std::span<const double> targets,
                        double sigma2) {
  const int users = h.users();
  const int subs = h.subcarriers();
  const int ant = h.antennas();
  std::vector<Eigen::MatrixXcd> cov(subs, sigma2 * Eigen::MatrixXcd::Identity(ant, ant));
  PowerMatrix p = PowerMatrix::Zero(users, subs);
  for (int k = users - 1; k >= 0; --k) {
    const int u = order.perm[k];
    if (targets[u] <= 0) continue;
    std::vector<double> a(subs);
    for (int n = 0; n < subs; ++n) {
      const auto hu = h.h(u, n);
      a[n] = std::max(0.0, (hu.adjoint() * linalg::inverse_hpd(cov[n]) * hu)(0, 0).real());
    }
    if (std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; }))
      throw InfeasibleError("noma: user " + std::to_string(u) + " cannot reach its target");
    // sum_n log2(1 + q a_n) is concave and increasing: Newton from q = 0 stays
    // below the root and converges monotonically.
    double q = 0.0;
    for (int it = 0; it < 500; ++it) {
      double r = 0.0, dr = 0.0;
      for (double an : a) {
        r += std::log2(1.0 + q * an);
        dr += an / ((1.0 + q * an) * std::numbers::ln2);
      }
      const double step = (targets[u] - r) / dr;
      q += step;
      if (step <= 1e-15 * q) break;
    }
    for (int n = 0; n < subs; ++n) {
      p(u, n) = q;
      const auto hu = h.h(u, n);
      cov[n].noalias() += q * hu * hu.adjoint();
    }
  }
  return p;
}

double weighted(const PowerMatrix& p, std::span<const double> theta) {
  double e = 0.0;
  for (Eigen::Index u = 0; u < p.rows(); ++u) e += theta[u] * p.row(u).sum();
  return e;
}

bool meets(const RateVector& r, std::span<const double> targets, double tol) {
  for (std::size_t u = 0; u < targets.size(); ++u)
    if (r[u] < targets[u] - tol) return false;
  return true;
}

// Local log-barrier descent on the fixed-order constraints R_u(p) >= b_u over
// users with positive targets, from a strictly feasible start.
PowerMatrix fixed_order_barrier(const ChannelSlice& h, const DecodingOrder& order, std::span<const double> targets,
                                std::span<const double> theta, double sigma2, const PowerMatrix& start) {
  const int users = h.users();
  const int subs = h.subcarriers();
  std::vector<int> active;
  for (int u = 0; u < users; ++u)
    if (targets[u] > 0) active.push_back(u);
  const int na = static_cast<int>(active.size());
  const int dim = na * subs;
  const auto pos = order.positions();

  auto to_powers = [&](const Eigen::VectorXd& x) {
    PowerMatrix p = PowerMatrix::Zero(users, subs);
    for (int i = 0; i < na; ++i)
      for (int n = 0; n < subs; ++n) p(active[i], n) = x(i * subs + n);
    return p;
  };

  BarrierProblem prob;
  prob.cost.resize(dim);
  for (int i = 0; i < na; ++i)
    for (int n = 0; n < subs; ++n) prob.cost(i * subs + n) = theta[active[i]];
  prob.constraints = [&](const Eigen::VectorXd& x, bool want_hessian, std::vector<BarrierTerm>& out) {
    out.assign(na, BarrierTerm{});
    const PowerMatrix p = to_powers(x);
    for (int i = 0; i < na; ++i) {
      const int k = pos[active[i]];
      const UserSet with = detail::suffix_set(order, k);
      const UserSet without = detail::suffix_set(order, k + 1);
      auto& term = out[i];
      term.value = -targets[active[i]];
      term.grad = Eigen::VectorXd::Zero(dim);
      if (want_hessian) term.hess = Eigen::MatrixXd::Zero(dim, dim);
      for (int n = 0; n < subs; ++n) {
        const auto a = detail::set_logdet(h, n, p.col(n), with, sigma2, want_hessian);
        const auto b = detail::set_logdet(h, n, p.col(n), without, sigma2, want_hessian);
        term.value += (a.value - b.value) / std::numbers::ln2;
        for (int j = 0; j < na; ++j) {
          const int v = active[j];
          term.grad(j * subs + n) = (a.grad(v) - b.grad(v)) / std::numbers::ln2;
          if (!want_hessian) continue;
          for (int l = 0; l < na; ++l) {
            const int w = active[l];
            term.hess(j * subs + n, l * subs + n) = (a.hess(v, w) - b.hess(v, w)) / std::numbers::ln2;
          }
        }
      }
    }
  };

  Eigen::VectorXd x0(dim);
  for (int i = 0; i < na; ++i)
    for (int n = 0; n < subs; ++n) x0(i * subs + n) = start(active[i], n);
  BarrierOptions opt;
  opt.tol = 1e-9;
  opt.max_newton = 400;
  const auto res = barrier_minimize(prob, x0, opt);
  return to_powers(res.x);
}

Allocation mcnoma_min_energy(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                             double sigma2) {
  const auto order = strongest_first_order(h);
  const PowerMatrix flat = noma_levels(h, order, targets, sigma2);
  Allocation best(flat, sic_rates(h, flat, order, sigma2));
  double best_e = weighted(flat, theta);
  if (best_e == 0.0) return best;

  const auto fr = detail::fixed_order_solve(h, order, targets, theta, sigma2, best_e);
  if (std::isfinite(fr.primal) && fr.primal < best_e && !fr.vertex_allocations.empty() &&
      meets(fr.vertex_allocations[0].achieved_rates, targets, 1e-9)) {
    best = fr.vertex_allocations[0];
    best_e = fr.primal;
  }
  if (fr.converged) return best;

  // The nested relaxation is not tight for this order: refine locally from the
  // flat point, nudged into the strict interior.
  try {
    PowerMatrix start = flat * (1.0 + 1e-6);
    for (int u = 0; u < h.users(); ++u)
      if (targets[u] > 0)
        for (int n = 0; n < h.subcarriers(); ++n) start(u, n) = std::max(start(u, n), 1e-12 * flat.row(u).maxCoeff());
    const PowerMatrix p = fixed_order_barrier(h, order, targets, theta, sigma2, start);
    Allocation a(p, sic_rates(h, p, order, sigma2));
    const double e = weighted(p, theta);
    if (e < best_e && meets(a.achieved_rates, targets, 1e-9)) best = std::move(a);
  } catch (const Error&) {
    // keep the best feasible point found so far
  }
  return best;
}

}  // namespace

Eigen::MatrixXd oma_assignment(const ChannelSlice& h, const std::vector<bool>& needs) {
  const int users = h.users();
  const int subs = h.subcarriers();
  if (static_cast<int>(needs.size()) != users) throw DimensionError("oma_assignment: one flag per user");
  Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(users, subs);
  std::vector<int> needy;
  for (int u = 0; u < users; ++u)
    if (needs[u]) needy.push_back(u);
  const int k = static_cast<int>(needy.size());
  if (k == 0 || subs == 0) return tau;

  if (subs < k) {
    std::vector<int> load(subs, 0);
    for (int j = 0; j < k; ++j) ++load[j % subs];
    for (int j = 0; j < k; ++j) tau(needy[j], j % subs) = 1.0 / load[j % subs];
    return tau;
  }

  std::vector<std::tuple<double, int, int>> pairs;
  for (int u : needy)
    for (int n = 0; n < subs; ++n) pairs.emplace_back(h.gain(u, n), u, n);
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
  const int base = subs / k;
  int extras = subs % k;
  std::vector<int> count(users, 0);
  std::vector<bool> taken(subs, false);
  for (const auto& [g, u, n] : pairs) {
    if (taken[n]) continue;
    if (count[u] < base) {
      // within the guaranteed share
    } else if (count[u] == base && extras > 0) {
      --extras;
    } else {
      continue;
    }
    taken[n] = true;
    ++count[u];
    tau(u, n) = 1.0;
  }
  return tau;
}

Allocation baseline_min_energy(SchemeId scheme, const ChannelSlice& h, std::span<const double> targets,
                               std::span<const double> theta, double sigma2) {
  check_sizes(h, targets.size(), sigma2);
  check_sizes(h, theta.size(), sigma2);
  check_targets(h, targets);
  switch (scheme) {
    case SchemeId::kOma:
      return oma_solve(h, targets, sigma2, true).allocation;
    case SchemeId::kNoma: {
      const auto order = strongest_first_order(h);
      const PowerMatrix p = noma_levels(h, order, targets, sigma2);
      return Allocation(p, sic_rates(h, p, order, sigma2));
    }
    case SchemeId::kMcNoma:
      return mcnoma_min_energy(h, targets, theta, sigma2);
  }
  throw ConfigError("unknown scheme");
}

Allocation baseline_min_energy(SchemeId scheme, const Scenario& scenario, const ChannelSlice& h) {
  require_valid(scenario);
  return baseline_min_energy(scheme, h, scenario.rate_targets, scenario.energy_weights, scenario.noise_power_mw());
}

SumRateResult baseline_max_sumrate(SchemeId scheme, const ChannelSlice& h, std::span<const double> budgets,
                                   double sigma2) {
  check_sizes(h, budgets.size(), sigma2);
  for (double b : budgets)
    if (!std::isfinite(b) || b < 0) throw DomainError("baseline: budgets must be finite and >= 0");
  const int users = h.users();
  const int subs = h.subcarriers();
  if (scheme == SchemeId::kOma) return oma_solve(h, budgets, sigma2, false);

  PowerMatrix p = PowerMatrix::Zero(users, subs);
  for (int u = 0; u < users; ++u) {
    if (scheme == SchemeId::kNoma) {
      p.row(u).setConstant(budgets[u] / subs);
    } else {
      const auto row = waterfill_budget(slopes_of(h, u, sigma2), budgets[u]);
      for (int n = 0; n < subs; ++n) p(u, n) = row[n];
    }
  }
  SumRateResult out;
  out.sum_rate = subset_capacity(h, p, all_users(users), sigma2);
  const auto order = strongest_first_order(h);
  out.allocation = Allocation(p, sic_rates(h, p, order, sigma2));
  return out;
}

SumRateResult baseline_max_sumrate(SchemeId scheme, const Scenario& scenario, const ChannelSlice& h,
                                   std::span<const double> budgets) {
  require_valid(scenario);
  return baseline_max_sumrate(scheme, h, budgets, scenario.noise_power_mw());
}

}  // namespace macopt
