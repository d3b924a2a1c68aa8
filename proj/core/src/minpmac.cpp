// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/minpmac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "macopt/detail/set_logdet.hpp"
#include "macopt/errors.hpp"
#include "macopt/linalg.hpp"
#include "macopt/rng.hpp"
#include "macopt/simplex.hpp"
#include "macopt/waterfill.hpp"

namespace macopt {

double MacSolution::weighted_energy(std::span<const double> theta) const {
  double e = 0.0;
  for (std::size_t k = 0; k < vertex_allocations.size(); ++k)
    e += timeshare_weights[k] * vertex_allocations[k].weighted_energy(theta);
  return e;
}

PowerMatrix MacSolution::blended_powers() const {
  if (vertex_allocations.empty()) return {};
  PowerMatrix p = PowerMatrix::Zero(vertex_allocations[0].p.rows(), vertex_allocations[0].p.cols());
  for (std::size_t k = 0; k < vertex_allocations.size(); ++k) p += timeshare_weights[k] * vertex_allocations[k].p;
  return p;
}

namespace {

constexpr double kLn2 = std::numbers::ln2;

void check_problem(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                   double sigma2) {
  const auto users = static_cast<std::size_t>(h.users());
  if (targets.size() != users || theta.size() != users)
    throw DimensionError("minpmac: targets and weights need one entry per user");
  if (!(sigma2 > 0) || !std::isfinite(sigma2)) throw DomainError("minpmac: noise power must be finite and > 0");
  for (std::size_t u = 0; u < users; ++u) {
    if (!std::isfinite(targets[u]) || targets[u] < 0) throw DomainError("minpmac: rate targets must be >= 0");
    if (!std::isfinite(theta[u]) || !(theta[u] > 0)) throw DomainError("minpmac: energy weights must be > 0");
    if (targets[u] > 0 && !(h.total_gain(static_cast<int>(u)) > 0))
      throw InfeasibleError("minpmac: user " + std::to_string(u) + " has an all-zero channel and a positive target");
  }
}

double weighted_sum(const PowerMatrix& p, std::span<const double> theta) {
  double e = 0.0;
  for (Eigen::Index u = 0; u < p.rows(); ++u) e += theta[u] * p.row(u).sum();
  return e;
}

std::vector<double> chain_targets(const DecodingOrder& order, std::span<const double> targets) {
  std::vector<double> bt(order.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = order.size(); k-- > 0;) {
    acc += targets[order.perm[k]];
    bt[k] = acc;
  }
  return bt;
}

std::vector<double> chain_capacities(const ChannelSlice& h, const DecodingOrder& order, const PowerMatrix& p,
                                     double sigma2) {
  std::vector<double> f(order.size(), 0.0);
  for (std::size_t k = 0; k < order.size(); ++k)
    f[k] = subset_capacity(h, p, detail::suffix_set(order, static_cast<int>(k)), sigma2);
  return f;
}

// d f_p(T_k) / d mu_j through the inner maximizer, summed over subcarriers.
Eigen::MatrixXd chain_jacobian(const ChannelSlice& h, const detail::ChainObjective& obj, const PowerMatrix& p) {
  const int users = h.users();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(users, users);
  for (int n = 0; n < h.subcarriers(); ++n) {
    std::vector<int> free;
    for (int u = 0; u < users; ++u)
      if (p(u, n) > 0) free.push_back(u);
    if (free.empty()) continue;
    const int nf = static_cast<int>(free.size());
    const auto ev = detail::evaluate_chain(h, n, obj, p.col(n), true);
    Eigen::MatrixXd g(nf, users);
    for (int k = 0; k < users; ++k) {
      const auto s = detail::set_logdet(h, n, p.col(n), detail::suffix_set(obj.order, k), obj.sigma2, false);
      for (int i = 0; i < nf; ++i) g(i, k) = s.grad(free[i]) / kLn2;
    }
    Eigen::MatrixXd neg_h(nf, nf);
    for (int i = 0; i < nf; ++i)
      for (int j = 0; j < nf; ++j) neg_h(i, j) = -ev.hess(free[i], free[j]);
    jac.noalias() += g.transpose() * linalg::solve_psd(neg_h, g);
  }
  return jac;
}

}  // namespace

namespace detail {

std::vector<double> lambda_from_mu(const DecodingOrder& order, std::span<const double> mu) {
  std::vector<double> lambda(order.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    acc += mu[k];
    lambda[order.perm[k]] = acc;
  }
  return lambda;
}

ChainSolve chain_solve(const ChannelSlice& h, const DecodingOrder& order, std::vector<double> mu,
                       std::span<const double> targets, std::span<const double> theta, double sigma2,
                       PowerMatrix p, const InnerOptions& inner, int max_iters) {
  const int users = h.users();
  const auto bt = chain_targets(order, targets);
  ChainObjective obj;
  obj.order = order;
  obj.theta.assign(theta.begin(), theta.end());
  obj.sigma2 = sigma2;

  struct Point {
    std::vector<double> mu;
    PowerMatrix p;
    std::vector<double> f;
    double primal = 0.0;
    double dual = 0.0;
    double viol = 0.0;
  };
  auto evaluate = [&](std::vector<double> m, PowerMatrix x) {
    obj.coeff = m;
    maximize_chain(h, obj, x, inner);
    Point pt;
    pt.f = chain_capacities(h, order, x, sigma2);
    pt.primal = weighted_sum(x, theta);
    pt.dual = pt.primal;
    for (int k = 0; k < users; ++k) {
      const double gk = bt[k] - pt.f[k];
      pt.dual += m[k] * gk;
      pt.viol = std::max(pt.viol, m[k] > 0 ? std::abs(gk) : std::max(gk, 0.0));
    }
    pt.mu = std::move(m);
    pt.p = std::move(x);
    return pt;
  };

  for (auto& m : mu) m = std::max(m, 0.0);
  Point cur = evaluate(std::move(mu), std::move(p));
  const double tol = 1e-10 * (1.0 + bt.front());
  ChainSolve out;
  int it = 0;
  for (; it < max_iters && cur.viol > tol; ++it) {
    std::vector<int> free;
    Eigen::VectorXd grad(users);
    for (int k = 0; k < users; ++k) {
      grad(k) = bt[k] - cur.f[k];
      if (cur.mu[k] > 0 || grad(k) > 0) free.push_back(k);
    }
    obj.coeff = cur.mu;
    const Eigen::MatrixXd jac = chain_jacobian(h, obj, cur.p);
    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd jf(nf, nf);
    Eigen::VectorXd gf(nf);
    for (int i = 0; i < nf; ++i) {
      gf(i) = grad(free[i]);
      for (int j = 0; j < nf; ++j) jf(i, j) = jac(free[i], free[j]);
    }

    auto line_search = [&](const Eigen::VectorXd& d) {
      double alpha = 1.0;
      for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
        std::vector<double> m = cur.mu;
        double ascent = 0.0;
        for (int i = 0; i < nf; ++i) {
          const int k = free[i];
          m[k] = std::max(0.0, cur.mu[k] + alpha * d(i));
          ascent += grad(k) * (m[k] - cur.mu[k]);
        }
        if (!(ascent > 0)) continue;
        Point next = evaluate(std::move(m), cur.p);
        const double slack = 4 * std::numeric_limits<double>::epsilon() * std::abs(cur.dual);
        if (next.dual >= cur.dual + 1e-4 * ascent || (next.dual >= cur.dual - slack && next.viol < cur.viol)) {
          cur = std::move(next);
          return true;
        }
      }
      return false;
    };

    // Near-singular Jacobians give huge steps, and every rejected trial costs a
    // full inner solve; bound the step by the current price level.
    const double reach = 4.0 * (1.0 + std::accumulate(cur.mu.begin(), cur.mu.end(), 0.0));
    auto capped = [&](Eigen::VectorXd d) {
      const double big = d.cwiseAbs().maxCoeff();
      if (big > reach) d *= reach / big;
      return d;
    };
    bool moved = false;
    if (nf > 0) {
      const Eigen::VectorXd d = linalg::solve_psd(jf, gf);
      if (d.allFinite() && d.dot(gf) > 0) moved = line_search(capped(d));
      if (!moved) {
        Eigen::VectorXd d(nf);
        for (int i = 0; i < nf; ++i) d(i) = gf(i) / std::max(jf(i, i), 1e-300);
        if (d.allFinite()) moved = line_search(capped(d));
      }
    }
    if (!moved) break;
  }
  out.mu = std::move(cur.mu);
  out.p = std::move(cur.p);
  out.chain_rates = std::move(cur.f);
  out.primal = cur.primal;
  out.dual = cur.dual;
  out.violation = cur.viol;
  out.iterations = it;
  out.converged = cur.viol <= tol;
  return out;
}

}  // namespace detail

double dual_function(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> targets,
                     std::span<const double> theta, double sigma2, PowerMatrix& argmax, const InnerOptions& inner) {
  check_problem(h, targets, theta, sigma2);
  if (static_cast<int>(lambda.size()) != h.users()) throw DimensionError("dual_function: lambda size");
  const auto order = ascending_lambda_order(lambda);
  if (argmax.rows() != h.users() || argmax.cols() != h.subcarriers())
    argmax = PowerMatrix::Zero(h.users(), h.subcarriers());
  const auto obj = detail::ChainObjective::from_lambda(lambda, theta, order, sigma2);
  detail::maximize_chain(h, obj, argmax, inner);
  const auto r = sic_rates(h, argmax, order, sigma2);
  double g = weighted_sum(argmax, theta);
  for (int u = 0; u < h.users(); ++u) g += lambda[u] * (targets[u] - r[u]);
  return g;
}

std::vector<double> timeshare_lp(std::span<const Vertex> vertices, std::span<const double> targets,
                                 double feasibility_tol) {
  if (vertices.empty()) throw DimensionError("timeshare_lp: at least one vertex is required");
  const std::size_t k = vertices.size();
  const std::size_t users = targets.size();
  LinearProgram lp;
  lp.c.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (vertices[j].rates.size() != users) throw DimensionError("timeshare_lp: vertex rate size mismatch");
    lp.c[j] = vertices[j].weighted_energy;
  }
  for (std::size_t u = 0; u < users; ++u) {
    if (targets[u] <= 0) continue;
    std::vector<double> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = vertices[j].rates[u];
    lp.a_ge.push_back(std::move(row));
    lp.b_ge.push_back(targets[u]);
  }
  lp.a_eq.emplace_back(k, 1.0);
  lp.b_eq.push_back(1.0);
  const auto sol = solve_lp(lp, feasibility_tol);
  if (sol.status != LpSolution::Status::kOptimal)
    throw InfeasibleError("timeshare_lp: targets are not reachable by time-sharing the given vertices");
  std::vector<double> w = sol.x;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

std::vector<DecodingOrder> tied_orders(std::span<const double> lambda, double tie_tol, int max_orders,
                                       std::uint64_t seed, bool* sampled) {
  if (sampled != nullptr) *sampled = false;
  const auto sorted = ascending_lambda_order(lambda).perm;
  std::vector<std::vector<int>> clusters;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const int u = sorted[i];
    if (i > 0) {
      const double a = lambda[sorted[i - 1]];
      const double b = lambda[u];
      if (b - a <= tie_tol * (1.0 + std::max(a, b))) {
        clusters.back().push_back(u);
        continue;
      }
    }
    clusters.push_back({u});
  }
  for (auto& c : clusters) std::sort(c.begin(), c.end());

  double count = 1.0;
  for (const auto& c : clusters)
    for (std::size_t i = 2; i <= c.size(); ++i) count *= static_cast<double>(i);

  auto flatten = [&](const std::vector<std::vector<int>>& cs) {
    DecodingOrder o;
    for (const auto& c : cs) o.perm.insert(o.perm.end(), c.begin(), c.end());
    return o;
  };

  std::vector<DecodingOrder> orders;
  if (count <= max_orders) {
    auto state = clusters;
    while (true) {
      orders.push_back(flatten(state));
      std::size_t c = 0;
      for (; c < state.size(); ++c) {
        if (std::next_permutation(state[c].begin(), state[c].end())) break;
      }
      if (c == state.size()) break;
    }
    return orders;
  }

  if (sampled != nullptr) *sampled = true;
  std::set<std::vector<int>> seen;
  CounterRng rng(seed);
  orders.push_back(flatten(clusters));
  seen.insert(orders.back().perm);
  const long long attempts = 100LL * max_orders;
  for (long long a = 0; a < attempts && static_cast<int>(orders.size()) < max_orders; ++a) {
    auto state = clusters;
    for (auto& c : state) {
      for (std::size_t i = c.size(); i > 1; --i) std::swap(c[i - 1], c[rng.below(i)]);
    }
    auto o = flatten(state);
    if (seen.insert(o.perm).second) orders.push_back(std::move(o));
  }
  return orders;
}

namespace {

// Time-division point: each user alone for 1/U of the time at rate U*b_u.
// Feasible whenever every user with a positive target has a nonzero channel.
struct TdmaPoint {
  std::vector<DecodingOrder> orders;
  std::vector<Allocation> allocations;
  std::vector<double> weights;
  double weighted_energy = 0.0;
};

TdmaPoint tdma_point(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                     double sigma2) {
  const int users = h.users();
  const int subs = h.subcarriers();
  TdmaPoint t;
  for (int u = 0; u < users; ++u) {
    PowerMatrix p = PowerMatrix::Zero(users, subs);
    if (targets[u] > 0) {
      std::vector<double> slopes(subs);
      for (int n = 0; n < subs; ++n) slopes[n] = h.gain(u, n) / sigma2;
      const auto row = waterfill_rate(slopes, users * targets[u]);
      for (int n = 0; n < subs; ++n) p(u, n) = row[n];
    }
    DecodingOrder o;
    for (int v = 0; v < users; ++v)
      if (v != u) o.perm.push_back(v);
    o.perm.push_back(u);
    t.allocations.emplace_back(p, sic_rates(h, p, o, sigma2));
    t.orders.push_back(std::move(o));
    t.weights.push_back(1.0 / users);
    t.weighted_energy += t.allocations.back().weighted_energy(theta) / users;
  }
  return t;
}

// Upper bound on every optimal dual price. With Sum theta E <= e_feas, no user
// exceeds P = e_feas / min theta on any subcarrier, and stationarity gives
// lambda_u g_un / ((sigma2 + P max g) ln 2) <= theta_u on every subcarrier.
double lambda_upper_bound(const ChannelSlice& h, std::span<const double> theta, double sigma2, double e_feas) {
  const double theta_min = *std::min_element(theta.begin(), theta.end());
  const double p_tot = e_feas / theta_min;
  double gmax = 0.0;
  for (int u = 0; u < h.users(); ++u)
    for (int n = 0; n < h.subcarriers(); ++n) gmax = std::max(gmax, h.gain(u, n));
  double bound = 0.0;
  for (int u = 0; u < h.users(); ++u) {
    double best = 0.0;
    for (int n = 0; n < h.subcarriers(); ++n) best = std::max(best, h.gain(u, n));
    if (best > 0) bound = std::max(bound, theta[u] * kLn2 * (sigma2 + p_tot * gmax) / best);
  }
  return 2.0 * std::max(bound, 1e-300);
}

struct Candidate {
  std::vector<double> lambda;
  std::vector<DecodingOrder> orders;
  std::vector<Allocation> allocations;
  std::vector<double> weights;
  double primal = std::numeric_limits<double>::infinity();
  bool sampled = false;
};

class DualSolver {
 public:
  DualSolver(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta, double sigma2,
             const DualOptions& opt)
      : h_(h), b_(targets.begin(), targets.end()), theta_(theta.begin(), theta.end()), sigma2_(sigma2), opt_(opt) {}

  // Fixed decoding order: the search runs over the chain multipliers mu >= 0
  // and only `order` is used for the primal.
  DualSolver(const ChannelSlice& h, const DecodingOrder& order, std::span<const double> targets,
             std::span<const double> theta, double sigma2, double feasible_energy, const DualOptions& opt)
      : DualSolver(h, targets, theta, sigma2, opt) {
    fixed_ = order;
    feasible_energy_ = feasible_energy;
    chain_b_ = chain_targets(order, targets);
  }

  DualResult run() {
    const int users = h_.users();
    DualResult res;
    if (std::all_of(b_.begin(), b_.end(), [](double x) { return x == 0.0; })) {
      res.lambda.assign(users, 0.0);
      res.orders.push_back(DecodingOrder::identity(users));
      PowerMatrix p = PowerMatrix::Zero(users, h_.subcarriers());
      res.vertex_allocations.emplace_back(p, sic_rates(h_, p, res.orders[0], sigma2_));
      res.timeshare_weights = {1.0};
      res.converged = true;
      return res;
    }

    TdmaPoint tdma;
    if (fixed_) {
      tdma.weighted_energy = feasible_energy_;
    } else {
      tdma = tdma_point(h_, b_, theta_, sigma2_);
    }
    lambda_max_ = lambda_upper_bound(h_, theta_, sigma2_, tdma.weighted_energy);
    warm_ = PowerMatrix::Zero(users, h_.subcarriers());
    best_lambda_.assign(users, 0.0);

    if (users == 1) {
      bisection(res);
    } else if (users <= opt_.ellipsoid_max_users) {
      ellipsoid(res);
    } else {
      subgradient(res);
    }
    if (!done() && !stop_) recover(best_lambda_);
    if (!fixed_ && (!std::isfinite(best_.primal) || best_.primal > tdma.weighted_energy)) {
      best_.orders = tdma.orders;
      best_.allocations = tdma.allocations;
      best_.weights = tdma.weights;
      best_.primal = tdma.weighted_energy;
    }

    res.lambda = fixed_ ? detail::lambda_from_mu(*fixed_, best_lambda_) : best_lambda_;
    res.orders = best_.orders;
    res.vertex_allocations = best_.allocations;
    res.timeshare_weights = best_.weights;
    res.orders_sampled = best_.sampled;
    res.primal = best_.primal;
    res.dual = best_dual_;
    res.gap = std::max(0.0, best_.primal - best_dual_);
    res.converged = certified();
    res.dual_history = std::move(history_);
    res.iterations = iterations_;
    return res;
  }

 private:
  bool done() const { return stop_ || certified(); }

  bool certified() const {
    return std::isfinite(best_dual_) && std::isfinite(best_.primal) &&
           best_.primal - best_dual_ <= std::max(opt_.gap_rel * best_.primal, opt_.gap_abs);
  }

  // Dual value at lambda; returns the supergradient b - R.
  Eigen::VectorXd evaluate(const std::vector<double>& lambda) {
    if (fixed_) return evaluate_fixed(lambda);
    const double g = dual_function(h_, lambda, b_, theta_, sigma2_, warm_, opt_.inner);
    history_.push_back(g);
    if (g > best_dual_) {
      best_dual_ = g;
      best_lambda_ = lambda;
    }
    const auto r = sic_rates(h_, warm_, ascending_lambda_order(lambda), sigma2_);
    Eigen::VectorXd s(h_.users());
    for (int u = 0; u < h_.users(); ++u) s(u) = b_[u] - r[u];
    return s;
  }

  Eigen::VectorXd evaluate_fixed(const std::vector<double>& mu) {
    detail::ChainObjective obj;
    obj.order = *fixed_;
    obj.coeff = mu;
    obj.theta = theta_;
    obj.sigma2 = sigma2_;
    detail::maximize_chain(h_, obj, warm_, opt_.inner);
    const auto f = chain_capacities(h_, *fixed_, warm_, sigma2_);
    double g = weighted_sum(warm_, theta_);
    Eigen::VectorXd s(h_.users());
    for (int k = 0; k < h_.users(); ++k) {
      s(k) = chain_b_[k] - f[k];
      g += mu[k] * s(k);
    }
    history_.push_back(g);
    if (g > best_dual_) {
      best_dual_ = g;
      best_lambda_ = mu;
    }
    return s;
  }

  void maybe_recover(int it) {
    const int period = 4 * (h_.users() + 1);
    if (it % period == 0 && best_lambda_ != last_recovered_) recover(best_lambda_);
  }

  // Chain Newton from the order implied by lambda, then time-sharing over the
  // orders of tied users at the resulting powers.
  void recover(const std::vector<double>& lambda) {
    last_recovered_ = lambda;
    const auto order = fixed_ ? *fixed_ : ascending_lambda_order(lambda);
    std::vector<double> mu(order.size());
    if (fixed_) {
      mu = lambda;
    } else {
      double prev = 0.0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        const double l = lambda[order.perm[k]];
        mu[k] = (k > 0 && l - prev <= opt_.tie_tol * (1.0 + l)) ? 0.0 : l - prev;
        prev = l;
      }
    }
    // Starting from zero keeps tied users symmetric when the maximizer is not unique.
    PowerMatrix start = PowerMatrix::Zero(h_.users(), h_.subcarriers());
    auto cs = detail::chain_solve(h_, order, std::move(mu), b_, theta_, sigma2_, std::move(start), opt_.inner,
                                  opt_.polish_max_iters);
    if (cs.converged && std::find(cs.mu.begin() + 1, cs.mu.end(), 0.0) != cs.mu.end()) {
      auto again = detail::chain_solve(h_, order, cs.mu, b_, theta_, sigma2_,
                                       PowerMatrix::Zero(h_.users(), h_.subcarriers()), opt_.inner,
                                       opt_.polish_max_iters);
      if (again.converged) cs = std::move(again);
    }
    const auto lam = detail::lambda_from_mu(order, cs.mu);
    history_.push_back(cs.dual);
    if (cs.dual > best_dual_) {
      best_dual_ = cs.dual;
      best_lambda_ = fixed_ ? cs.mu : lam;
    }
    // With the order fixed a converged chain solve is the best this search can
    // reach; if its powers miss a target the relaxation is not tight.
    if (fixed_ && cs.converged) stop_ = true;
    if (cs.primal >= best_.primal) return;

    bool sampled = false;
    auto orders = fixed_ ? std::vector<DecodingOrder>{*fixed_}
                         : tied_orders(lam, opt_.tie_tol, opt_.max_orders, opt_.sample_seed, &sampled);

    auto weights_at = [&](double scale, std::vector<Allocation>& allocs) -> std::vector<double> {
      allocs.clear();
      std::vector<Vertex> vs;
      const PowerMatrix p = scale * cs.p;
      const double e = scale * cs.primal;
      for (const auto& o : orders) {
        allocs.emplace_back(p, sic_rates(h_, p, o, sigma2_));
        vs.push_back({allocs.back().achieved_rates, e});
      }
      return timeshare_lp(vs, b_);
    };

    std::vector<Allocation> allocs;
    std::vector<double> w;
    double scale = 1.0;
    try {
      w = weights_at(1.0, allocs);
    } catch (const InfeasibleError&) {
      // Scale the powers up until the targets fit: the excess over 1 grows
      // tenfold per try (a nearly converged chain needs very little), then
      // bisection on the factor.
      double lo = 1.0, hi = 1.0;
      bool found = false;
      for (double excess = 1e-10; excess < 1e6 && !found; excess *= 10.0) {
        hi = 1.0 + excess;
        if (hi * cs.primal >= best_.primal) return;
        try {
          w = weights_at(hi, allocs);
          found = true;
        } catch (const InfeasibleError&) {
          lo = hi;
        }
      }
      if (!found) return;
      for (int i = 0; i < 60 && hi - lo > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        try {
          weights_at(mid, allocs);
          hi = mid;
        } catch (const InfeasibleError&) {
          lo = mid;
        }
      }
      scale = hi;
      w = weights_at(scale, allocs);
    }
    const double primal = scale * cs.primal;
    if (primal >= best_.primal) return;

    Candidate c;
    c.lambda = lam;
    c.primal = primal;
    c.sampled = sampled;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] <= 1e-12) continue;
      c.orders.push_back(orders[k]);
      c.allocations.push_back(std::move(allocs[k]));
      c.weights.push_back(w[k]);
    }
    const double total = std::accumulate(c.weights.begin(), c.weights.end(), 0.0);
    for (auto& x : c.weights) x /= total;
    best_ = std::move(c);
  }

  void bisection(DualResult&) {
    double lo = 0.0, hi = lambda_max_;
    for (int it = 1; it <= opt_.max_iters && !done(); ++it) {
      ++iterations_;
      const std::vector<double> mid{0.5 * (lo + hi)};
      const auto s = evaluate(mid);
      if (s(0) > 0) {
        lo = mid[0];
      } else {
        hi = mid[0];
      }
      maybe_recover(it);
      if (hi - lo <= 1e-15 * hi) break;
    }
  }

  void ellipsoid(DualResult&) {
    const int n = h_.users();
    Eigen::VectorXd c = Eigen::VectorXd::Constant(n, 0.5 * lambda_max_);
    Eigen::MatrixXd shape = Eigen::MatrixXd::Identity(n, n) * (n * 0.25 * lambda_max_ * lambda_max_);
    const double nn = static_cast<double>(n);
    for (int it = 1; it <= opt_.max_iters && !done(); ++it) {
      ++iterations_;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
      int out = -1;
      for (int u = 0; u < n; ++u) {
        if (c(u) < 0) {
          a(u) = -1.0;
          out = u;
          break;
        }
        if (c(u) > lambda_max_) {
          a(u) = 1.0;
          out = u;
          break;
        }
      }
      if (out < 0) {
        const std::vector<double> lam(c.data(), c.data() + n);
        a = -evaluate(lam);
        if (a.norm() == 0.0) {
          recover(lam);
          break;
        }
      }
      const double q = a.dot(shape * a);
      if (!(q > 0)) break;
      const Eigen::VectorXd pg = shape * a / std::sqrt(q);
      c -= pg / (nn + 1.0);
      shape = nn * nn / (nn * nn - 1.0) * (shape - 2.0 / (nn + 1.0) * pg * pg.transpose());
      shape = 0.5 * (shape + shape.transpose());
      if (out < 0) maybe_recover(it);
      if (std::sqrt(shape.diagonal().maxCoeff()) < 1e-13 * lambda_max_) break;
    }
  }

  void subgradient(DualResult&) {
    const int n = h_.users();
    std::vector<double> lam(n, 0.5 * lambda_max_);
    for (int it = 1; it <= opt_.max_iters && !done(); ++it) {
      ++iterations_;
      const auto s = evaluate(lam);
      const double norm = s.norm();
      if (norm == 0.0) {
        recover(lam);
        break;
      }
      const double step = 0.1 * lambda_max_ / std::sqrt(static_cast<double>(it));
      for (int u = 0; u < n; ++u) lam[u] = std::clamp(lam[u] + step * s(u) / norm, 0.0, lambda_max_);
      maybe_recover(it);
    }
  }

  const ChannelSlice& h_;
  std::vector<double> b_;
  std::vector<double> theta_;
  double sigma2_;
  DualOptions opt_;

  std::optional<DecodingOrder> fixed_;
  double feasible_energy_ = 0.0;
  std::vector<double> chain_b_;
  bool stop_ = false;

  double lambda_max_ = 0.0;
  PowerMatrix warm_;
  double best_dual_ = -std::numeric_limits<double>::infinity();
  std::vector<double> best_lambda_;
  std::vector<double> last_recovered_;
  std::vector<double> history_;
  Candidate best_;
  int iterations_ = 0;
};

}  // namespace

DualResult dual_solve(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                      double sigma2, const DualOptions& options) {
  check_problem(h, targets, theta, sigma2);
  return DualSolver(h, targets, theta, sigma2, options).run();
}

namespace detail {

DualResult fixed_order_solve(const ChannelSlice& h, const DecodingOrder& order, std::span<const double> targets,
                             std::span<const double> theta, double sigma2, double feasible_energy,
                             const DualOptions& options) {
  check_problem(h, targets, theta, sigma2);
  if (!order.is_permutation_of(h.users())) throw DimensionError("fixed_order_solve: order is not a permutation");
  return DualSolver(h, order, targets, theta, sigma2, feasible_energy, options).run();
}

}  // namespace detail

MacSolution min_pmac(const ChannelSlice& h, std::span<const double> targets, std::span<const double> theta,
                     double sigma2, const DualOptions& options) {
  auto d = dual_solve(h, targets, theta, sigma2, options);
  MacSolution s;
  s.lambdas = std::move(d.lambda);
  s.orders = std::move(d.orders);
  s.vertex_allocations = std::move(d.vertex_allocations);
  s.timeshare_weights = std::move(d.timeshare_weights);
  s.blended_rates = RateVector(static_cast<std::size_t>(h.users()));
  for (std::size_t k = 0; k < s.vertex_allocations.size(); ++k)
    for (int u = 0; u < h.users(); ++u)
      s.blended_rates[u] += s.timeshare_weights[k] * s.vertex_allocations[k].achieved_rates[u];
  s.total_weighted_energy = s.weighted_energy(theta);
  s.dual_value = d.dual;
  s.duality_gap = std::max(0.0, s.total_weighted_energy - d.dual);
  s.iterations = d.iterations;
  s.converged = d.converged;
  s.dual_history = std::move(d.dual_history);
  s.orders_sampled = d.orders_sampled;
  return s;
}

MacSolution min_pmac(const Scenario& scenario, const ChannelSlice& h, const DualOptions& options) {
  require_valid(scenario);
  if (scenario.num_users != h.users() || scenario.num_ap_antennas != h.antennas() ||
      scenario.num_subcarriers != h.subcarriers())
    throw DimensionError("min_pmac: channel dimensions do not match the scenario");
  auto s = min_pmac(h, scenario.rate_targets, scenario.energy_weights, scenario.noise_power_mw(), options);
  const double cap = scenario.max_power_mw() * (1.0 + 1e-9);
  for (int u = 0; u < h.users(); ++u) {
    double e = 0.0;
    for (std::size_t k = 0; k < s.vertex_allocations.size(); ++k)
      e += s.timeshare_weights[k] * s.vertex_allocations[k].energy[u];
    if (e > cap) s.cap_violations.push_back(u);
  }
  return s;
}

std::string format_solution(const MacSolution& s) {
  std::ostringstream os;
  auto list = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << format_double(v[i]);
    os << '\n';
  };
  os << "lambdas ";
  list(s.lambdas);
  os << "energy " << format_double(s.total_weighted_energy) << '\n';
  os << "duality_gap " << format_double(s.duality_gap) << '\n';
  os << "converged " << (s.converged ? 1 : 0) << " iterations " << s.iterations << '\n';
  os << "blended_rates ";
  list(s.blended_rates.r);
  os << "vertices " << s.orders.size() << '\n';
  for (std::size_t k = 0; k < s.orders.size(); ++k) {
    os << "vertex " << k << " weight " << format_double(s.timeshare_weights[k]) << " order";
    for (int u : s.orders[k].perm) os << ' ' << u;
    os << '\n';
    const auto& a = s.vertex_allocations[k];
    os << "rates ";
    list(a.achieved_rates.r);
    for (Eigen::Index u = 0; u < a.p.rows(); ++u) {
      os << "p " << u;
      for (Eigen::Index n = 0; n < a.p.cols(); ++n) os << ' ' << format_double(a.p(u, n));
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace macopt
