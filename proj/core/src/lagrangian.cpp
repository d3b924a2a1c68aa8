// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "macopt/detail/set_logdet.hpp"
#include "macopt/errors.hpp"
#include "macopt/linalg.hpp"

namespace macopt {

namespace detail {

SetLogDet set_logdet(const ChannelSlice& h, int n, const Eigen::Ref<const Eigen::VectorXd>& x, UserSet subset,
                     double sigma2, bool want_hessian) {
  const int users = h.users();
  const int ant = h.antennas();
  SetLogDet out;
  out.grad = Eigen::VectorXd::Zero(users);
  if (want_hessian) out.hess = Eigen::MatrixXd::Zero(users, users);

  if (ant == 1) {
    double load = 0.0;
    for (int u = 0; u < users; ++u) {
      if ((subset >> u) & 1U) load += x(u) * h.gain(u, n);
    }
    out.value = std::log1p(load / sigma2);
    const double m = sigma2 + load;
    for (int u = 0; u < users; ++u) {
      if (!((subset >> u) & 1U)) continue;
      out.grad(u) = h.gain(u, n) / m;
      if (want_hessian) {
        for (int v = 0; v < users; ++v) {
          if ((subset >> v) & 1U) out.hess(u, v) = -h.gain(u, n) * h.gain(v, n) / (m * m);
        }
      }
    }
    return out;
  }

  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(ant, ant);
  for (int u = 0; u < users; ++u) {
    if (((subset >> u) & 1U) && x(u) > 0) {
      const auto hu = h.h(u, n);
      a.noalias() += (x(u) / sigma2) * hu * hu.adjoint();
    }
  }
  out.value = linalg::log_det_i_plus(a);
  Eigen::MatrixXcd m = sigma2 * a;
  m.diagonal().array() += sigma2;
  const Eigen::MatrixXcd minv = linalg::inverse_hpd(m);

  Eigen::MatrixXcd hs(ant, users);
  for (int u = 0; u < users; ++u) hs.col(u) = h.h(u, n);
  const Eigen::MatrixXcd cross = hs.adjoint() * minv * hs;
  for (int u = 0; u < users; ++u) {
    if (!((subset >> u) & 1U)) continue;
    out.grad(u) = std::max(0.0, cross(u, u).real());
    if (want_hessian) {
      for (int v = 0; v < users; ++v) {
        if ((subset >> v) & 1U) out.hess(u, v) = -std::norm(cross(u, v));
      }
    }
  }
  return out;
}

ChainObjective ChainObjective::from_lambda(std::span<const double> lambda, std::span<const double> theta,
                                           const DecodingOrder& order, double sigma2) {
  ChainObjective obj;
  obj.order = order;
  obj.theta.assign(theta.begin(), theta.end());
  obj.sigma2 = sigma2;
  obj.coeff.resize(order.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double l = lambda[order.perm[k]];
    obj.coeff[k] = l - prev;
    prev = l;
  }
  return obj;
}

ChainEval evaluate_chain(const ChannelSlice& h, int n, const ChainObjective& obj,
                         const Eigen::Ref<const Eigen::VectorXd>& x, bool want_hessian) {
  const int users = h.users();
  ChainEval ev;
  ev.grad = Eigen::VectorXd::Zero(users);
  if (want_hessian) ev.hess = Eigen::MatrixXd::Zero(users, users);
  for (int k = 0; k < users; ++k) {
    const double c = obj.coeff[k];
    if (c == 0.0) continue;
    const auto s = set_logdet(h, n, x, suffix_set(obj.order, k), obj.sigma2, want_hessian);
    const double w = c / std::numbers::ln2;
    ev.value += w * s.value;
    ev.grad += w * s.grad;
    if (want_hessian) ev.hess += w * s.hess;
  }
  for (int u = 0; u < users; ++u) {
    ev.value -= obj.theta[u] * x(u);
    ev.grad(u) -= obj.theta[u];
  }
  return ev;
}

namespace {

double projected_violation(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  double v = 0.0;
  for (Eigen::Index u = 0; u < x.size(); ++u) v = std::max(v, x(u) > 0 ? std::abs(g(u)) : std::max(g(u), 0.0));
  return v;
}

// One subcarrier. Newton direction on the free variables, projected onto
// x >= 0, with a diagonally scaled gradient step as fallback.
double maximize_subcarrier(const ChannelSlice& h, int n, const ChainObjective& obj, Eigen::VectorXd& x,
                           const InnerOptions& opt, double tol) {
  const int users = h.users();
  constexpr double kArmijo = 1e-4;
  if (x.isZero()) {
    // Cold start at each user's interference-free water level.
    const auto pos = obj.order.positions();
    for (int u = 0; u < users; ++u) {
      double w = 0.0;
      for (int k = 0; k <= pos[u]; ++k) w += obj.coeff[k];
      const double a = h.gain(u, n) / obj.sigma2;
      if (a > 0 && obj.theta[u] > 0)
        x(u) = std::clamp(w / (std::numbers::ln2 * obj.theta[u]) - 1.0 / a, 0.0, 1e6 / a);
    }
  }
  double viol = 0.0;
  int noise_steps = 0;
  for (int it = 0; it < opt.max_iters; ++it) {
    const auto ev = evaluate_chain(h, n, obj, x, true);
    viol = projected_violation(x, ev.grad);
    if (viol <= tol) break;

    std::vector<int> free;
    for (int u = 0; u < users; ++u) {
      if (x(u) > 0 || ev.grad(u) > 0) free.push_back(u);
    }
    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd neg_h(nf, nf);
    Eigen::VectorXd gf(nf);
    double diag_max = 0.0;
    for (int i = 0; i < nf; ++i) {
      gf(i) = ev.grad(free[i]);
      for (int j = 0; j < nf; ++j) neg_h(i, j) = -ev.hess(free[i], free[j]);
      diag_max = std::max(diag_max, neg_h(i, i));
    }

    auto try_direction = [&](const Eigen::VectorXd& d_free) {
      double alpha = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        Eigen::VectorXd xn = x;
        for (int i = 0; i < nf; ++i) xn(free[i]) = std::max(0.0, x(free[i]) + alpha * d_free(i));
        const double ascent = ev.grad.dot(xn - x);
        if (ascent <= 0) {
          alpha *= 0.5;
          continue;
        }
        const double val = evaluate_chain(h, n, obj, xn, false).value;
        if (val >= ev.value + kArmijo * ascent) {
          x = xn;
          return true;
        }
        alpha *= 0.5;
      }
      return false;
    };

    bool moved = false;
    {
      const Eigen::VectorXd d = linalg::solve_psd(neg_h, gf);
      double scale = std::abs(ev.value);
      for (int u = 0; u < users; ++u) scale += obj.theta[u] * x(u);
      const bool solved = d.allFinite() && (neg_h * d - gf).norm() <= 1e-8 * gf.norm();
      if (solved && 0.5 * d.dot(gf) <= 1e-14 * scale) {
        // Below the resolution of the objective Armijo cannot decide; take the
        // full step while it still reduces the stationarity violation.
        if (++noise_steps > 8) break;
        Eigen::VectorXd xn = x;
        for (int i = 0; i < nf; ++i) xn(free[i]) = std::max(0.0, x(free[i]) + d(i));
        if (projected_violation(xn, evaluate_chain(h, n, obj, xn, false).grad) >= viol) break;
        x = xn;
        continue;
      }
      if (d.allFinite() && d.dot(gf) > 0) moved = try_direction(d);
    }
    if (!moved) {
      Eigen::VectorXd d(nf);
      for (int i = 0; i < nf; ++i) d(i) = gf(i) / std::max(neg_h(i, i), 1e-300);
      moved = try_direction(d);
    }
    if (!moved) break;
  }
  return viol;
}

}  // namespace

double maximize_chain(const ChannelSlice& h, const ChainObjective& obj, PowerMatrix& p, const InnerOptions& opt) {
  double theta_scale = 1.0;
  for (double t : obj.theta) theta_scale = std::max(theta_scale, t);
  const double tol = opt.grad_tol * theta_scale;
  double worst = 0.0;
  Eigen::VectorXd x(h.users());
  for (int n = 0; n < h.subcarriers(); ++n) {
    x = p.col(n).cwiseMax(0.0);
    maximize_subcarrier(h, n, obj, x, opt, tol);
    p.col(n) = x;
    const auto ev = evaluate_chain(h, n, obj, x, false);
    worst = std::max(worst, projected_violation(x, ev.grad));
  }
  return worst;
}

}  // namespace detail

DecodingOrder ascending_lambda_order(std::span<const double> lambda) {
  DecodingOrder o = DecodingOrder::identity(static_cast<int>(lambda.size()));
  std::stable_sort(o.perm.begin(), o.perm.end(), [&](int a, int b) { return lambda[a] < lambda[b]; });
  return o;
}

namespace {

void check_inputs(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> theta,
                  const DecodingOrder& order, double sigma2) {
  if (static_cast<int>(lambda.size()) != h.users() || static_cast<int>(theta.size()) != h.users())
    throw DimensionError("lagrangian: lambda/theta must have one entry per user");
  if (!order.is_permutation_of(h.users())) throw DimensionError("lagrangian: order is not a permutation");
  if (!(sigma2 > 0)) throw DomainError("lagrangian: noise power must be > 0");
  for (std::size_t u = 0; u < lambda.size(); ++u) {
    if (!(lambda[u] >= 0) || !std::isfinite(lambda[u]) || !(theta[u] >= 0) || !std::isfinite(theta[u]))
      throw DomainError("lagrangian: lambda and theta must be finite and >= 0");
  }
}

}  // namespace

double lagrangian_value(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> theta,
                        const DecodingOrder& order, const PowerMatrix& p, double sigma2) {
  check_inputs(h, lambda, theta, order, sigma2);
  const auto r = sic_rates(h, p, order, sigma2);
  double v = 0.0;
  for (int u = 0; u < h.users(); ++u) v += lambda[u] * r[u] - theta[u] * p.row(u).sum();
  return v;
}

Eigen::MatrixXd lagrangian_gradient(const ChannelSlice& h, std::span<const double> lambda,
                                    std::span<const double> theta, const DecodingOrder& order, const PowerMatrix& p,
                                    double sigma2) {
  check_inputs(h, lambda, theta, order, sigma2);
  check_powers(h, p);
  const auto obj = detail::ChainObjective::from_lambda(lambda, theta, order, sigma2);
  Eigen::MatrixXd g(h.users(), h.subcarriers());
  for (int n = 0; n < h.subcarriers(); ++n) g.col(n) = detail::evaluate_chain(h, n, obj, p.col(n), false).grad;
  return g;
}

double inner_stationarity(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> theta,
                          const DecodingOrder& order, const PowerMatrix& p, double sigma2) {
  const auto g = lagrangian_gradient(h, lambda, theta, order, p, sigma2);
  double v = 0.0;
  for (Eigen::Index u = 0; u < p.rows(); ++u) {
    for (Eigen::Index n = 0; n < p.cols(); ++n) {
      v = std::max(v, p(u, n) > 0 ? std::abs(g(u, n)) : std::max(g(u, n), 0.0));
    }
  }
  return v;
}

Allocation inner_lagrangian_opt(const ChannelSlice& h, std::span<const double> lambda, std::span<const double> theta,
                                const DecodingOrder& order, double sigma2, InnerOptions options,
                                const PowerMatrix* warm_start) {
  check_inputs(h, lambda, theta, order, sigma2);
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (lambda[order.perm[k]] < lambda[order.perm[k - 1]])
      throw ContractError("inner_lagrangian_opt: decoding order must list users by ascending lambda");
  }
  PowerMatrix p = PowerMatrix::Zero(h.users(), h.subcarriers());
  if (warm_start != nullptr) {
    check_powers(h, *warm_start);
    p = *warm_start;
  }
  const auto obj = detail::ChainObjective::from_lambda(lambda, theta, order, sigma2);
  detail::maximize_chain(h, obj, p, options);
  return Allocation(p, sic_rates(h, p, order, sigma2));
}

}  // namespace macopt
