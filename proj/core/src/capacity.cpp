// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "macopt/errors.hpp"
#include "macopt/linalg.hpp"
#include "macopt/waterfill.hpp"

namespace macopt {

DecodingOrder DecodingOrder::identity(int users) {
  DecodingOrder o;
  o.perm.resize(static_cast<std::size_t>(users));
  std::iota(o.perm.begin(), o.perm.end(), 0);
  return o;
}

bool DecodingOrder::is_permutation_of(int users) const {
  if (static_cast<int>(perm.size()) != users) return false;
  std::vector<bool> seen(perm.size(), false);
  for (int u : perm) {
    if (u < 0 || u >= users || seen[u]) return false;
    seen[u] = true;
  }
  return true;
}

std::vector<int> DecodingOrder::positions() const {
  std::vector<int> pos(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) pos[perm[k]] = static_cast<int>(k);
  return pos;
}

Allocation::Allocation(PowerMatrix powers, RateVector rates)
    : p(std::move(powers)), achieved_rates(std::move(rates)) {
  energy.resize(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index u = 0; u < p.rows(); ++u) energy[u] = p.row(u).sum();
}

double Allocation::total_energy() const { return std::accumulate(energy.begin(), energy.end(), 0.0); }

double Allocation::weighted_energy(std::span<const double> theta) const {
  double e = 0.0;
  for (std::size_t u = 0; u < energy.size(); ++u) e += theta[u] * energy[u];
  return e;
}

void check_powers(const ChannelSlice& h, const PowerMatrix& p) {
  if (p.rows() != h.users() || p.cols() != h.subcarriers())
    throw DimensionError("power matrix is " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                         ", channel has " + std::to_string(h.users()) + " users x " +
                         std::to_string(h.subcarriers()) + " subcarriers");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double x = p.data()[i];
    if (!std::isfinite(x) || x < 0) throw DomainError("powers must be finite and >= 0");
  }
}

namespace {

void check_sigma(double sigma2) {
  if (!(sigma2 > 0) || !std::isfinite(sigma2)) throw DomainError("noise power must be finite and > 0");
}

// ln det(I + sigma^-2 A) where A accumulates p h h^H.
class LogDetAccumulator {
 public:
  LogDetAccumulator(int antennas, double sigma2)
      : scalar_(antennas == 1), inv_sigma2_(1.0 / sigma2),
        a_(Eigen::MatrixXcd::Zero(antennas, antennas)) {}

  void add(const Eigen::Ref<const Eigen::VectorXcd>& h, double p) {
    if (p == 0.0) return;
    if (scalar_) {
      s_ += p * std::norm(h(0)) * inv_sigma2_;
    } else {
      a_.noalias() += (p * inv_sigma2_) * h * h.adjoint();
    }
  }
  double value() const {
    if (scalar_) return std::log1p(s_);
    return linalg::log_det_i_plus(a_);
  }

 private:
  bool scalar_;
  double inv_sigma2_;
  double s_ = 0.0;
  Eigen::MatrixXcd a_;
};

}  // namespace

RateVector sic_rates(const ChannelSlice& h, const PowerMatrix& p, const DecodingOrder& order, double sigma2) {
  check_powers(h, p);
  check_sigma(sigma2);
  if (!order.is_permutation_of(h.users())) throw DimensionError("decoding order is not a permutation of the users");
  const int users = h.users();
  RateVector rates(static_cast<std::size_t>(users), 0.0);
  for (int n = 0; n < h.subcarriers(); ++n) {
    LogDetAccumulator acc(h.antennas(), sigma2);
    double later = 0.0;  // ln det for users decoded after position k
    for (int k = users - 1; k >= 0; --k) {
      const int u = order.perm[k];
      acc.add(h.h(u, n), p(u, n));
      const double with_u = acc.value();
      rates[u] += (with_u - later) / std::numbers::ln2;
      later = with_u;
    }
  }
  for (auto& r : rates.r) r = std::max(r, 0.0);
  return rates;
}

double subset_capacity(const ChannelSlice& h, const PowerMatrix& p, UserSet subset, double sigma2) {
  check_powers(h, p);
  check_sigma(sigma2);
  if (h.users() < 64 && (subset & ~all_users(h.users())) != 0) throw DimensionError("subset names unknown users");
  double total = 0.0;
  for (int n = 0; n < h.subcarriers(); ++n) {
    LogDetAccumulator acc(h.antennas(), sigma2);
    for (int u = 0; u < h.users(); ++u) {
      if (subset & (UserSet{1} << u)) acc.add(h.h(u, n), p(u, n));
    }
    total += acc.value();
  }
  return total / std::numbers::ln2;
}

double subset_capacity(const ChannelSlice& h, const PowerMatrix& p, std::span<const int> subset, double sigma2) {
  UserSet mask = 0;
  for (int u : subset) {
    if (u < 0 || u >= h.users()) throw DimensionError("subset names unknown users");
    mask |= UserSet{1} << u;
  }
  return subset_capacity(h, p, mask, sigma2);
}

RateVector GdfeFilters::rates() const {
  RateVector r(static_cast<std::size_t>(users), 0.0);
  for (int u = 0; u < users; ++u) {
    for (int n = 0; n < subcarriers; ++n) r[u] += std::log2(1.0 + unbiased_sinr(u, n));
  }
  return r;
}

GdfeFilters gdfe_synthesize(const ChannelSlice& h, const PowerMatrix& p, const DecodingOrder& order, double sigma2) {
  check_sigma(sigma2);
  check_powers(h, p);
  if (!order.is_permutation_of(h.users())) throw DimensionError("decoding order is not a permutation of the users");
  const int users = h.users();
  const int ant = h.antennas();
  GdfeFilters f;
  f.users = users;
  f.antennas = ant;
  f.subcarriers = h.subcarriers();
  f.order = order;
  f.unbiased_sinr = Eigen::MatrixXd::Zero(users, h.subcarriers());
  f.feedforward.reserve(h.subcarriers());
  f.feedback.reserve(h.subcarriers());

  for (int n = 0; n < h.subcarriers(); ++n) {
    Eigen::MatrixXcd ff = Eigen::MatrixXcd::Zero(ant, users);
    Eigen::MatrixXcd fb = Eigen::MatrixXcd::Zero(users, users);
    // Interference-plus-noise covariance for the user at position k contains
    // only the users decoded after it; build it from the back.
    Eigen::MatrixXcd k_cov = sigma2 * Eigen::MatrixXcd::Identity(ant, ant);
    for (int k = users - 1; k >= 0; --k) {
      const int u = order.perm[k];
      const auto hu = h.h(u, n);
      const double pu = p(u, n);
      if (pu > 0) {
        const Eigen::VectorXcd kinv_h = linalg::inverse_hpd(k_cov) * hu;
        const double sinr = pu * hu.dot(kinv_h).real();
        f.unbiased_sinr(u, n) = std::max(sinr, 0.0);
        if (sinr > 0) ff.col(u) = kinv_h * (std::sqrt(pu) / sinr);
        k_cov.noalias() += pu * hu * hu.adjoint();
      }
    }
    for (int k = 0; k < users; ++k) {
      const int u = order.perm[k];
      for (int j = 0; j < k; ++j) {
        const int v = order.perm[j];
        fb(u, v) = ff.col(u).dot(h.h(v, n)) * std::sqrt(p(v, n));
      }
    }
    f.feedforward.push_back(std::move(ff));
    f.feedback.push_back(std::move(fb));
  }
  return f;
}

DecodingOrder strongest_first_order(const ChannelSlice& h) {
  DecodingOrder o = DecodingOrder::identity(h.users());
  std::vector<double> g(static_cast<std::size_t>(h.users()));
  for (int u = 0; u < h.users(); ++u) g[u] = h.total_gain(u);
  std::stable_sort(o.perm.begin(), o.perm.end(), [&](int a, int b) { return g[a] > g[b]; });
  return o;
}

IwfResult iwf_max_sumrate(const ChannelSlice& h, std::span<const double> budgets, double sigma2, IwfOptions opt) {
  check_sigma(sigma2);
  const int users = h.users();
  const int subs = h.subcarriers();
  const int ant = h.antennas();
  if (static_cast<int>(budgets.size()) != users) throw DimensionError("iwf: one budget per user required");
  for (double b : budgets) {
    if (!std::isfinite(b) || b < 0) throw DomainError("iwf: budgets must be finite and >= 0");
  }

  IwfResult res;
  PowerMatrix p = PowerMatrix::Zero(users, subs);
  const UserSet everyone = all_users(users);
  double current = 0.0;
  double damping = 1.0;
  std::vector<double> slopes(static_cast<std::size_t>(subs));

  for (int it = 0; it < opt.max_iters; ++it) {
    const PowerMatrix before = p;
    for (int u = 0; u < users; ++u) {
      for (int n = 0; n < subs; ++n) {
        const auto hu = h.h(u, n);
        if (ant == 1) {
          double interference = sigma2;
          for (int v = 0; v < users; ++v) {
            if (v != u) interference += p(v, n) * h.gain(v, n);
          }
          slopes[n] = std::norm(hu(0)) / interference;
        } else {
          Eigen::MatrixXcd k_cov = sigma2 * Eigen::MatrixXcd::Identity(ant, ant);
          for (int v = 0; v < users; ++v) {
            if (v != u && p(v, n) > 0) k_cov.noalias() += p(v, n) * h.h(v, n) * h.h(v, n).adjoint();
          }
          slopes[n] = std::max(0.0, hu.dot(linalg::inverse_hpd(k_cov) * hu).real());
        }
      }
      const auto wf = waterfill_budget(slopes, budgets[u]);
      for (int n = 0; n < subs; ++n) p(u, n) += damping * (wf[n] - p(u, n));
    }
    const double next = subset_capacity(h, p, everyone, sigma2);
    res.iterations = it + 1;
    if (next < current) {
      // Cyclic updates should be monotone; fall back to a damped step.
      p = before;
      if (damping < 1e-3) {
        res.converged = true;
        break;
      }
      damping *= 0.5;
      continue;
    }
    res.history.push_back(next);
    const double gain = next - current;
    current = next;
    if (it > 0 && gain < opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.sum_rate = current;
  const DecodingOrder order = DecodingOrder::identity(users);
  res.allocation = Allocation(p, sic_rates(h, p, order, sigma2));
  return res;
}

}  // namespace macopt
