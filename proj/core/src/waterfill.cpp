// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "macopt/errors.hpp"

namespace macopt {

namespace {

struct Sorted {
  std::vector<std::size_t> idx;  // positive slopes, strongest first
  std::vector<double> tau;
};

Sorted sort_channels(std::span<const double> a, std::span<const double> tau) {
  if (!tau.empty() && tau.size() != a.size()) throw DimensionError("waterfill: tau size mismatch");
  Sorted s;
  s.tau.assign(a.size(), 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || a[i] < 0) throw DomainError("waterfill: slopes must be finite and >= 0");
    if (!tau.empty()) {
      if (!(tau[i] >= 0) || !std::isfinite(tau[i])) throw DomainError("waterfill: bad time fraction");
      s.tau[i] = tau[i];
    }
    if (a[i] > 0 && s.tau[i] > 0) s.idx.push_back(i);
  }
  std::stable_sort(s.idx.begin(), s.idx.end(), [&](std::size_t x, std::size_t y) { return a[x] > a[y]; });
  return s;
}

}  // namespace

std::vector<double> waterfill_budget(std::span<const double> a, double budget, std::span<const double> tau) {
  if (!std::isfinite(budget) || budget < 0) throw DomainError("waterfill_budget: budget must be >= 0");
  const auto s = sort_channels(a, tau);
  std::vector<double> p(a.size(), 0.0);
  if (budget == 0 || s.idx.empty()) return p;

  double t_sum = 0.0, inv_sum = 0.0, level = 0.0;
  std::size_t active = 0;
  for (std::size_t k = 0; k < s.idx.size(); ++k) {
    const auto i = s.idx[k];
    t_sum += s.tau[i];
    inv_sum += s.tau[i] / a[i];
    level = (budget + inv_sum) / t_sum;
    active = k + 1;
    if (k + 1 == s.idx.size() || level <= 1.0 / a[s.idx[k + 1]]) break;
  }
  for (std::size_t k = 0; k < active; ++k) {
    const auto i = s.idx[k];
    p[i] = std::max(0.0, level - 1.0 / a[i]);
  }
  return p;
}

std::vector<double> waterfill_rate(std::span<const double> a, double target_bits, std::span<const double> tau) {
  if (!std::isfinite(target_bits) || target_bits < 0) throw DomainError("waterfill_rate: target must be >= 0");
  const auto s = sort_channels(a, tau);
  std::vector<double> p(a.size(), 0.0);
  if (target_bits == 0) return p;
  if (s.idx.empty()) throw InfeasibleError("waterfill_rate: positive target on an all-zero channel");

  double t_sum = 0.0, log_sum = 0.0, level = 0.0;
  std::size_t active = 0;
  for (std::size_t k = 0; k < s.idx.size(); ++k) {
    const auto i = s.idx[k];
    t_sum += s.tau[i];
    log_sum += s.tau[i] * std::log2(a[i]);
    level = std::exp2((target_bits - log_sum) / t_sum);
    active = k + 1;
    if (k + 1 == s.idx.size() || level <= 1.0 / a[s.idx[k + 1]]) break;
  }
  for (std::size_t k = 0; k < active; ++k) {
    const auto i = s.idx[k];
    p[i] = std::max(0.0, level - 1.0 / a[i]);
  }
  return p;
}

double waterfill_rate_of(std::span<const double> a, std::span<const double> p, std::span<const double> tau) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = tau.empty() ? 1.0 : tau[i];
    r += t * std::log2(1.0 + p[i] * a[i]);
  }
  return r;
}

}  // namespace macopt
