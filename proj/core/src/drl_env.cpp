// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/drl_env.hpp"

#include <algorithm>
#include <cmath>

#include "macopt/errors.hpp"

namespace macopt::drl {

PowerEnv::PowerEnv(const ChannelSlice& h, std::vector<double> targets, double sigma2, EnvConfig config)
    : h_(h), targets_(std::move(targets)), sigma2_(sigma2), config_(config), order_(strongest_first_order(h)) {
  if (static_cast<int>(targets_.size()) != h.users()) throw DimensionError("PowerEnv: one target per user");
  if (!(sigma2 > 0)) throw DomainError("PowerEnv: noise power must be > 0");
  if (!(config_.p_max_mw > 0) || config_.horizon < 1 || !(config_.max_step_db > 0))
    throw ConfigError("PowerEnv: p_max, horizon and step size must be positive");
}

EnvState PowerEnv::reset() const {
  EnvState s;
  s.p = PowerMatrix::Constant(h_.users(), h_.subcarriers(), config_.p_max_mw / 10.0);
  s.rates = sic_rates(h_, s.p, order_, sigma2_);
  s.targets = targets_;
  return s;
}

PowerEnv::Step PowerEnv::step(const EnvState& state, const Eigen::VectorXd& action) const {
  if (action.size() != action_dim()) throw DimensionError("PowerEnv: action size mismatch");
  if (!action.allFinite()) throw DomainError("PowerEnv: non-finite action");
  Step out;
  EnvState& s = out.state;
  s.p = state.p;
  const int subs = h_.subcarriers();
  for (int u = 0; u < h_.users(); ++u)
    for (int n = 0; n < subs; ++n) {
      const double db = std::clamp(action(u * subs + n), -config_.max_step_db, config_.max_step_db);
      s.p(u, n) = std::clamp(s.p(u, n) * std::pow(10.0, db / 10.0), 0.0, config_.p_max_mw);
    }
  s.rates = sic_rates(h_, s.p, order_, sigma2_);
  s.targets = state.targets;
  s.t = state.t + 1;
  s.terminal = s.t >= config_.horizon;
  std::vector<double> energy(h_.users());
  for (int u = 0; u < h_.users(); ++u) energy[u] = s.p.row(u).sum();
  out.reward = env_reward(s.rates, energy, s.targets, config_);
  return out;
}

double env_reward(const RateVector& rates, std::span<const double> energy, std::span<const double> targets,
                  const EnvConfig& config) {
  double r = 0.0, e = 0.0, short_fall = 0.0;
  for (std::size_t u = 0; u < targets.size(); ++u) {
    r += rates[u];
    e += energy[u];
    short_fall += std::max(0.0, targets[u] - rates[u]);
  }
  return config.alpha * r - config.beta * e - config.gamma * short_fall;
}

Eigen::VectorXd observe(const EnvState& state, const EnvConfig& config) {
  const Eigen::Index users = state.p.rows(), subs = state.p.cols();
  Eigen::VectorXd o(users * subs + 2 * users);
  for (Eigen::Index u = 0; u < users; ++u)
    for (Eigen::Index n = 0; n < subs; ++n) o(u * subs + n) = state.p(u, n) / config.p_max_mw;
  for (Eigen::Index u = 0; u < users; ++u) {
    o(users * subs + u) = state.rates[u];
    o(users * subs + users + u) = state.targets[u];
  }
  return o;
}

}  // namespace macopt::drl
