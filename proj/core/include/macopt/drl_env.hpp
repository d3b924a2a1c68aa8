// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "macopt/capacity.hpp"
#include "macopt/channel.hpp"

namespace macopt::drl {

struct EnvConfig {
  double alpha = 1.0;   ///< weight on sum rate
  double beta = 0.1;    ///< weight on total energy (mW)
  double gamma = 10.0;  ///< weight on target shortfall
  double max_step_db = 1.0;
  double p_max_mw = 50.0;  ///< cap on every p(u, n)
  int horizon = 64;
};

struct EnvState {
  PowerMatrix p;
  RateVector rates;
  std::vector<double> targets;
  int t = 0;
  bool terminal = false;
};

/// One channel realization with the heuristic (strongest-first) SIC order.
class PowerEnv {
 public:
  PowerEnv(const ChannelSlice& h, std::vector<double> targets, double sigma2, EnvConfig config);

  /// p = p_max / 10 everywhere, t = 0.
  EnvState reset() const;

  struct Step {
    EnvState state;
    double reward = 0.0;
  };
  /// Throws DomainError on a non-finite action.
  Step step(const EnvState& state, const Eigen::VectorXd& action) const;

  int action_dim() const { return h_.users() * h_.subcarriers(); }
  int obs_dim() const { return action_dim() + 2 * h_.users(); }
  const EnvConfig& config() const { return config_; }

 private:
  ChannelSlice h_;
  std::vector<double> targets_;
  double sigma2_;
  EnvConfig config_;
  DecodingOrder order_;
};

/// alpha sum R - beta sum E - gamma sum max(0, b - R).
double env_reward(const RateVector& rates, std::span<const double> energy, std::span<const double> targets,
                  const EnvConfig& config);

/// [p / p_max (row-major u, n), R, b]
Eigen::VectorXd observe(const EnvState& state, const EnvConfig& config);

}  // namespace macopt::drl
