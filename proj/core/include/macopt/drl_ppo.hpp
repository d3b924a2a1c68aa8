// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "macopt/drl_network.hpp"

namespace macopt::drl {

/// Rollout storage; every member has one entry per step.
struct Trajectory {
  std::vector<Eigen::VectorXd> obs;  ///< raw observations
  std::vector<Eigen::VectorXd> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<bool> terminal;  ///< episode ends after this step
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const noexcept { return rewards.size(); }
  void append(const Trajectory& other);
};

struct Gae {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// One episode, bootstrap value 0 after the last step.
Gae gae_compute(std::span<const double> rewards, std::span<const double> values, double discount, double lambda);

/// Fills advantages / returns episode by episode using `terminal`.
void gae_fill(Trajectory& batch, double discount, double lambda);

/// Shifts and scales to mean 0, std 1 (population std).
void normalize_advantages(std::vector<double>& adv);

/// min(rho A, clip(rho, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double eps);

/// Diagonal Gaussian log-density.
double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std);

struct PpoConfig {
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  int epochs = 10;
  int minibatch = 64;
  double lr = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double max_grad_norm = 0.5;
  double discount = 0.99;
  double gae_lambda = 0.95;
};

struct LossGrad {
  double loss = 0.0;  ///< -surrogate + c_v value loss - c_e entropy
  double surrogate = 0.0;
  double value_loss = 0.0;  ///< mean (V - return)^2
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Eigen::VectorXd grad;  ///< d loss / d params
};

/// Loss and exact gradient over the samples `idx` of a batch whose
/// advantages are already normalized. Observations are normalized with the
/// policy's statistics.
LossGrad ppo_loss_grad(const PolicyState& policy, const Trajectory& batch, std::span<const std::size_t> idx,
                       const PpoConfig& config);

/// Applies one Adam step with global-norm clipping. Returns the pre-clip norm.
double adam_step(PolicyState& policy, Eigen::VectorXd grad, const PpoConfig& config);

struct UpdateMetrics {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
  int steps = 0;
};

/// Clipped-surrogate PPO over `epochs` shuffled minibatches. Throws
/// NumericalError naming the epoch and minibatch when the loss turns NaN.
UpdateMetrics ppo_update(PolicyState& policy, const Trajectory& batch, const PpoConfig& config, std::uint64_t seed);

}  // namespace macopt::drl
