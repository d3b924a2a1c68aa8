// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "macopt/channel.hpp"
#include "macopt/drl_env.hpp"
#include "macopt/drl_network.hpp"
#include "macopt/drl_ppo.hpp"
#include "macopt/scenario.hpp"

namespace macopt::drl {

inline constexpr std::uint64_t kDefaultTrainSeed = 20240611;

struct TrainConfig {
  EnvConfig env;  ///< p_max_mw is replaced by the scenario's power cap
  PpoConfig ppo;
  int updates = 500;
  int episodes_per_update = 4;
  std::vector<int> hidden{64, 64};
  /// Rewards are multiplied by this before advantage / value estimation.
  double reward_scale = 0.01;
  int plateau_window = 50;
  double plateau_tol = 1e-3;
};

struct TrainResult {
  PolicyState policy;
  /// Mean undiscounted episode reward per update.
  std::vector<double> curve;
  bool early_stopped = false;
};

/// Deterministic in `seed`. Episode k uses trial k mod trials of `train` and
/// the RNG substream k. Throws NumericalError when rewards turn NaN.
TrainResult train(const Scenario& scenario, const ChannelTrace& train, const TrainConfig& config, std::uint64_t seed,
                  const std::function<void(int, double)>& progress = {});

/// Policy matching the scenario's dimensions without any update.
PolicyState initial_policy(const Scenario& scenario, const TrainConfig& config, std::uint64_t seed);

/// Mean-action rollout over one realization; returns the final state.
EnvState greedy_rollout(const PolicyState& policy, const PowerEnv& env);

struct EvalStats {
  int trials = 0;
  double mean_energy = 0.0;  ///< mW, policy
  double mean_rate = 0.0;    ///< bits per use, policy
  /// Trials where some user ends more than 1e-6 bits short of its target.
  int target_violations = 0;
  double opt_mean_energy = 0.0;
  double opt_mean_rate = 0.0;
  /// (mean_rate / mean_energy) relative to the same quantity for min_pmac.
  double efficiency_ratio = 0.0;
  double energy_ratio = 0.0;  ///< opt_mean_energy / mean_energy
  double rate_ratio = 0.0;    ///< mean_rate / opt_mean_rate
  double policy_ms = 0.0;     ///< wall clock per instance
  double minpmac_ms = 0.0;

  /// Equality of every non-timing field.
  bool same_values(const EvalStats& other) const;
};

EvalStats evaluate(const PolicyState& policy, const Scenario& scenario, const ChannelTrace& eval,
                   const TrainConfig& config);

}  // namespace macopt::drl
