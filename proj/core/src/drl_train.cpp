// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/drl_train.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "macopt/errors.hpp"
#include "macopt/minpmac.hpp"
#include "macopt/rng.hpp"

namespace macopt::drl {

namespace {

using Clock = std::chrono::steady_clock;

EnvConfig env_for(const Scenario& scenario, const TrainConfig& config) {
  EnvConfig e = config.env;
  e.p_max_mw = scenario.max_power_mw();
  return e;
}

void check_trace(const Scenario& scenario, const ChannelTrace& trace) {
  if (trace.users != scenario.num_users || trace.subcarriers != scenario.num_subcarriers)
    throw DimensionError("drl: channel trace does not match the scenario");
  if (trace.trials < 1) throw DimensionError("drl: channel trace has no trials");
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

PolicyState initial_policy(const Scenario& scenario, const TrainConfig& config, std::uint64_t seed) {
  const int act = scenario.num_users * scenario.num_subcarriers;
  return PolicyState::create(act + 2 * scenario.num_users, act, config.hidden, substream_seed(seed, ~0ULL));
}

TrainResult train(const Scenario& scenario, const ChannelTrace& trace, const TrainConfig& config, std::uint64_t seed,
                  const std::function<void(int, double)>& progress) {
  require_valid(scenario);
  check_trace(scenario, trace);
  const EnvConfig env_cfg = env_for(scenario, config);
  const double sigma2 = scenario.noise_power_mw();
  TrainResult res;
  res.policy = initial_policy(scenario, config, seed);
  double best = -std::numeric_limits<double>::infinity();
  int last_improve = 0;

  for (int u = 0; u < config.updates; ++u) {
    Trajectory batch;
    double reward_sum = 0.0;
    for (int e = 0; e < config.episodes_per_update; ++e) {
      const std::uint64_t k = static_cast<std::uint64_t>(u) * config.episodes_per_update + e;
      const PowerEnv env(trace.slice(static_cast<int>(k % static_cast<std::uint64_t>(trace.trials))),
                         scenario.rate_targets, sigma2, env_cfg);
      CounterRng rng(substream_seed(seed, k));
      EnvState s = env.reset();
      while (!s.terminal) {
        const Eigen::VectorXd obs = observe(s, env_cfg);
        const PolicyOutput out = policy_eval(res.policy, obs);
        Eigen::VectorXd a(out.mean.size());
        for (Eigen::Index j = 0; j < a.size(); ++j) a(j) = out.mean(j) + std::exp(out.log_std(j)) * rng.normal();
        auto step = env.step(s, a);
        if (!std::isfinite(step.reward)) throw NumericalError("train: non-finite reward at update " + std::to_string(u));
        reward_sum += step.reward;
        batch.obs.push_back(obs);
        batch.actions.push_back(a);
        batch.rewards.push_back(config.reward_scale * step.reward);
        batch.values.push_back(out.value);
        batch.log_probs.push_back(gaussian_log_prob(a, out.mean, out.log_std));
        batch.terminal.push_back(step.state.terminal);
        s = std::move(step.state);
      }
    }
    const double mean_reward = reward_sum / config.episodes_per_update;
    if (!std::isfinite(mean_reward)) throw NumericalError("train: reward diverged at update " + std::to_string(u));
    res.curve.push_back(mean_reward);
    if (progress) progress(u, mean_reward);

    gae_fill(batch, config.ppo.discount, config.ppo.gae_lambda);
    normalize_advantages(batch.advantages);
    ppo_update(res.policy, batch, config.ppo, substream_seed(seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(u)));
    res.policy.norm.update(batch.obs);

    if (mean_reward > best + config.plateau_tol * std::max(1.0, std::abs(best)) || u == 0) {
      best = std::max(best, mean_reward);
      last_improve = u;
    } else if (config.plateau_window > 0 && u - last_improve >= config.plateau_window) {
      res.early_stopped = true;
      break;
    }
  }
  return res;
}

EnvState greedy_rollout(const PolicyState& policy, const PowerEnv& env) {
  EnvState s = env.reset();
  while (!s.terminal) s = env.step(s, policy_eval(policy, observe(s, env.config())).mean).state;
  return s;
}

bool EvalStats::same_values(const EvalStats& o) const {
  return trials == o.trials && mean_energy == o.mean_energy && mean_rate == o.mean_rate &&
         target_violations == o.target_violations && opt_mean_energy == o.opt_mean_energy &&
         opt_mean_rate == o.opt_mean_rate && efficiency_ratio == o.efficiency_ratio && energy_ratio == o.energy_ratio &&
         rate_ratio == o.rate_ratio;
}

EvalStats evaluate(const PolicyState& policy, const Scenario& scenario, const ChannelTrace& trace,
                   const TrainConfig& config) {
  require_valid(scenario);
  check_trace(scenario, trace);
  const EnvConfig env_cfg = env_for(scenario, config);
  const double sigma2 = scenario.noise_power_mw();
  EvalStats st;
  st.trials = trace.trials;
  for (int t = 0; t < trace.trials; ++t) {
    const ChannelSlice h = trace.slice(t);
    auto t0 = Clock::now();
    const PowerEnv env(h, scenario.rate_targets, sigma2, env_cfg);
    const EnvState s = greedy_rollout(policy, env);
    st.policy_ms += ms_since(t0);

    t0 = Clock::now();
    const MacSolution opt = min_pmac(scenario, h);
    st.minpmac_ms += ms_since(t0);

    st.mean_energy += s.p.sum();
    st.mean_rate += s.rates.sum();
    for (int u = 0; u < scenario.num_users; ++u)
      if (s.rates[u] < scenario.rate_targets[u] - 1e-6) {
        ++st.target_violations;
        break;
      }
    st.opt_mean_energy += opt.blended_powers().sum();
    st.opt_mean_rate += opt.blended_rates.sum();
  }
  const double n = trace.trials;
  st.mean_energy /= n;
  st.mean_rate /= n;
  st.opt_mean_energy /= n;
  st.opt_mean_rate /= n;
  st.policy_ms /= n;
  st.minpmac_ms /= n;
  st.efficiency_ratio = (st.mean_rate / st.mean_energy) / (st.opt_mean_rate / st.opt_mean_energy);
  st.energy_ratio = st.opt_mean_energy / st.mean_energy;
  st.rate_ratio = st.mean_rate / st.opt_mean_rate;
  return st;
}

}  // namespace macopt::drl
