// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/drl_ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "macopt/errors.hpp"
#include "macopt/rng.hpp"

namespace macopt::drl {

void Trajectory::append(const Trajectory& other) {
  obs.insert(obs.end(), other.obs.begin(), other.obs.end());
  actions.insert(actions.end(), other.actions.begin(), other.actions.end());
  rewards.insert(rewards.end(), other.rewards.begin(), other.rewards.end());
  values.insert(values.end(), other.values.begin(), other.values.end());
  log_probs.insert(log_probs.end(), other.log_probs.begin(), other.log_probs.end());
  terminal.insert(terminal.end(), other.terminal.begin(), other.terminal.end());
  advantages.insert(advantages.end(), other.advantages.begin(), other.advantages.end());
  returns.insert(returns.end(), other.returns.begin(), other.returns.end());
}

Gae gae_compute(std::span<const double> rewards, std::span<const double> values, double discount, double lambda) {
  if (rewards.size() != values.size()) throw DimensionError("gae_compute: rewards and values differ in length");
  const std::size_t n = rewards.size();
  Gae g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next = t + 1 < n ? values[t + 1] : 0.0;
    const double delta = rewards[t] + discount * next - values[t];
    acc = delta + discount * lambda * acc;
    g.advantages[t] = acc;
    g.returns[t] = acc + values[t];
  }
  return g;
}

void gae_fill(Trajectory& batch, double discount, double lambda) {
  const std::size_t n = batch.size();
  batch.advantages.assign(n, 0.0);
  batch.returns.assign(n, 0.0);
  std::size_t start = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (!batch.terminal[t] && t + 1 < n) continue;
    const std::span<const double> r(batch.rewards.data() + start, t + 1 - start);
    const std::span<const double> v(batch.values.data() + start, t + 1 - start);
    const Gae g = gae_compute(r, v, discount, lambda);
    std::copy(g.advantages.begin(), g.advantages.end(), batch.advantages.begin() + static_cast<std::ptrdiff_t>(start));
    std::copy(g.returns.begin(), g.returns.end(), batch.returns.begin() + static_cast<std::ptrdiff_t>(start));
    start = t + 1;
  }
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = sd > 0 ? (a - mean) / sd : 0.0;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

double gaussian_log_prob(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std) {
  const Eigen::ArrayXd z = (x - mean).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array()).sum() - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

LossGrad ppo_loss_grad(const PolicyState& policy, const Trajectory& batch, std::span<const std::size_t> idx,
                       const PpoConfig& config) {
  LossGrad out;
  out.grad = Eigen::VectorXd::Zero(policy.params.size());
  if (idx.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(idx.size());
  const int act = policy.act_dim();
  const Eigen::VectorXd raw_ls = policy.log_std();
  const Eigen::VectorXd ls = raw_ls.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  const Eigen::ArrayXd inv_var = (-2.0 * ls.array()).exp();
  const double* actor_p = policy.params.data();
  const double* critic_p = policy.params.data() + policy.critic_offset();
  double* actor_g = out.grad.data();
  double* critic_g = out.grad.data() + policy.critic_offset();
  Eigen::VectorXd g_ls = Eigen::VectorXd::Zero(act);
  Mlp::Cache ca, cc;
  int clipped = 0;

  for (std::size_t i : idx) {
    const Eigen::VectorXd x = policy.norm.apply(batch.obs[i]);
    const Eigen::VectorXd mu = policy.actor.forward(actor_p, x, &ca);
    const double v = policy.critic.forward(critic_p, x, &cc)(0);
    const Eigen::VectorXd& a = batch.actions[i];
    const double logp = gaussian_log_prob(a, mu, ls);
    const double ratio = std::exp(logp - batch.log_probs[i]);
    const double adv = batch.advantages[i];
    const double unclipped = ratio * adv;
    const double clip_val = std::clamp(ratio, 1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
    out.surrogate += std::min(unclipped, clip_val) * inv_b;
    // d surrogate / d logp; zero when the clipped branch is the minimum
    double ds = 0.0;
    if (unclipped <= clip_val) {
      ds = unclipped;
    } else {
      ++clipped;
    }
    const Eigen::ArrayXd diff = (a - mu).array();
    const Eigen::VectorXd d_mu = (-ds * inv_b * diff * inv_var).matrix();
    policy.actor.backward(actor_p, ca, d_mu, actor_g);
    g_ls += (-ds * inv_b * (diff.square() * inv_var - 1.0)).matrix();

    const double err = v - batch.returns[i];
    out.value_loss += err * err * inv_b;
    Eigen::VectorXd d_v(1);
    d_v(0) = config.value_coef * 2.0 * err * inv_b;
    policy.critic.backward(critic_p, cc, d_v, critic_g);
  }
  out.entropy = (ls.array() + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e)).sum();
  g_ls.array() -= config.entropy_coef;
  for (int j = 0; j < act; ++j)
    if (raw_ls(j) < kLogStdMin || raw_ls(j) > kLogStdMax) g_ls(j) = 0.0;
  out.grad.segment(policy.log_std_offset(), act) = g_ls;
  out.loss = -out.surrogate + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
  out.clip_fraction = clipped * inv_b;
  return out;
}

double adam_step(PolicyState& policy, Eigen::VectorXd grad, const PpoConfig& config) {
  const double norm = grad.norm();
  if (config.max_grad_norm > 0 && norm > config.max_grad_norm) grad *= config.max_grad_norm / norm;
  ++policy.adam_step;
  const double t = static_cast<double>(policy.adam_step);
  policy.adam_m = config.adam_beta1 * policy.adam_m + (1.0 - config.adam_beta1) * grad;
  policy.adam_v = config.adam_beta2 * policy.adam_v + (1.0 - config.adam_beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.adam_beta1, t);
  const double c2 = 1.0 - std::pow(config.adam_beta2, t);
  policy.params.array() -=
      config.lr * (policy.adam_m.array() / c1) / ((policy.adam_v.array() / c2).sqrt() + config.adam_eps);
  const Eigen::Index o = policy.log_std_offset();
  const Eigen::Index k = policy.act_dim();
  policy.params.segment(o, k) = policy.params.segment(o, k).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return norm;
}

UpdateMetrics ppo_update(PolicyState& policy, const Trajectory& batch, const PpoConfig& config, std::uint64_t seed) {
  UpdateMetrics m;
  const std::size_t n = batch.size();
  if (n == 0) return m;
  const std::size_t mb = static_cast<std::size_t>(std::max(1, config.minibatch));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t s = 0; s < n; s += mb) {
      const std::span<const std::size_t> idx(order.data() + s, std::min(mb, n - s));
      LossGrad lg = ppo_loss_grad(policy, batch, idx, config);
      if (!std::isfinite(lg.loss) || !lg.grad.allFinite())
        throw NumericalError("ppo_update: non-finite loss at epoch " + std::to_string(epoch) + ", minibatch " +
                             std::to_string(s / mb) + " (surrogate " + std::to_string(lg.surrogate) +
                             ", value loss " + std::to_string(lg.value_loss) + ")");
      m.grad_norm = adam_step(policy, std::move(lg.grad), config);
      m.surrogate += lg.surrogate;
      m.value_loss += lg.value_loss;
      m.entropy += lg.entropy;
      m.clip_fraction += lg.clip_fraction;
      ++m.steps;
    }
  }
  const double k = 1.0 / m.steps;
  m.surrogate *= k;
  m.value_loss *= k;
  m.entropy *= k;
  m.clip_fraction *= k;
  if (!policy.finite()) throw CorruptionError("ppo_update: parameters became non-finite");
  return m;
}

}  // namespace macopt::drl
