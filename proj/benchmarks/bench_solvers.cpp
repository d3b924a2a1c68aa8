// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include "macopt/baselines.hpp"
#include "macopt/capacity.hpp"
#include "macopt/drl_train.hpp"
#include "macopt/harness.hpp"
#include "macopt/minpmac.hpp"

namespace {

using namespace macopt;

constexpr int kTrials = 16;

struct Fixture {
  Scenario s = sweep_scenario(Scenario::desk_scale(), 3, kReferenceDistanceM, 20.0);
  ChannelTrace trace = point_trace(s, kTrials);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_MinPmac(benchmark::State& state) {
  const auto& f = fixture();
  int t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(min_pmac(f.s, f.trace.slice(t)));
    t = (t + 1) % kTrials;
  }
}
BENCHMARK(BM_MinPmac)->Unit(benchmark::kMillisecond);

void BM_BaselineEnergy(benchmark::State& state) {
  const auto& f = fixture();
  const auto scheme = static_cast<SchemeId>(state.range(0));
  state.SetLabel(scheme_name(scheme));
  int t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(baseline_min_energy(scheme, f.s, f.trace.slice(t)));
    t = (t + 1) % kTrials;
  }
}
BENCHMARK(BM_BaselineEnergy)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_IwfSumRate(benchmark::State& state) {
  const auto& f = fixture();
  const auto budgets = rate_budgets(f.s);
  int t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iwf_max_sumrate(f.trace.slice(t), budgets, f.s.noise_power_mw()));
    t = (t + 1) % kTrials;
  }
}
BENCHMARK(BM_IwfSumRate)->Unit(benchmark::kMicrosecond);

void BM_SubsetCapacity(benchmark::State& state) {
  const auto& f = fixture();
  const ChannelSlice h = f.trace.slice(0);
  const PowerMatrix p = PowerMatrix::Constant(f.s.num_users, f.s.num_subcarriers, 1e-3);
  for (auto _ : state)
    benchmark::DoNotOptimize(subset_capacity(h, p, all_users(f.s.num_users), f.s.noise_power_mw()));
}
BENCHMARK(BM_SubsetCapacity);

void BM_PolicyRollout(benchmark::State& state) {
  const auto& f = fixture();
  drl::TrainConfig cfg;
  const auto policy = drl::initial_policy(f.s, cfg, drl::kDefaultTrainSeed);
  drl::EnvConfig env_cfg = cfg.env;
  env_cfg.p_max_mw = f.s.max_power_mw();
  int t = 0;
  for (auto _ : state) {
    const drl::PowerEnv env(f.trace.slice(t), f.s.rate_targets, f.s.noise_power_mw(), env_cfg);
    benchmark::DoNotOptimize(drl::greedy_rollout(policy, env));
    t = (t + 1) % kTrials;
  }
}
BENCHMARK(BM_PolicyRollout)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
