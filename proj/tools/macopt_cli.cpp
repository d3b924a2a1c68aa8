// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

// macopt: channel generation, single solves, DRL training / evaluation and
// Monte Carlo sweeps.
//
// Exit codes: 0 ok, 1 other failure, 2 config or parse error, 3 infeasible,
// 4 no convergence.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "macopt/baselines.hpp"
#include "macopt/capacity.hpp"
#include "macopt/drl_train.hpp"
#include "macopt/errors.hpp"
#include "macopt/harness.hpp"
#include "macopt/minpmac.hpp"
#include "macopt/rng.hpp"

namespace {

using namespace macopt;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNoConvergence = 4;

struct NotConverged : Error {
  using Error::Error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out;
  std::string scheme;
  int threads = 1;
};

Scenario load_scenario(const Globals& g) {
  Scenario s = g.config.empty() ? Scenario::desk_scale() : load_config(g.config);
  if (g.seed) s.seed = *g.seed;
  require_valid(s);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw Error("write to '" + path + "' failed");
}

int cmd_gen_channel(const Globals& g, const std::string& fading, bool raw) {
  const Scenario s = load_scenario(g);
  if (!raw && fading != "rayleigh") throw ConfigError("--fading needs --raw");
  const int trials = g.trials.value_or(1);
  const ChannelTrace t =
      raw ? generate(s, trials, Fading::parse(fading), g.threads) : point_trace(s, trials, g.threads);
  write_text(g.out, write_trace(t));
  std::cerr << "wrote " << t.trials << " trial(s), mean receive snr "
            << format_double(10.0 * std::log10(mean_receive_snr(t, s))) << " dB\n";
  return 0;
}

int cmd_solve(const Globals& g, const std::string& channel, int trial, const std::string& dump) {
  const Scenario s = load_scenario(g);
  const ChannelTrace t = channel.empty() ? point_trace(s, trial + 1, g.threads) : load_trace(channel);
  if (trial < 0 || trial >= t.trials) throw ConfigError("--trial out of range");
  if (t.users != s.num_users || t.subcarriers != s.num_subcarriers || t.antennas != s.num_ap_antennas)
    throw ConfigError("channel trace does not match the scenario");
  const auto specs = parse_solver_list(g.scheme.empty() ? "minpmac" : g.scheme);
  if (g.scheme.find(',') != std::string::npos || g.scheme == "all")
    throw ConfigError("solve takes one scheme");
  // a bare baseline id means its energy mode
  const SolverSpec spec = specs.front();
  const ChannelSlice h = t.slice(trial);
  std::string text;
  bool converged = true;
  if (spec.method == Method::kMinPmac) {
    const MacSolution m = min_pmac(s, h);
    converged = m.converged;
    text = format_solution(m);
  } else {
    const std::vector<double> budgets = rate_budgets(s);
    Allocation a;
    if (spec.mode == Mode::kEnergy) {
      a = baseline_min_energy(spec.method == Method::kOma ? SchemeId::kOma
                              : spec.method == Method::kNoma ? SchemeId::kNoma
                                                             : SchemeId::kMcNoma,
                              s, h);
    } else if (spec.method == Method::kIwf) {
      IwfResult r = iwf_max_sumrate(h, budgets, s.noise_power_mw());
      converged = r.converged;
      a = std::move(r.allocation);
    } else {
      a = baseline_max_sumrate(spec.method == Method::kOma ? SchemeId::kOma
                               : spec.method == Method::kNoma ? SchemeId::kNoma
                                                              : SchemeId::kMcNoma,
                               s, h, budgets)
              .allocation;
    }
    text = "scheme " + spec.label() + "\nrates";
    for (double r : a.achieved_rates.r) text += ' ' + format_double(r);
    text += "\nenergy";
    for (double e : a.energy) text += ' ' + format_double(e);
    text += "\ntotal_energy " + format_double(a.total_energy()) + "\n";
  }
  if (!dump.empty()) write_text(dump, text);
  {
    const ResultRow row = solve_trial(spec, s, h, rate_budgets(s));
    std::printf("%s sum_rate_mbps=%s total_energy_mw=%s converged=%d iters=%d\n", spec.label().c_str(),
                format_double(row.sum_rate_mbps).c_str(), format_double(row.total_energy_mw).c_str(),
                row.converged ? 1 : 0, row.iters);
  }
  if (!converged) throw NotConverged(spec.label() + " did not converge");
  return 0;
}

int cmd_train(const Globals& g, int updates, const std::string& policy_out) {
  const Scenario s = load_scenario(g);
  drl::TrainConfig cfg;
  if (updates > 0) cfg.updates = updates;
  const ChannelTrace train = point_trace(s, g.trials.value_or(64), g.threads);
  const std::uint64_t seed = g.seed.value_or(drl::kDefaultTrainSeed);
  const auto res = drl::train(s, train, cfg, seed, [&](int u, double r) {
    if (u % 25 == 0) std::cerr << "update " << u << " mean reward " << format_double(r) << "\n";
  });
  const std::string path = !policy_out.empty() ? policy_out : !g.out.empty() ? g.out : "policy.txt";
  drl::save_policy(res.policy, path);
  std::cerr << "trained " << res.curve.size() << " updates" << (res.early_stopped ? " (plateau stop)" : "")
            << ", policy written to " << path << "\n";
  return 0;
}

int cmd_eval(const Globals& g, const std::string& policy_path) {
  Scenario s = load_scenario(g);
  // held-out draws: the training set uses the scenario seed itself
  s.seed = substream_seed(s.seed, 1);
  const drl::PolicyState policy = drl::load_policy(policy_path);
  const ChannelTrace eval = point_trace(s, g.trials.value_or(100), g.threads);
  const drl::EvalStats st = drl::evaluate(policy, s, eval, drl::TrainConfig{});
  std::string text;
  text += "trials " + std::to_string(st.trials) + "\n";
  text += "policy_energy_mw " + format_double(st.mean_energy) + "\n";
  text += "policy_rate_bits " + format_double(st.mean_rate) + "\n";
  text += "target_violations " + std::to_string(st.target_violations) + "\n";
  text += "minpmac_energy_mw " + format_double(st.opt_mean_energy) + "\n";
  text += "minpmac_rate_bits " + format_double(st.opt_mean_rate) + "\n";
  text += "efficiency_ratio " + format_double(st.efficiency_ratio) + "\n";
  text += "policy_ms " + format_double(st.policy_ms) + "\n";
  text += "minpmac_ms " + format_double(st.minpmac_ms) + "\n";
  write_text(g.out, text);
  return 0;
}

int cmd_experiment(const Globals& g, const std::string& preset_text, const std::string& svg, bool timing) {
  const Preset preset = parse_preset(preset_text);
  ExperimentConfig cfg;
  cfg.base = load_scenario(g);
  if (g.trials) cfg.trials = *g.trials;
  cfg.run.threads = g.threads;
  cfg.run.timing = timing;
  if (!g.scheme.empty()) cfg.schemes = parse_solver_list(g.scheme);
  std::cerr << "# preset " << preset_name(preset) << ", " << cfg.trials << " trials per point\n"
            << run_header(cfg.base);
  if (preset == Preset::kUsers) std::cerr << "# fig-users: total budget max_power_mw split equally\n";
  const ExperimentResult r = run_preset(preset, cfg);
  write_text(g.out, write_csv(r));
  if (!svg.empty()) {
    const bool rate = preset == Preset::kUsers;
    save_svg(r, rate ? Metric::kSumRate : Metric::kEnergy, svg);
  }
  return 0;
}

int cmd_plot(const Globals& g, const std::string& in, const std::string& metric) {
  if (metric != "rate" && metric != "energy") throw ConfigError("--metric is rate or energy");
  const ExperimentResult r = load_csv(in);
  const std::string svg = write_svg(r, metric == "rate" ? Metric::kSumRate : Metric::kEnergy);
  write_text(g.out, svg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"macopt: minimum-power multiple access solvers and experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "scenario file (key = value)");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--trials", g.trials, "channel realizations")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output path, '-' for stdout");
  app.add_option("--scheme", g.scheme, "scheme label(s), e.g. minpmac-energy or iwf-rate,oma-rate");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

  std::string fading = "rayleigh";
  bool raw = false;
  auto* gen = app.add_subcommand("gen-channel", "write a channel trace");
  gen->add_option("--fading", fading, "rayleigh or rician:<K dB> (with --raw)");
  gen->add_flag("--raw", raw, "skip the receive-SNR calibration");

  std::string channel;
  int trial = 0;
  std::string dump;
  auto* solve = app.add_subcommand("solve", "solve one channel realization");
  solve->add_option("--channel", channel, "trace file (default: generated from the config)");
  solve->add_option("--trial", trial, "trial index in the trace");
  solve->add_option("--dump-solution", dump, "write the full solution to a file ('-' for stdout)");

  int updates = 0;
  std::string policy_out;
  auto* train = app.add_subcommand("train-drl", "train the PPO power-control policy");
  train->add_option("--updates", updates, "PPO updates (default 500)");
  train->add_option("--policy-out", policy_out, "checkpoint path (default --out or policy.txt)");

  std::string policy_in;
  auto* eval = app.add_subcommand("eval-drl", "compare a policy against min_pmac");
  eval->add_option("--policy", policy_in, "checkpoint path")->required();

  std::string preset;
  std::string svg;
  bool timing = false;
  auto* exp = app.add_subcommand("experiment", "run a sweep preset and write CSV");
  exp->add_option("preset", preset, "fig-users, fig-distance or fig-snr")->required();
  exp->add_option("--svg", svg, "also write an SVG chart");
  exp->add_flag("--timing", timing, "record wall_ms (output no longer reproducible)");

  std::string csv_in;
  std::string metric = "rate";
  auto* plot = app.add_subcommand("plot", "render a result CSV as SVG");
  plot->add_option("csv", csv_in, "result CSV")->required();
  plot->add_option("--metric", metric, "rate or energy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_channel(g, fading, raw);
    if (*solve) return cmd_solve(g, channel, trial, dump);
    if (*train) return cmd_train(g, updates, policy_out);
    if (*eval) return cmd_eval(g, policy_in);
    if (*exp) return cmd_experiment(g, preset, svg, timing);
    if (*plot) return cmd_plot(g, csv_in, metric);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const NotConverged& e) {
    std::cerr << "not converged: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const EmptyResultError& e) {
    std::cerr << "no converged trials: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
