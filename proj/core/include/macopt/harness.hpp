// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "macopt/channel.hpp"
#include "macopt/scenario.hpp"

namespace macopt {

enum class Method { kMinPmac, kIwf, kOma, kNoma, kMcNoma };
enum class Mode { kEnergy, kRate };

/// A solver and the problem it solves. Labels look like "oma-energy".
struct SolverSpec {
  Method method = Method::kMinPmac;
  Mode mode = Mode::kEnergy;

  std::string label() const;
  /// Throws ConfigError for unknown labels or unsupported pairs
  /// (minpmac is energy only, iwf is rate only).
  static SolverSpec parse(std::string_view label);
  friend bool operator==(const SolverSpec&, const SolverSpec&) = default;
};

/// minpmac-energy, oma-energy, noma-energy, mcnoma-energy,
/// iwf-rate, oma-rate, noma-rate, mcnoma-rate
std::vector<SolverSpec> all_solver_specs();
std::vector<SolverSpec> solver_specs(Mode mode);
/// Comma-separated labels, or "all". Bare ids expand: "minpmac" and "iwf" to
/// their only mode, "oma" / "noma" / "mcnoma" to both modes.
std::vector<SolverSpec> parse_solver_list(std::string_view text);

inline constexpr std::string_view kCsvHeader =
    "trial,scheme,snr_db,users,distance_m,sum_rate_mbps,total_energy_mw,converged,iters,wall_ms";

struct ResultRow {
  int trial = 0;
  std::string scheme;
  double snr_db = 0.0;
  int users = 0;
  double distance_m = 0.0;
  double sum_rate_mbps = 0.0;
  double total_energy_mw = 0.0;
  bool converged = false;
  int iters = 0;
  double wall_ms = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

struct RunOptions {
  int threads = 1;
  /// Fills wall_ms; off by default so output stays byte-reproducible.
  bool timing = false;
};

/// Per-user power budget (mW) of the rate-mode problems.
std::vector<double> rate_budgets(const Scenario& scenario);

/// One trial of one solver. Failures (infeasible, numerical) give a row with
/// converged = 0 and zero metrics rather than an exception.
ResultRow solve_trial(const SolverSpec& spec, const Scenario& scenario, const ChannelSlice& h,
                      std::span<const double> budgets, bool timing = false);

/// Rows for every trial and spec, ordered spec-major then by trial. Trials run
/// on `threads` workers; the rows do not depend on the worker count.
std::vector<ResultRow> run_point(std::span<const SolverSpec> specs, const Scenario& scenario,
                                 const ChannelTrace& trace, std::span<const double> budgets,
                                 const RunOptions& options = {});
std::vector<ResultRow> run_point(std::span<const SolverSpec> specs, const Scenario& scenario,
                                 const ChannelTrace& trace, const RunOptions& options = {});

struct Stats {
  double mean = 0.0;
  double std = 0.0;   ///< sample standard deviation
  double ci95 = 0.0;  ///< half-width, 1.96 std / sqrt(n)
  int count = 0;
};

/// Throws EmptyResultError on no samples.
Stats summarize(std::span<const double> values);

struct MonteCarloStats {
  std::vector<ResultRow> rows;
  Stats sum_rate_mbps;
  Stats total_energy_mw;
  int converged = 0;
  int failed = 0;
};

/// Runs one solver over every trial of `trace` and aggregates the converged
/// trials. Throws EmptyResultError when no trial converged.
MonteCarloStats monte_carlo(const SolverSpec& spec, const Scenario& scenario, const ChannelTrace& trace,
                            const RunOptions& options = {});
MonteCarloStats monte_carlo(const SolverSpec& spec, const Scenario& scenario, const ChannelTrace& trace,
                            std::span<const double> budgets, const RunOptions& options = {});

/// Statistics of one (scheme, sweep point) group.
struct PointSummary {
  std::string scheme;
  double snr_db = 0.0;
  int users = 0;
  double distance_m = 0.0;
  Stats sum_rate_mbps;
  Stats total_energy_mw;
  int converged = 0;
  int failed = 0;
};

/// Groups by (scheme, snr_db, users, distance_m) in first-seen order. Groups
/// without a converged row keep zero stats.
std::vector<PointSummary> aggregate(const ExperimentResult& result);

/// Distance at which the scenario SNR is pinned for generated traces.
inline constexpr double kReferenceDistanceM = 3.0;

/// Channel draws for one sweep point: generated from the scenario's seed and
/// shifted by one common factor so that a user at kReferenceDistanceM sees a
/// mean receive SNR of scenario.snr_db. Users at other distances keep their
/// relative path loss.
ChannelTrace point_trace(const Scenario& scenario, int trials, int threads = 1);

enum class Preset { kUsers, kDistance, kSnr };

/// "fig-users", "fig-distance", "fig-snr"; ConfigError otherwise.
Preset parse_preset(std::string_view name);
std::string preset_name(Preset preset);

struct ExperimentConfig {
  Scenario base = Scenario::desk_scale();
  int trials = 100;
  RunOptions run;
  /// Empty means every scheme the preset supports.
  std::vector<SolverSpec> schemes;
};

/// Scenario of a sweep point: `base` with `users` users at `distance_m`.
/// Per-user vectors are reset to defaults when the user count changes.
Scenario sweep_scenario(const Scenario& base, int users, double distance_m, double snr_db);

/// The sweep points of a preset, in run order.
std::vector<Scenario> preset_points(Preset preset, const Scenario& base);

/// fig-users: U = 2..8 at 3 m, rate mode, total budget max_power_mw split
/// equally. fig-distance: 1..10 m, exponent 4, energy and rate mode.
/// fig-snr: -10..50 dB in 5 dB steps, U = 3, L = 2, 3 m, all schemes.
ExperimentResult run_preset(Preset preset, const ExperimentConfig& config);

/// Budgets used by a preset at one of its points.
std::vector<double> preset_budgets(Preset preset, const Scenario& point);

/// Describes the budget and target mappings of a scenario.
std::string run_header(const Scenario& scenario);

std::string write_csv(const ExperimentResult& result);
/// Throws ParseError with the offending line number.
ExperimentResult parse_csv(std::string_view text);
void save_csv(const ExperimentResult& result, const std::string& path);
ExperimentResult load_csv(const std::string& path);

enum class Metric { kSumRate, kEnergy };

/// Self-contained SVG line chart: one polyline per scheme of the metric's
/// mode, mean with 95% CI bars over the varying sweep column. Throws
/// EmptyResultError when nothing is plottable.
std::string write_svg(const ExperimentResult& result, Metric metric);
void save_svg(const ExperimentResult& result, Metric metric, const std::string& path);

}  // namespace macopt
