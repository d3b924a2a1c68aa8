// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "macopt/baselines.hpp"
#include "macopt/capacity.hpp"
#include "macopt/errors.hpp"
#include "macopt/minpmac.hpp"

namespace macopt {

namespace {

struct MethodName {
  Method method;
  std::string_view name;
};

constexpr MethodName kMethods[] = {{Method::kMinPmac, "minpmac"},
                                   {Method::kIwf, "iwf"},
                                   {Method::kOma, "oma"},
                                   {Method::kNoma, "noma"},
                                   {Method::kMcNoma, "mcnoma"}};

SchemeId scheme_of(Method m) {
  switch (m) {
    case Method::kOma: return SchemeId::kOma;
    case Method::kNoma: return SchemeId::kNoma;
    default: return SchemeId::kMcNoma;
  }
}

double mean_distance(const Scenario& s) {
  if (s.distances_m.empty()) return 0.0;
  return std::accumulate(s.distances_m.begin(), s.distances_m.end(), 0.0) / static_cast<double>(s.distances_m.size());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_int(std::string_view tok, T& out) {
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return !tok.empty() && res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

}  // namespace

std::string SolverSpec::label() const {
  std::string out;
  for (const auto& m : kMethods)
    if (m.method == method) out = m.name;
  return out + (mode == Mode::kEnergy ? "-energy" : "-rate");
}

SolverSpec SolverSpec::parse(std::string_view label) {
  const auto dash = label.rfind('-');
  if (dash == std::string_view::npos) throw ConfigError("unknown scheme '" + std::string(label) + "'");
  const std::string_view head = label.substr(0, dash);
  const std::string_view tail = label.substr(dash + 1);
  SolverSpec spec;
  if (tail == "energy") {
    spec.mode = Mode::kEnergy;
  } else if (tail == "rate") {
    spec.mode = Mode::kRate;
  } else {
    throw ConfigError("unknown scheme '" + std::string(label) + "'");
  }
  bool found = false;
  for (const auto& m : kMethods)
    if (m.name == head) {
      spec.method = m.method;
      found = true;
    }
  if (!found || (spec.method == Method::kMinPmac && spec.mode == Mode::kRate) ||
      (spec.method == Method::kIwf && spec.mode == Mode::kEnergy))
    throw ConfigError("unknown scheme '" + std::string(label) + "'");
  return spec;
}

std::vector<SolverSpec> solver_specs(Mode mode) {
  if (mode == Mode::kEnergy)
    return {{Method::kMinPmac, mode}, {Method::kOma, mode}, {Method::kNoma, mode}, {Method::kMcNoma, mode}};
  return {{Method::kIwf, mode}, {Method::kOma, mode}, {Method::kNoma, mode}, {Method::kMcNoma, mode}};
}

std::vector<SolverSpec> all_solver_specs() {
  auto out = solver_specs(Mode::kEnergy);
  const auto rate = solver_specs(Mode::kRate);
  out.insert(out.end(), rate.begin(), rate.end());
  return out;
}

std::vector<SolverSpec> parse_solver_list(std::string_view text) {
  text = trim(text);
  if (text == "all") return all_solver_specs();
  std::vector<SolverSpec> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    std::vector<SolverSpec> add;
    if (item == "minpmac") {
      add = {{Method::kMinPmac, Mode::kEnergy}};
    } else if (item == "iwf") {
      add = {{Method::kIwf, Mode::kRate}};
    } else if (item.find('-') == std::string_view::npos) {
      add = {SolverSpec::parse(std::string(item) + "-energy"), SolverSpec::parse(std::string(item) + "-rate")};
    } else {
      add = {SolverSpec::parse(item)};
    }
    for (const auto& spec : add)
      if (std::find(out.begin(), out.end(), spec) == out.end()) out.push_back(spec);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError("empty scheme list");
  return out;
}

std::vector<double> rate_budgets(const Scenario& scenario) {
  return std::vector<double>(static_cast<std::size_t>(scenario.num_users), scenario.max_power_mw());
}

ResultRow solve_trial(const SolverSpec& spec, const Scenario& s, const ChannelSlice& h,
                      std::span<const double> budgets, bool timing) {
  ResultRow row;
  row.scheme = spec.label();
  row.snr_db = s.snr_db;
  row.users = s.num_users;
  row.distance_m = mean_distance(s);
  double bits = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (spec.mode == Mode::kEnergy && spec.method == Method::kMinPmac) {
      const MacSolution m = min_pmac(s, h);
      bits = m.blended_rates.sum();
      row.total_energy_mw = m.blended_powers().sum();
      row.converged = m.converged;
      row.iters = m.iterations;
    } else if (spec.mode == Mode::kEnergy) {
      const Allocation a = baseline_min_energy(scheme_of(spec.method), s, h);
      bits = a.achieved_rates.sum();
      row.total_energy_mw = a.total_energy();
      row.converged = true;
    } else if (spec.method == Method::kIwf) {
      const IwfResult r = iwf_max_sumrate(h, budgets, s.noise_power_mw());
      bits = r.sum_rate;
      row.total_energy_mw = r.allocation.total_energy();
      row.converged = r.converged;
      row.iters = r.iterations;
    } else {
      const SumRateResult r = baseline_max_sumrate(scheme_of(spec.method), s, h, budgets);
      bits = r.sum_rate;
      row.total_energy_mw = r.allocation.total_energy();
      row.converged = true;
    }
  } catch (const InfeasibleError&) {
    row.converged = false;
  } catch (const NumericalError&) {
    row.converged = false;
  } catch (const DomainError&) {
    row.converged = false;
  }
  const auto t1 = std::chrono::steady_clock::now();
  row.sum_rate_mbps = units::bits_per_use_to_mbps(bits, s.bandwidth_hz, s.num_subcarriers);
  if (!row.converged || !std::isfinite(row.sum_rate_mbps) || !std::isfinite(row.total_energy_mw)) {
    row.converged = false;
    row.sum_rate_mbps = 0.0;
    row.total_energy_mw = 0.0;
  }
  if (timing) row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

std::vector<ResultRow> run_point(std::span<const SolverSpec> specs, const Scenario& s, const ChannelTrace& trace,
                                 std::span<const double> budgets, const RunOptions& options) {
  require_valid(s);
  if (trace.trials < 1) throw DimensionError("run_point: trace has no trials");
  if (trace.users != s.num_users || trace.subcarriers != s.num_subcarriers || trace.antennas != s.num_ap_antennas)
    throw DimensionError("run_point: trace does not match the scenario");
  if (budgets.size() != static_cast<std::size_t>(s.num_users))
    throw DimensionError("run_point: budgets need one entry per user");

  const int trials = trace.trials;
  const std::size_t ns = specs.size();
  std::vector<ResultRow> rows(ns * static_cast<std::size_t>(trials));
  auto work = [&](int t) {
    const ChannelSlice h = trace.slice(t);
    for (std::size_t k = 0; k < ns; ++k) {
      ResultRow r = solve_trial(specs[k], s, h, budgets, options.timing);
      r.trial = t;
      rows[k * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)] = std::move(r);
    }
  };

  const int workers = std::clamp(options.threads, 1, trials);
  if (workers == 1) {
    for (int t = 0; t < trials; ++t) work(t);
    return rows;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int t = next++; t < trials; t = next++) {
        try {
          work(t);
        } catch (...) {
          const std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

std::vector<ResultRow> run_point(std::span<const SolverSpec> specs, const Scenario& s, const ChannelTrace& trace,
                                 const RunOptions& options) {
  return run_point(specs, s, trace, rate_budgets(s), options);
}

Stats summarize(std::span<const double> v) {
  if (v.empty()) throw EmptyResultError("summarize: no samples");
  Stats st;
  st.count = static_cast<int>(v.size());
  st.mean = std::accumulate(v.begin(), v.end(), 0.0) / st.count;
  if (st.count > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - st.mean) * (x - st.mean);
    st.std = std::sqrt(ss / (st.count - 1));
    st.ci95 = 1.96 * st.std / std::sqrt(static_cast<double>(st.count));
  }
  return st;
}

MonteCarloStats monte_carlo(const SolverSpec& spec, const Scenario& s, const ChannelTrace& trace,
                            std::span<const double> budgets, const RunOptions& options) {
  MonteCarloStats out;
  out.rows = run_point(std::span(&spec, 1), s, trace, budgets, options);
  std::vector<double> rate, energy;
  for (const auto& r : out.rows) {
    if (!r.converged) {
      ++out.failed;
      continue;
    }
    ++out.converged;
    rate.push_back(r.sum_rate_mbps);
    energy.push_back(r.total_energy_mw);
  }
  if (out.converged == 0)
    throw EmptyResultError("monte_carlo: all " + std::to_string(out.failed) + " trials of " + spec.label() + " failed");
  out.sum_rate_mbps = summarize(rate);
  out.total_energy_mw = summarize(energy);
  return out;
}

MonteCarloStats monte_carlo(const SolverSpec& spec, const Scenario& s, const ChannelTrace& trace,
                            const RunOptions& options) {
  return monte_carlo(spec, s, trace, rate_budgets(s), options);
}

std::vector<PointSummary> aggregate(const ExperimentResult& result) {
  struct Group {
    PointSummary summary;
    std::vector<double> rate, energy;
  };
  std::vector<Group> groups;
  for (const auto& r : result.rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.summary.scheme == r.scheme && g.summary.snr_db == r.snr_db && g.summary.users == r.users &&
             g.summary.distance_m == r.distance_m;
    });
    if (it == groups.end()) {
      Group g;
      g.summary.scheme = r.scheme;
      g.summary.snr_db = r.snr_db;
      g.summary.users = r.users;
      g.summary.distance_m = r.distance_m;
      groups.push_back(std::move(g));
      it = groups.end() - 1;
    }
    if (r.converged) {
      ++it->summary.converged;
      it->rate.push_back(r.sum_rate_mbps);
      it->energy.push_back(r.total_energy_mw);
    } else {
      ++it->summary.failed;
    }
  }
  std::vector<PointSummary> out;
  out.reserve(groups.size());
  for (auto& g : groups) {
    if (!g.rate.empty()) {
      g.summary.sum_rate_mbps = summarize(g.rate);
      g.summary.total_energy_mw = summarize(g.energy);
    }
    out.push_back(std::move(g.summary));
  }
  return out;
}

ChannelTrace point_trace(const Scenario& s, int trials, int threads) {
  require_valid(s);
  const ChannelTrace raw = generate(s, trials, Fading::rayleigh(), threads);
  const double ref_snr = s.max_power_mw() * std::pow(kReferenceDistanceM, -s.pathloss_exponent) / s.noise_power_mw();
  return scale_by_db(raw, s.snr_db - 10.0 * std::log10(ref_snr));
}

Preset parse_preset(std::string_view name) {
  if (name == "fig-users") return Preset::kUsers;
  if (name == "fig-distance") return Preset::kDistance;
  if (name == "fig-snr") return Preset::kSnr;
  throw ConfigError("unknown preset '" + std::string(name) + "' (fig-users, fig-distance, fig-snr)");
}

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::kUsers: return "fig-users";
    case Preset::kDistance: return "fig-distance";
    case Preset::kSnr: return "fig-snr";
  }
  return "";
}

Scenario sweep_scenario(const Scenario& base, int users, double distance_m, double snr_db) {
  Scenario s = base;
  if (s.num_users != users) {
    s.num_users = users;
    s.rate_targets.clear();
    s.energy_weights.clear();
  }
  s.distances_m.assign(static_cast<std::size_t>(std::max(users, 0)), distance_m);
  s.snr_db = snr_db;
  s.fill_defaults();
  return s;
}

std::vector<Scenario> preset_points(Preset preset, const Scenario& base) {
  std::vector<Scenario> out;
  switch (preset) {
    case Preset::kUsers:
      for (int u = 2; u <= 8; ++u) out.push_back(sweep_scenario(base, u, kReferenceDistanceM, base.snr_db));
      break;
    case Preset::kDistance: {
      Scenario b = base;
      b.pathloss_exponent = 4.0;
      for (int d = 1; d <= 10; ++d) out.push_back(sweep_scenario(b, b.num_users, d, b.snr_db));
      break;
    }
    case Preset::kSnr: {
      Scenario b = base;
      b.num_ap_antennas = 2;
      for (int snr = -10; snr <= 50; snr += 5) out.push_back(sweep_scenario(b, 3, kReferenceDistanceM, snr));
      break;
    }
  }
  return out;
}

std::vector<double> preset_budgets(Preset preset, const Scenario& point) {
  if (preset == Preset::kUsers)
    return std::vector<double>(static_cast<std::size_t>(point.num_users), point.max_power_mw() / point.num_users);
  return rate_budgets(point);
}

ExperimentResult run_preset(Preset preset, const ExperimentConfig& config) {
  if (config.trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<SolverSpec> specs = preset == Preset::kUsers ? solver_specs(Mode::kRate) : all_solver_specs();
  if (!config.schemes.empty()) {
    std::erase_if(specs, [&](const SolverSpec& s) {
      return std::find(config.schemes.begin(), config.schemes.end(), s) == config.schemes.end();
    });
    if (specs.empty()) throw ConfigError("no requested scheme applies to " + preset_name(preset));
  }
  ExperimentResult out;
  for (const Scenario& point : preset_points(preset, config.base)) {
    const ChannelTrace trace = point_trace(point, config.trials, config.run.threads);
    auto rows = run_point(specs, point, trace, preset_budgets(preset, point), config.run);
    out.rows.insert(out.rows.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  return out;
}

std::string run_header(const Scenario& s) {
  const double total_bits = std::accumulate(s.rate_targets.begin(), s.rate_targets.end(), 0.0);
  std::ostringstream os;
  os << "# users " << s.num_users << ", antennas " << s.num_ap_antennas << ", subcarriers " << s.num_subcarriers
     << ", snr " << format_double(s.snr_db) << " dB at " << format_double(kReferenceDistanceM) << " m, seed "
     << s.seed << "\n"
     << "# rate mode: per-user budget " << format_double(s.max_power_mw()) << " mW ("
     << format_double(s.max_power_dbm) << " dBm)\n"
     << "# energy mode: per-user targets";
  for (double b : s.rate_targets) os << ' ' << format_double(b);
  os << " bits/use, aggregate "
     << format_double(units::bits_per_use_to_mbps(total_bits, s.bandwidth_hz, s.num_subcarriers)) << " Mbps\n";
  return os.str();
}

std::string write_csv(const ExperimentResult& result) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : result.rows) {
    out += std::to_string(r.trial);
    out += ',' + r.scheme;
    out += ',' + format_double(r.snr_db);
    out += ',' + std::to_string(r.users);
    out += ',' + format_double(r.distance_m);
    out += ',' + format_double(r.sum_rate_mbps);
    out += ',' + format_double(r.total_energy_mw);
    out += r.converged ? ",1" : ",0";
    out += ',' + std::to_string(r.iters);
    out += ',' + format_double(r.wall_ms);
    out += '\n';
  }
  return out;
}

ExperimentResult parse_csv(std::string_view text) {
  ExperimentResult out;
  std::size_t line_no = 0;
  bool header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header) {
      if (line != kCsvHeader) throw ParseError("expected header '" + std::string(kCsvHeader) + "'", line_no);
      header = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (;;) {
      const auto c = rest.find(',');
      f.push_back(rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (f.size() != 10) throw ParseError("expected 10 fields, got " + std::to_string(f.size()), line_no);
    ResultRow r;
    int conv = 0;
    r.scheme = std::string(f[1]);
    if (!parse_int(f[0], r.trial) || r.scheme.empty() || !parse_double(f[2], r.snr_db) || !parse_int(f[3], r.users) ||
        !parse_double(f[4], r.distance_m) || !parse_double(f[5], r.sum_rate_mbps) ||
        !parse_double(f[6], r.total_energy_mw) || !parse_int(f[7], conv) || (conv != 0 && conv != 1) ||
        !parse_int(f[8], r.iters) || !parse_double(f[9], r.wall_ms))
      throw ParseError("malformed row", line_no);
    r.converged = conv == 1;
    out.rows.push_back(std::move(r));
  }
  if (!header) throw ParseError("missing header", line_no);
  return out;
}

void save_csv(const ExperimentResult& result, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << write_csv(result);
  if (!os) throw Error("write to '" + path + "' failed");
}

ExperimentResult load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace macopt
