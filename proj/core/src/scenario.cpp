// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "macopt/errors.hpp"

namespace macopt {

double RateVector::sum() const noexcept {
  return std::accumulate(r.begin(), r.end(), 0.0);
}

bool RateVector::valid() const noexcept {
  for (double v : r) {
    if (!std::isfinite(v) || v < 0.0) return false;
  }
  return true;
}

double Scenario::noise_power_mw() const {
  return units::noise_power_mw(noise_psd_dbm_hz, bandwidth_hz / num_subcarriers);
}

double Scenario::max_power_mw() const { return units::dbm_to_mw(max_power_dbm); }

void Scenario::fill_defaults() {
  const auto users = static_cast<std::size_t>(std::max(num_users, 0));
  if (energy_weights.empty()) energy_weights.assign(users, 1.0);
  if (distances_m.empty()) distances_m.assign(users, 3.0);
  if (rate_targets.empty() && users > 0 && num_subcarriers > 0 && bandwidth_hz > 0) {
    const double total = units::mbps_to_bits_per_use(kDefaultAggregateRateBps / 1e6,
                                                     bandwidth_hz, num_subcarriers);
    rate_targets.assign(users, total / static_cast<double>(users));
  }
}

Scenario Scenario::case_study() {
  Scenario s;
  s.fill_defaults();
  return s;
}

Scenario Scenario::desk_scale() {
  Scenario s;
  s.num_subcarriers = 8;
  s.fill_defaults();
  return s;
}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> out;
  if (s.num_users < 1) out.emplace_back("num_users >= 1");
  if (s.num_ap_antennas < 1) out.emplace_back("num_ap_antennas >= 1");
  if (s.num_subcarriers < 1) out.emplace_back("num_subcarriers >= 1");
  if (!(std::isfinite(s.bandwidth_hz) && s.bandwidth_hz > 0)) out.emplace_back("bandwidth_hz > 0");
  if (!std::isfinite(s.noise_psd_dbm_hz)) out.emplace_back("noise_psd_dbm_hz finite");
  if (!std::isfinite(s.max_power_dbm)) out.emplace_back("max_power_dbm finite");
  if (!std::isfinite(s.snr_db)) out.emplace_back("snr_db finite");
  if (!(std::isfinite(s.pathloss_exponent) && s.pathloss_exponent >= 0))
    out.emplace_back("pathloss_exponent >= 0");

  const auto users = static_cast<std::size_t>(std::max(s.num_users, 0));
  auto check_len = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != users) out.push_back(std::string(name) + " has length num_users");
  };
  check_len(s.rate_targets, "rate_targets");
  check_len(s.energy_weights, "energy_weights");
  check_len(s.distances_m, "distances_m");

  for (double b : s.rate_targets) {
    if (!std::isfinite(b) || b < 0) {
      out.emplace_back("rate_targets finite and >= 0");
      break;
    }
  }
  for (double t : s.energy_weights) {
    if (!std::isfinite(t) || t <= 0) {
      out.emplace_back("energy_weights > 0");
      break;
    }
  }
  for (double d : s.distances_m) {
    if (!std::isfinite(d) || d <= 0) {
      out.emplace_back("distances_m > 0");
      break;
    }
  }
  if (s.num_subcarriers >= 1 && s.bandwidth_hz > 0 && std::isfinite(s.noise_psd_dbm_hz)) {
    const double sigma2 = s.noise_power_mw();
    if (!(std::isfinite(sigma2) && sigma2 > 0)) out.emplace_back("noise power > 0");
  }
  return out;
}

void require_valid(const Scenario& s) {
  const auto v = validate(s);
  if (v.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& m : v) msg += " [" + m + "]";
  throw ConfigError(msg);
}

namespace units {
namespace {
void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite input");
}
}  // namespace

double dbm_to_mw(double dbm) {
  require_finite(dbm, "dbm_to_mw");
  return std::pow(10.0, dbm / 10.0);
}

double mw_to_dbm(double mw) {
  require_finite(mw, "mw_to_dbm");
  if (mw <= 0) throw DomainError("mw_to_dbm: power must be > 0");
  return 10.0 * std::log10(mw);
}

double noise_power_mw(double psd_dbm_hz, double bandwidth_hz) {
  require_finite(psd_dbm_hz, "noise_power_mw");
  require_finite(bandwidth_hz, "noise_power_mw");
  if (bandwidth_hz <= 0) throw DomainError("noise_power_mw: bandwidth must be > 0");
  return dbm_to_mw(psd_dbm_hz) * bandwidth_hz;
}

double bits_per_use_to_mbps(double bits, double bandwidth_hz, int subcarriers) {
  require_finite(bits, "bits_per_use_to_mbps");
  if (!(bandwidth_hz > 0) || subcarriers < 1) throw DomainError("bits_per_use_to_mbps: bad band");
  return bits * (bandwidth_hz / subcarriers) / 1e6;
}

double mbps_to_bits_per_use(double mbps, double bandwidth_hz, int subcarriers) {
  require_finite(mbps, "mbps_to_bits_per_use");
  if (!(bandwidth_hz > 0) || subcarriers < 1) throw DomainError("mbps_to_bits_per_use: bad band");
  return mbps * 1e6 / (bandwidth_hz / subcarriers);
}

}  // namespace units

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view token, double& out) {
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_scalar(std::string_view v, std::size_t line) {
  double x = 0;
  if (!parse_double(v, x)) throw ConfigError("line " + std::to_string(line) + ": bad number '" + std::string(v) + "'");
  return x;
}

std::int64_t parse_int(std::string_view v, std::size_t line) {
  std::int64_t x = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("line " + std::to_string(line) + ": bad integer '" + std::string(v) + "'");
  return x;
}

std::vector<double> parse_list(std::string_view v, std::size_t line) {
  std::vector<double> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(parse_scalar(trim(v.substr(0, comma)), line));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace

Scenario parse_config(std::string_view text) {
  static const std::set<std::string, std::less<>> known = {
      "users", "antennas", "subcarriers", "bandwidth_hz", "noise_psd_dbm_hz", "rate_targets",
      "energy_weights", "max_power_dbm", "snr_db", "distances_m", "pathloss_exponent", "seed"};

  Scenario s;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!known.contains(key))
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
    if (value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + std::string(key) + "'");

    if (key == "users") s.num_users = static_cast<int>(parse_int(value, line_no));
    else if (key == "antennas") s.num_ap_antennas = static_cast<int>(parse_int(value, line_no));
    else if (key == "subcarriers") s.num_subcarriers = static_cast<int>(parse_int(value, line_no));
    else if (key == "bandwidth_hz") s.bandwidth_hz = parse_scalar(value, line_no);
    else if (key == "noise_psd_dbm_hz") s.noise_psd_dbm_hz = parse_scalar(value, line_no);
    else if (key == "rate_targets") s.rate_targets = parse_list(value, line_no);
    else if (key == "energy_weights") s.energy_weights = parse_list(value, line_no);
    else if (key == "max_power_dbm") s.max_power_dbm = parse_scalar(value, line_no);
    else if (key == "snr_db") s.snr_db = parse_scalar(value, line_no);
    else if (key == "distances_m") s.distances_m = parse_list(value, line_no);
    else if (key == "pathloss_exponent") s.pathloss_exponent = parse_scalar(value, line_no);
    else if (key == "seed") {
      std::uint64_t seed = 0;
      auto res = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw ConfigError("line " + std::to_string(line_no) + ": bad seed");
      s.seed = seed;
    }
  }
  s.fill_defaults();
  return s;
}

Scenario load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string write_config(const Scenario& s) {
  std::ostringstream os;
  os << "users = " << s.num_users << "\n"
     << "antennas = " << s.num_ap_antennas << "\n"
     << "subcarriers = " << s.num_subcarriers << "\n"
     << "bandwidth_hz = " << format_double(s.bandwidth_hz) << "\n"
     << "noise_psd_dbm_hz = " << format_double(s.noise_psd_dbm_hz) << "\n"
     << "max_power_dbm = " << format_double(s.max_power_dbm) << "\n"
     << "snr_db = " << format_double(s.snr_db) << "\n"
     << "pathloss_exponent = " << format_double(s.pathloss_exponent) << "\n"
     << "seed = " << s.seed << "\n";
  if (!s.rate_targets.empty()) os << "rate_targets = " << join(s.rate_targets) << "\n";
  if (!s.energy_weights.empty()) os << "energy_weights = " << join(s.energy_weights) << "\n";
  if (!s.distances_m.empty()) os << "distances_m = " << join(s.distances_m) << "\n";
  return os.str();
}

void save_config(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config '" + path + "'");
  out << write_config(s);
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace macopt
