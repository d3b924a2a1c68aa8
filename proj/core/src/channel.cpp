// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/channel.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "macopt/errors.hpp"
#include "macopt/rng.hpp"

namespace macopt {

double ChannelSlice::total_gain(int u) const {
  double g = 0.0;
  for (int n = 0; n < subcarriers_; ++n) g += gain(u, n);
  return g;
}

ChannelTrace::ChannelTrace(int u, int l, int n, int t)
    : users(u), antennas(l), subcarriers(n), trials(t) {
  if (u < 0 || l < 0 || n < 0 || t < 0) throw DimensionError("negative trace dimension");
  data.assign(static_cast<std::size_t>(u) * l * n * t, cdouble{});
}

bool ChannelTrace::consistent() const {
  if (users < 0 || antennas < 0 || subcarriers < 0 || trials < 0) return false;
  if (data.size() != static_cast<std::size_t>(users) * antennas * subcarriers * trials) return false;
  for (const auto& v : data) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

bool ChannelTrace::same_values(const ChannelTrace& o) const {
  if (users != o.users || antennas != o.antennas || subcarriers != o.subcarriers ||
      trials != o.trials || data.size() != o.data.size())
    return false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(data[i].real()) != std::bit_cast<std::uint64_t>(o.data[i].real()) ||
        std::bit_cast<std::uint64_t>(data[i].imag()) != std::bit_cast<std::uint64_t>(o.data[i].imag()))
      return false;
  }
  return true;
}

ChannelTrace make_trace(const std::vector<std::vector<std::vector<cdouble>>>& gains) {
  const int users = static_cast<int>(gains.size());
  if (users == 0) throw DimensionError("make_trace: no users");
  const int subcarriers = static_cast<int>(gains[0].size());
  if (subcarriers == 0) throw DimensionError("make_trace: no subcarriers");
  const int antennas = static_cast<int>(gains[0][0].size());
  ChannelTrace t(users, antennas, subcarriers, 1);
  for (int u = 0; u < users; ++u) {
    if (static_cast<int>(gains[u].size()) != subcarriers) throw DimensionError("make_trace: ragged subcarriers");
    for (int n = 0; n < subcarriers; ++n) {
      if (static_cast<int>(gains[u][n].size()) != antennas) throw DimensionError("make_trace: ragged antennas");
      for (int l = 0; l < antennas; ++l) t.at(0, u, n, l) = gains[u][n][l];
    }
  }
  return t;
}

ChannelTrace make_scalar_trace(const std::vector<std::vector<double>>& power_gain) {
  std::vector<std::vector<std::vector<cdouble>>> g(power_gain.size());
  for (std::size_t u = 0; u < power_gain.size(); ++u) {
    for (double x : power_gain[u]) {
      if (x < 0) throw DomainError("make_scalar_trace: negative power gain");
      g[u].push_back({cdouble(std::sqrt(x), 0.0)});
    }
  }
  return make_trace(g);
}

std::string Fading::name() const {
  if (kind == Kind::kRayleigh) return "rayleigh";
  return "rician:" + format_double(k_factor_db);
}

Fading Fading::parse(const std::string& text) {
  if (text == "rayleigh") return rayleigh();
  if (text.rfind("rician:", 0) == 0) {
    double k = 0;
    if (!parse_double(text.substr(7), k)) throw ConfigError("bad Rician K-factor in '" + text + "'");
    return rician(k);
  }
  throw ConfigError("unknown fading '" + text + "' (expected rayleigh or rician:<k_db>)");
}

namespace {

void generate_trial(ChannelTrace& trace, const Scenario& s, const Fading& fading, int trial) {
  CounterRng rng(substream_seed(s.seed, static_cast<std::uint64_t>(trial)));
  const double k_lin = fading.kind == Fading::Kind::kRician ? std::pow(10.0, fading.k_factor_db / 10.0) : 0.0;
  const double los_amp = std::sqrt(k_lin / (k_lin + 1.0));
  const double nlos_amp = std::sqrt(1.0 / (k_lin + 1.0));
  for (int u = 0; u < trace.users; ++u) {
    const double amp = std::pow(s.distances_m[u], -s.pathloss_exponent / 2.0);
    for (int n = 0; n < trace.subcarriers; ++n) {
      for (int l = 0; l < trace.antennas; ++l) {
        // CN(0, 1): independent real/imag parts with variance 1/2 each.
        const double re = rng.normal() * std::numbers::sqrt2 / 2.0;
        const double im = rng.normal() * std::numbers::sqrt2 / 2.0;
        cdouble h(re * nlos_amp, im * nlos_amp);
        if (k_lin > 0.0) {
          const double phase = 2.0 * std::numbers::pi * rng.uniform();
          h += los_amp * cdouble(std::cos(phase), std::sin(phase));
        }
        trace.at(trial, u, n, l) = amp * h;
      }
    }
  }
}

}  // namespace

ChannelTrace generate(const Scenario& s, int trials, Fading fading, int threads) {
  require_valid(s);
  if (trials < 1) throw ConfigError("generate: trials must be >= 1");
  ChannelTrace trace(s.num_users, s.num_ap_antennas, s.num_subcarriers, trials);
  trace.generator = fading.name();
  trace.seed = s.seed;
  trace.pathloss_exponent = s.pathloss_exponent;

  threads = std::max(1, std::min(threads, trials));
  if (threads == 1) {
    for (int t = 0; t < trials; ++t) generate_trial(trace, s, fading, t);
    return trace;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int t = w; t < trials; t += threads) generate_trial(trace, s, fading, t);
    });
  }
  return trace;
}

std::string write_trace(const ChannelTrace& t) {
  if (!t.consistent()) throw DomainError("write_trace: inconsistent or non-finite trace");
  std::string out;
  out += "MACOPT-CHAN v1\n";
  out += "U=" + std::to_string(t.users) + " L=" + std::to_string(t.antennas) +
         " N=" + std::to_string(t.subcarriers) + " trials=" + std::to_string(t.trials) + "\n";
  out += "# generator=" + t.generator + " seed=" + std::to_string(t.seed) +
         " pathloss_exponent=" + format_double(t.pathloss_exponent) + "\n";
  for (int tr = 0; tr < t.trials; ++tr) {
    for (int u = 0; u < t.users; ++u) {
      for (int n = 0; n < t.subcarriers; ++n) {
        out += std::to_string(u);
        out += ' ';
        out += std::to_string(n);
        for (int l = 0; l < t.antennas; ++l) {
          const auto h = t.at(tr, u, n, l);
          out += ' ';
          out += format_double(h.real());
          out += ' ';
          out += format_double(h.imag());
        }
        out += '\n';
      }
    }
  }
  return out;
}

void save_trace(const ChannelTrace& trace, const std::string& path) {
  const auto text = write_trace(trace);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tok;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const auto b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) tok.push_back(line.substr(b, i - b));
  }
  return tok;
}

int parse_header_field(std::string_view tok, std::string_view key, std::size_t line) {
  if (tok.substr(0, key.size()) != key || tok.size() == key.size())
    throw ParseError("malformed header: expected " + std::string(key) + "<int>", line);
  int v = 0;
  auto res = std::from_chars(tok.data() + key.size(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v < 0)
    throw ParseError("malformed header: bad value for " + std::string(key), line);
  return v;
}

void apply_metadata(ChannelTrace& t, std::string_view comment) {
  for (auto tok : split_ws(comment)) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    if (key == "generator") {
      t.generator = std::string(val);
    } else if (key == "seed") {
      std::from_chars(val.data(), val.data() + val.size(), t.seed);
    } else if (key == "pathloss_exponent") {
      parse_double(val, t.pathloss_exponent);
    }
  }
}

}  // namespace

ChannelTrace parse_trace(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const auto nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  auto strip = [](std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    return s;
  };
  if (lines.empty() || strip(lines[0]) != "MACOPT-CHAN v1") throw ParseError("malformed header: expected 'MACOPT-CHAN v1'", 1);
  if (lines.size() < 2) throw ParseError("malformed header: missing dimension line", 2);
  const auto dims = split_ws(lines[1]);
  if (dims.size() != 4) throw ParseError("malformed header: expected 'U=<int> L=<int> N=<int> trials=<int>'", 2);
  ChannelTrace t(parse_header_field(dims[0], "U=", 2), parse_header_field(dims[1], "L=", 2),
                 parse_header_field(dims[2], "N=", 2), parse_header_field(dims[3], "trials=", 2));

  std::size_t li = 2;
  auto next_data_line = [&]() -> std::string_view {
    while (li < lines.size()) {
      const auto s = strip(lines[li]);
      if (s.empty()) {
        ++li;
        continue;
      }
      if (s.front() == '#') {
        apply_metadata(t, s.substr(1));
        ++li;
        continue;
      }
      return s;
    }
    return {};
  };

  for (int tr = 0; tr < t.trials; ++tr) {
    for (int u = 0; u < t.users; ++u) {
      for (int n = 0; n < t.subcarriers; ++n) {
        const auto line = next_data_line();
        const std::size_t line_no = li + 1;
        if (line.empty())
          throw ParseError("dimension mismatch: trial block " + std::to_string(tr + 1) + " of " +
                               std::to_string(t.trials) + " is missing or truncated",
                           line_no);
        const auto tok = split_ws(line);
        if (tok.size() != static_cast<std::size_t>(2 + 2 * t.antennas))
          throw ParseError("dimension mismatch: expected " + std::to_string(2 + 2 * t.antennas) +
                               " fields, found " + std::to_string(tok.size()),
                           line_no);
        int uu = -1, nn = -1;
        auto r1 = std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), uu);
        auto r2 = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), nn);
        if (r1.ec != std::errc() || r1.ptr != tok[0].data() + tok[0].size() || r2.ec != std::errc() ||
            r2.ptr != tok[1].data() + tok[1].size())
          throw ParseError("non-numeric index token", line_no);
        if (uu != u || nn != n)
          throw ParseError("dimension mismatch: expected entry u=" + std::to_string(u) + " n=" +
                               std::to_string(n) + " of trial block " + std::to_string(tr + 1),
                           line_no);
        for (int l = 0; l < t.antennas; ++l) {
          double re = 0, im = 0;
          if (!parse_double(tok[2 + 2 * l], re) || !parse_double(tok[3 + 2 * l], im))
            throw ParseError("non-numeric value token", line_no);
          if (!std::isfinite(re) || !std::isfinite(im)) throw ParseError("non-finite value", line_no);
          t.at(tr, u, n, l) = cdouble(re, im);
        }
        ++li;
      }
    }
  }
  if (!next_data_line().empty())
    throw ParseError("dimension mismatch: trailing data after " + std::to_string(t.trials) + " trial blocks", li + 1);
  return t;
}

ChannelTrace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

double mean_receive_snr(const ChannelTrace& t, const Scenario& s) {
  if (t.data.empty()) throw DomainError("mean_receive_snr: empty trace");
  double acc = 0.0;
  for (const auto& h : t.data) acc += std::norm(h);
  const double entries = static_cast<double>(t.trials) * t.users * t.subcarriers;
  const double mean_gain = acc / entries / t.antennas;
  return s.max_power_mw() * mean_gain / s.noise_power_mw();
}

ChannelTrace scale_to_snr(const ChannelTrace& trace, const Scenario& s, double target_snr_db) {
  if (!std::isfinite(target_snr_db)) throw DomainError("scale_to_snr: non-finite target");
  const double current = mean_receive_snr(trace, s);
  if (!(current > 0) || !std::isfinite(current)) throw DomainError("scale_to_snr: all-zero trace");
  const double amp = std::sqrt(std::pow(10.0, target_snr_db / 10.0) / current);
  ChannelTrace out = trace;
  for (auto& h : out.data) h *= amp;
  return out;
}

ChannelTrace scale_by_db(const ChannelTrace& trace, double delta_db) {
  if (!std::isfinite(delta_db)) throw DomainError("scale_by_db: non-finite delta");
  const double amp = std::pow(10.0, delta_db / 20.0);
  ChannelTrace out = trace;
  for (auto& h : out.data) h *= amp;
  return out;
}

}  // namespace macopt
