// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "macopt/errors.hpp"
#include "macopt/scenario.hpp"

using namespace macopt;

namespace {

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("three users, two antennas, 64 subcarriers at 80 MHz validate") {
    Scenario s = Scenario::case_study();
    CHECK(s.num_users == 3);
    CHECK(s.num_ap_antennas == 2);
    CHECK(s.num_subcarriers == 64);
    CHECK(s.bandwidth_hz == 80e6);
    CHECK(s.noise_psd_dbm_hz == -174.0);
    CHECK(validate(s).empty());
    CHECK_NOTHROW(require_valid(s));
  }

  TEST_CASE("zero users is named") {
    Scenario s = Scenario::case_study();
    s.num_users = 0;
    s.rate_targets.clear();
    s.energy_weights.clear();
    s.distances_m.clear();
    CHECK(has(validate(s), "num_users >= 1"));
    CHECK_THROWS_AS(require_valid(s), ConfigError);
  }

  TEST_CASE("negative weight is named") {
    Scenario s;
    s.num_users = 2;
    s.fill_defaults();
    s.energy_weights = {1.0, -1.0};
    const auto v = validate(s);
    CHECK(has(v, "energy_weights > 0"));
    CHECK(v.size() == 1);
  }

  TEST_CASE("every violation is listed") {
    Scenario s = Scenario::case_study();
    s.num_ap_antennas = 0;
    s.rate_targets[1] = std::numeric_limits<double>::quiet_NaN();
    s.distances_m[0] = -1.0;
    const auto v = validate(s);
    CHECK(has(v, "num_ap_antennas >= 1"));
    CHECK(has(v, "rate_targets finite and >= 0"));
    CHECK(has(v, "distances_m > 0"));
  }

  TEST_CASE("validate is idempotent and pure") {
    Scenario s = Scenario::case_study();
    s.energy_weights[2] = 0.0;
    const Scenario copy = s;
    CHECK(validate(s) == validate(s));
    CHECK(s == copy);
  }

  TEST_CASE("unit conversions") {
    CHECK(units::dbm_to_mw(0.0) == doctest::Approx(1.0));
    CHECK(units::dbm_to_mw(17.0) == doctest::Approx(50.1187).epsilon(1e-6));
    CHECK(units::mw_to_dbm(units::noise_power_mw(-174.0, 80e6)) == doctest::Approx(-94.969).epsilon(1e-5));
    // 8 bits per use at B/N = 1.25 MHz
    CHECK(units::bits_per_use_to_mbps(8.0, 80e6, 64) == doctest::Approx(10.0));
    CHECK(units::mbps_to_bits_per_use(10.0, 80e6, 64) == doctest::Approx(8.0));
    CHECK_THROWS_AS(units::dbm_to_mw(std::numeric_limits<double>::infinity()), DomainError);
    CHECK_THROWS_AS(units::mw_to_dbm(std::numeric_limits<double>::quiet_NaN()), DomainError);
    CHECK_THROWS_AS(units::noise_power_mw(-174.0, 0.0), DomainError);
  }

  TEST_CASE("dBm round trip over [-200, 200]") {
    double worst = 0.0;
    for (double dbm = -200.0; dbm <= 200.0; dbm += 0.37) {
      const double back = units::mw_to_dbm(units::dbm_to_mw(dbm));
      worst = std::max(worst, std::abs(back - dbm) / std::max(1.0, std::abs(dbm)));
    }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("noise power is PSD times subcarrier bandwidth") {
    Scenario s = Scenario::case_study();
    CHECK(s.noise_power_mw() == doctest::Approx(units::noise_power_mw(-174.0, 80e6 / 64)));
    CHECK(s.max_power_mw() == doctest::Approx(50.1187).epsilon(1e-6));
  }

  TEST_CASE("default targets split 500 Mbps equally") {
    const Scenario s = Scenario::desk_scale();
    REQUIRE(s.rate_targets.size() == 3);
    const double total = s.rate_targets[0] + s.rate_targets[1] + s.rate_targets[2];
    CHECK(units::bits_per_use_to_mbps(total, s.bandwidth_hz, s.num_subcarriers) == doctest::Approx(500.0));
    CHECK(s.rate_targets[0] == s.rate_targets[2]);
  }

  TEST_CASE("config round trip is bit exact") {
    Scenario s = Scenario::case_study();
    s.rate_targets = {0.1, 1.0 / 3.0, 7.25};
    s.energy_weights = {1.0, 2.5, 1e-3};
    s.distances_m = {1.5, 3.0, 9.999999999};
    s.snr_db = -7.123456789012345;
    s.seed = 0xfedcba9876543210ULL;
    const Scenario back = parse_config(write_config(s));
    CHECK(back == s);
  }

  TEST_CASE("config parsing") {
    const Scenario s = parse_config("# comment\nusers = 2\nrate_targets = 1, 2\nsnr_db = 5\n");
    CHECK(s.num_users == 2);
    CHECK(s.rate_targets == std::vector<double>{1.0, 2.0});
    CHECK(s.energy_weights == std::vector<double>{1.0, 1.0});
    CHECK(s.snr_db == 5.0);
    CHECK_THROWS_AS(parse_config("users = 2\nfrobnicate = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("users = two\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("users = 2\nusers = 3\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/macopt.cfg"), ConfigError);
  }

  TEST_CASE("rate vector") {
    RateVector r;
    r.r = {1.0, 2.5};
    CHECK(r.sum() == 3.5);
    CHECK(r.valid());
    r[1] = -1.0;
    CHECK_FALSE(r.valid());
  }
}
