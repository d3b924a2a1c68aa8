// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "macopt/baselines.hpp"
#include "macopt/errors.hpp"
#include "macopt/minpmac.hpp"
#include "support.hpp"

using namespace macopt;

namespace {

void check_meets(const Allocation& a, std::span<const double> b) {
  for (std::size_t u = 0; u < b.size(); ++u) CHECK(a.achieved_rates[u] >= b[u] - 1e-6);
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("OMA energy with two flat subcarriers") {
    const ChannelTrace t = make_scalar_trace({{1.0, 1.0}, {1.0, 1.0}});
    const std::vector<double> b{1.0, 1.0}, theta{1.0, 1.0};
    const Allocation a = baseline_min_energy(SchemeId::kOma, t.slice(0), b, theta, 1.0);
    CHECK(a.total_energy() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(a.energy[0] == doctest::Approx(1.0).epsilon(1e-9));
    // each user owns exactly one subcarrier
    CHECK((a.p(0, 0) == 0.0) != (a.p(0, 1) == 0.0));
    CHECK((a.p(0, 0) == 0.0) == (a.p(1, 1) == 0.0));
    check_meets(a, b);
  }

  TEST_CASE("NOMA sequential closed form") {
    const ChannelTrace t = make_scalar_trace({{1.0}, {4.0}});
    const std::vector<double> b{1.0, 1.0}, theta{1.0, 1.0};
    const Allocation a = baseline_min_energy(SchemeId::kNoma, t.slice(0), b, theta, 1.0);
    CHECK(a.p(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(a.p(1, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(a.total_energy() == doctest::Approx(1.5).epsilon(1e-8));
    const Allocation m = baseline_min_energy(SchemeId::kMcNoma, t.slice(0), b, theta, 1.0);
    CHECK(m.total_energy() == doctest::Approx(1.5).epsilon(1e-6));
  }

  TEST_CASE("NOMA power is flat across subcarriers") {
    const ChannelTrace t = testing::unit_rayleigh(3, 2, 6, 31);
    const std::vector<double> b{2.0, 1.0, 3.0}, theta{1.0, 1.0, 1.0};
    const Allocation a = baseline_min_energy(SchemeId::kNoma, t.slice(0), b, theta, 0.5);
    for (int u = 0; u < 3; ++u)
      CHECK((a.p.row(u).array() - a.p(u, 0)).abs().maxCoeff() <= 1e-12 * (1 + a.p(u, 0)));
    check_meets(a, b);
  }

  TEST_CASE("MC-NOMA costs at least the optimum on a frequency-selective pair") {
    for (int i = 0; i < 10; ++i) {
      const ChannelTrace t = testing::unit_rayleigh(2, 1, 4, 90 + i);
      const std::vector<double> b{2.0, 3.0}, theta{1.0, 1.0};
      const Allocation mc = baseline_min_energy(SchemeId::kMcNoma, t.slice(0), b, theta, 0.3);
      const MacSolution opt = min_pmac(t.slice(0), b, theta, 0.3);
      CHECK(opt.total_weighted_energy <= mc.weighted_energy(theta) + 1e-6);
      check_meets(mc, b);
    }
  }

  TEST_CASE("energy dominance chain at desk scale") {
    const Scenario s = Scenario::desk_scale();
    const ChannelTrace t = scale_to_snr(generate(s, 12, Fading::rayleigh(), 4), s, 20.0);
    for (int k = 0; k < t.trials; ++k) {
      const double e_opt = min_pmac(s, t.slice(k)).total_weighted_energy;
      const Allocation mc = baseline_min_energy(SchemeId::kMcNoma, s, t.slice(k));
      const Allocation no = baseline_min_energy(SchemeId::kNoma, s, t.slice(k));
      const Allocation om = baseline_min_energy(SchemeId::kOma, s, t.slice(k));
      const double e_mc = mc.weighted_energy(s.energy_weights);
      const double e_no = no.weighted_energy(s.energy_weights);
      CHECK(e_opt <= e_mc * (1 + 1e-6) + 1e-6);
      CHECK(e_mc <= e_no * (1 + 1e-6) + 1e-6);
      CHECK(e_opt <= om.weighted_energy(s.energy_weights) * (1 + 1e-6) + 1e-6);
      check_meets(mc, s.rate_targets);
      check_meets(no, s.rate_targets);
      check_meets(om, s.rate_targets);
    }
  }

  TEST_CASE("sum-rate examples") {
    const ChannelTrace one = make_scalar_trace({{1.0}, {1.0}});
    const std::vector<double> budget{1.0, 1.0};
    const SumRateResult n = baseline_max_sumrate(SchemeId::kNoma, one.slice(0), budget, 1.0);
    CHECK(n.sum_rate == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
    const ChannelTrace two = make_scalar_trace({{1.0, 1.0}, {1.0, 1.0}});
    const SumRateResult o = baseline_max_sumrate(SchemeId::kOma, two.slice(0), budget, 1.0);
    CHECK(o.sum_rate == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(o.idle_users.empty());
  }

  TEST_CASE("budgets are exhausted and IWF dominates") {
    const Scenario s = Scenario::desk_scale();
    const ChannelTrace t = scale_to_snr(generate(s, 10), s, 20.0);
    const std::vector<double> budgets(3, s.max_power_mw());
    for (int k = 0; k < t.trials; ++k) {
      const double iwf = iwf_max_sumrate(t.slice(k), budgets, s.noise_power_mw()).sum_rate;
      for (SchemeId id : {SchemeId::kOma, SchemeId::kNoma, SchemeId::kMcNoma}) {
        const SumRateResult r = baseline_max_sumrate(id, s, t.slice(k), budgets);
        CHECK(r.sum_rate <= iwf + 1e-9 * (1 + iwf));
        for (int u = 0; u < 3; ++u) {
          if (std::find(r.idle_users.begin(), r.idle_users.end(), u) != r.idle_users.end()) continue;
          CHECK(r.allocation.energy[u] == doctest::Approx(budgets[u]).epsilon(1e-9));
        }
      }
    }
  }

  TEST_CASE("MC-NOMA beats flat NOMA on average") {
    const Scenario s = Scenario::desk_scale();
    const ChannelTrace t = scale_to_snr(generate(s, 100, Fading::rayleigh(), 4), s, 10.0);
    const std::vector<double> budgets(3, s.max_power_mw());
    double mc = 0.0, no = 0.0;
    for (int k = 0; k < t.trials; ++k) {
      mc += baseline_max_sumrate(SchemeId::kMcNoma, s, t.slice(k), budgets).sum_rate;
      no += baseline_max_sumrate(SchemeId::kNoma, s, t.slice(k), budgets).sum_rate;
    }
    CHECK(mc >= no);
  }

  TEST_CASE("OMA rates are single-user water-filling rates") {
    const ChannelTrace t = testing::unit_rayleigh(2, 2, 4, 17);
    const std::vector<double> budget{2.0, 3.0};
    const SumRateResult r = baseline_max_sumrate(SchemeId::kOma, t.slice(0), budget, 0.5);
    double expect = 0.0;
    for (int u = 0; u < 2; ++u)
      for (int n = 0; n < 4; ++n) {
        // one user active on n, so the rate is log2(1 + p g / sigma2)
        if (r.allocation.p(u, n) > 0.0) {
          CHECK(r.allocation.p(1 - u, n) == 0.0);
          expect += std::log2(1.0 + r.allocation.p(u, n) * t.slice(0).gain(u, n) / 0.5);
        }
      }
    CHECK(r.sum_rate == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("OMA with fewer subcarriers than users time-shares") {
    const ChannelTrace t = make_scalar_trace({{1.0}, {1.0}, {1.0}});
    const std::vector<double> b{0.5, 0.5, 0.5}, theta{1.0, 1.0, 1.0};
    const Eigen::MatrixXd tau = oma_assignment(t.slice(0), {true, true, true});
    CHECK(tau.sum() == doctest::Approx(1.0));
    CHECK(tau(0, 0) == doctest::Approx(1.0 / 3.0));
    const Allocation a = baseline_min_energy(SchemeId::kOma, t.slice(0), b, theta, 1.0);
    check_meets(a, b);
  }

  TEST_CASE("zero channel with a positive target is infeasible") {
    const ChannelTrace t = make_scalar_trace({{1.0, 1.0}, {0.0, 0.0}});
    const std::vector<double> b{1.0, 1.0}, theta{1.0, 1.0};
    for (SchemeId id : {SchemeId::kOma, SchemeId::kNoma, SchemeId::kMcNoma})
      CHECK_THROWS_AS(baseline_min_energy(id, t.slice(0), b, theta, 1.0), InfeasibleError);
  }

  TEST_CASE("scheme names") {
    CHECK(parse_scheme("oma") == SchemeId::kOma);
    CHECK(parse_scheme("noma") == SchemeId::kNoma);
    CHECK(parse_scheme("mcnoma") == SchemeId::kMcNoma);
    CHECK(scheme_name(SchemeId::kMcNoma) == "mcnoma");
    CHECK_THROWS_AS(parse_scheme("cdma"), ConfigError);
  }
}
