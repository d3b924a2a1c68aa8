// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "macopt/errors.hpp"
#include "macopt/lagrangian.hpp"
#include "macopt/minpmac.hpp"
#include "macopt/oracle.hpp"
#include "macopt/simplex.hpp"
#include "support.hpp"

using namespace macopt;
using std::numbers::ln2;

namespace {

void check_solution_invariants(const MacSolution& m, std::span<const double> targets, std::span<const double> theta) {
  const double wsum = std::accumulate(m.timeshare_weights.begin(), m.timeshare_weights.end(), 0.0);
  CHECK(std::abs(wsum - 1.0) <= 1e-9);
  for (double w : m.timeshare_weights) CHECK(w >= 0.0);
  REQUIRE(m.orders.size() == m.vertex_allocations.size());
  REQUIRE(m.orders.size() == m.timeshare_weights.size());
  double energy = 0.0;
  std::vector<double> blended(targets.size(), 0.0);
  for (std::size_t k = 0; k < m.orders.size(); ++k) {
    energy += m.timeshare_weights[k] * m.vertex_allocations[k].weighted_energy(theta);
    for (std::size_t u = 0; u < targets.size(); ++u)
      blended[u] += m.timeshare_weights[k] * m.vertex_allocations[k].achieved_rates[u];
  }
  CHECK(std::abs(energy - m.total_weighted_energy) <= 1e-9 * std::max(1.0, energy));
  for (std::size_t u = 0; u < targets.size(); ++u) {
    CHECK(std::abs(blended[u] - m.blended_rates[u]) <= 1e-9 * std::max(1.0, blended[u]));
    if (m.converged) CHECK(m.blended_rates[u] >= targets[u] - 1e-6);
  }
}

}  // namespace

TEST_SUITE("minpmac") {
  TEST_CASE("inner optimum, single user above the noise floor") {
    const ChannelTrace t = make_scalar_trace({{1.0}});
    const std::vector<double> lambda{2 * ln2}, theta{1.0};
    const Allocation a = inner_lagrangian_opt(t.slice(0), lambda, theta, DecodingOrder::identity(1), 1.0);
    CHECK(a.p(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("inner optimum, single user below the noise floor") {
    const ChannelTrace t = make_scalar_trace({{1.0}});
    const std::vector<double> lambda{ln2}, theta{1.0};
    const Allocation a = inner_lagrangian_opt(t.slice(0), lambda, theta, DecodingOrder::identity(1), 1.0);
    CHECK(a.p(0, 0) == doctest::Approx(0.0));
  }

  TEST_CASE("inner optimum puts all power on the stronger tied user") {
    const ChannelTrace t = make_scalar_trace({{1.0}, {2.0}});
    const std::vector<double> lambda{2 * ln2, 2 * ln2}, theta{1.0, 1.0};
    const DecodingOrder o = ascending_lambda_order(lambda);
    CHECK(o.perm == std::vector<int>{0, 1});
    const Allocation a = inner_lagrangian_opt(t.slice(0), lambda, theta, o, 1.0);
    CHECK(a.p(0, 0) == doctest::Approx(0.0));
    CHECK(a.p(1, 0) == doctest::Approx(1.5).epsilon(1e-9));
    const double phi = lagrangian_value(t.slice(0), lambda, theta, o, a.p, 1.0);
    CHECK(phi == doctest::Approx(2.0 * std::log(4.0) - 1.5).epsilon(1e-9));
    // independent grid search
    double best = -1e300;
    PowerMatrix q(2, 1);
    for (int i = 0; i <= 300; ++i)
      for (int j = 0; j <= 300; ++j) {
        q << 0.01 * i, 0.01 * j;
        best = std::max(best, lagrangian_value(t.slice(0), lambda, theta, o, q, 1.0));
      }
    CHECK(best <= phi + 1e-12);
    CHECK(best >= phi - 1e-4);
  }

  TEST_CASE("inner optimum is stationary on random instances") {
    CounterRng rng(5);
    for (int i = 0; i < 20; ++i) {
      const ChannelTrace t = testing::unit_rayleigh(3, 2, 4, 40 + i);
      const auto lambda = testing::uniform_vector(rng, 3, 0.5, 5.0);
      const auto theta = testing::uniform_vector(rng, 3, 0.5, 1.5);
      const DecodingOrder o = ascending_lambda_order(lambda);
      const Allocation a = inner_lagrangian_opt(t.slice(0), lambda, theta, o, 0.3);
      CHECK(inner_stationarity(t.slice(0), lambda, theta, o, a.p, 0.3) <= 1e-8);
      CHECK(a.p.minCoeff() >= 0.0);
    }
  }

  TEST_CASE("inner solve rejects an order not ascending in lambda") {
    const ChannelTrace t = make_scalar_trace({{1.0}, {2.0}});
    const std::vector<double> lambda{3.0, 1.0}, theta{1.0, 1.0};
    CHECK_THROWS_AS(inner_lagrangian_opt(t.slice(0), lambda, theta, DecodingOrder{{0, 1}}, 1.0), ContractError);
  }

  TEST_CASE("single user closed form") {
    const ChannelTrace t = make_scalar_trace({{1.0}});
    const std::vector<double> b{2.0}, theta{1.0};
    const MacSolution m = min_pmac(t.slice(0), b, theta, 1.0);
    CHECK(m.converged);
    CHECK(m.total_weighted_energy == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(m.lambdas[0] == doctest::Approx(4 * ln2).epsilon(1e-4));
    CHECK(m.orders.size() == 1);
    CHECK(m.timeshare_weights == std::vector<double>{1.0});
    check_solution_invariants(m, b, theta);
  }

  TEST_CASE("asymmetric pair decodes the strong user first") {
    const ChannelTrace t = make_scalar_trace({{1.0}, {4.0}});
    const std::vector<double> b{1.0, 1.0}, theta{1.0, 1.0};
    const MacSolution m = min_pmac(t.slice(0), b, theta, 1.0);
    CHECK(m.converged);
    CHECK(m.total_weighted_energy == doctest::Approx(1.5).epsilon(1e-6));
    REQUIRE(m.orders.size() == 1);
    CHECK(m.orders[0].perm == std::vector<int>{1, 0});
    CHECK(m.vertex_allocations[0].p(0, 0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(m.vertex_allocations[0].p(1, 0) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(m.lambdas[1] < m.lambdas[0]);
    const MacSolution o = oracle_min_energy(t.slice(0), b, theta, 1.0);
    CHECK(o.total_weighted_energy == doctest::Approx(1.5).epsilon(1e-6));
    check_solution_invariants(m, b, theta);
  }

  TEST_CASE("symmetric pair ties and time-shares") {
    const ChannelTrace t = make_scalar_trace({{1.0}, {1.0}});
    const std::vector<double> b{1.0, 1.0}, theta{1.0, 1.0};
    const MacSolution m = min_pmac(t.slice(0), b, theta, 1.0);
    CHECK(m.converged);
    CHECK(std::abs(m.lambdas[0] - m.lambdas[1]) <= 1e-6 * (1 + std::max(m.lambdas[0], m.lambdas[1])));
    CHECK(m.total_weighted_energy == doctest::Approx(3.0).epsilon(1e-6));
    REQUIRE(m.orders.size() == 2);
    CHECK(m.timeshare_weights[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(m.timeshare_weights[1] == doctest::Approx(0.5).epsilon(1e-6));
    for (const auto& a : m.vertex_allocations) {
      CHECK(a.p(0, 0) == doctest::Approx(1.5).epsilon(1e-5));
      CHECK(a.p(1, 0) == doctest::Approx(1.5).epsilon(1e-5));
    }
    const MacSolution o = oracle_min_energy(t.slice(0), b, theta, 1.0);
    CHECK(o.total_weighted_energy == doctest::Approx(3.0).epsilon(1e-6));
    check_solution_invariants(m, b, theta);
  }

  TEST_CASE("zero channel with a positive target is infeasible") {
    const ChannelTrace t = make_scalar_trace({{1.0}, {0.0}});
    const std::vector<double> b{1.0, 1.0}, theta{1.0, 1.0};
    CHECK_THROWS_AS(min_pmac(t.slice(0), b, theta, 1.0), InfeasibleError);
    const std::vector<double> b0{1.0, 0.0};
    CHECK(min_pmac(t.slice(0), b0, theta, 1.0).total_weighted_energy == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("time-sharing LP examples") {
    const double hi = std::log2(4.0) - std::log2(2.5), lo = std::log2(2.5);
    const std::vector<Vertex> two{{RateVector(std::vector<double>{hi, lo}), 3.0}, {RateVector(std::vector<double>{lo, hi}), 3.0}};
    const std::vector<double> b{1.0, 1.0};
    const auto w = timeshare_lp(two, b);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-9));

    const std::vector<Vertex> one{{RateVector(std::vector<double>{1.5, 1.2}), 2.0}};
    CHECK(timeshare_lp(one, b) == std::vector<double>{1.0});
    const std::vector<Vertex> short_one{{RateVector(std::vector<double>{0.9, 1.2}), 2.0}};
    CHECK_THROWS_AS(timeshare_lp(short_one, b), InfeasibleError);
  }

  TEST_CASE("simplex basics") {
    // min x + 2y  s.t.  x + y >= 1,  x - y = 0.5
    LinearProgram lp;
    lp.c = {1.0, 2.0};
    lp.a_ge = {{1.0, 1.0}};
    lp.b_ge = {1.0};
    lp.a_eq = {{1.0, -1.0}};
    lp.b_eq = {0.5};
    const LpSolution s = solve_lp(lp);
    REQUIRE(s.status == LpSolution::Status::kOptimal);
    CHECK(s.x[0] == doctest::Approx(0.75));
    CHECK(s.x[1] == doctest::Approx(0.25));
    CHECK(s.objective == doctest::Approx(1.25));
    lp.a_eq = {{1.0, 1.0}};
    lp.b_eq = {-1.0};
    CHECK(solve_lp(lp).status == LpSolution::Status::kInfeasible);
  }

  TEST_CASE("tie clustering enumerates and caps orders") {
    const std::vector<double> lambda{1.0, 2.0, 1.0 + 1e-9, 2.0};
    const auto orders = tied_orders(lambda, 1e-6, 5040, 1);
    CHECK(orders.size() == 4);
    for (const auto& o : orders) {
      CHECK(std::set<int>{o.perm[0], o.perm[1]} == std::set<int>{0, 2});
      CHECK(std::set<int>{o.perm[2], o.perm[3]} == std::set<int>{1, 3});
    }
    bool sampled = false;
    const std::vector<double> flat(8, 1.0);
    const auto many = tied_orders(flat, 1e-6, 5040, 1, &sampled);
    CHECK(sampled);
    CHECK(many.size() == 5040);
    std::set<std::vector<int>> distinct;
    for (const auto& o : many) distinct.insert(o.perm);
    CHECK(distinct.size() == 5040);
  }

  TEST_CASE("oracle closed form and order count") {
    const ChannelTrace t = make_scalar_trace({{0.8}});
    const std::vector<double> b{1.7}, theta{1.0};
    const MacSolution o = oracle_min_energy(t.slice(0), b, theta, 0.5);
    CHECK(o.total_weighted_energy == doctest::Approx(0.5 * (std::pow(2.0, 1.7) - 1.0) / 0.8).epsilon(1e-8));
    const ChannelTrace t3 = testing::unit_rayleigh(3, 2, 1, 8);
    const std::vector<double> b3{1.0, 0.5, 1.5}, th3{1.0, 1.0, 1.0};
    CHECK(oracle_min_energy(t3.slice(0), b3, th3, 1.0).orders.size() == 6);
    const ChannelTrace big = testing::unit_rayleigh(5, 1, 1, 8);
    const std::vector<double> b5(5, 1.0), th5(5, 1.0);
    CHECK_THROWS_AS(oracle_min_energy(big.slice(0), b5, th5, 1.0), SizeError);
  }

  TEST_CASE("agrees with the oracle on small instances") {
    double worst = 0.0;
    for (int i = 0; i < 30; ++i) {
      const auto inst = testing::small_instance(i);
      const MacSolution m = min_pmac(inst.trace.slice(0), inst.targets, inst.theta, inst.sigma2);
      const MacSolution o = oracle_min_energy(inst.trace.slice(0), inst.targets, inst.theta, inst.sigma2);
      CHECK(m.converged);
      worst = std::max(worst, testing::rel_diff(m.total_weighted_energy, o.total_weighted_energy));
      check_solution_invariants(m, inst.targets, inst.theta);
    }
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("weak duality, gap and complementary slackness") {
    for (int i = 0; i < 15; ++i) {
      const ChannelTrace t = testing::unit_rayleigh(3, 2, 4, 600 + i);
      CounterRng rng(600 + i);
      const auto b = testing::uniform_vector(rng, 3, 0.5, 4.0);
      const auto theta = testing::uniform_vector(rng, 3, 0.5, 2.0);
      const MacSolution m = min_pmac(t.slice(0), b, theta, 0.2);
      REQUIRE(m.converged);
      // dual values carry the inner solver's error
      for (double d : m.dual_history) CHECK(d <= m.total_weighted_energy * (1 + 1e-9) + 1e-12);
      CHECK(m.dual_value <= m.total_weighted_energy * (1 + 1e-9) + 1e-12);
      CHECK(m.duality_gap <= std::max(1e-5 * m.total_weighted_energy, 1e-7));
      for (int u = 0; u < 3; ++u)
        CHECK(m.lambdas[u] * (b[u] - m.blended_rates[u]) <= 1e-5 * (1 + m.lambdas[u]));
      check_solution_invariants(m, b, theta);
    }
  }

  TEST_CASE("swapping two non-tied users never helps the Lagrangian") {
    CounterRng rng(77);
    for (int i = 0; i < 20; ++i) {
      const ChannelTrace t = testing::unit_rayleigh(3, 2, 3, 700 + i);
      const auto b = testing::uniform_vector(rng, 3, 0.5, 3.0);
      const std::vector<double> theta{1.0, 1.0, 1.0};
      const MacSolution m = min_pmac(t.slice(0), b, theta, 0.5);
      const DecodingOrder best = ascending_lambda_order(m.lambdas);
      for (int k = 0; k + 1 < 3; ++k) {
        const int a = best.perm[k], c = best.perm[k + 1];
        if (std::abs(m.lambdas[a] - m.lambdas[c]) <= 1e-6 * (1 + std::max(m.lambdas[a], m.lambdas[c]))) continue;
        DecodingOrder swapped = best;
        std::swap(swapped.perm[k], swapped.perm[k + 1]);
        // pointwise dominance at many powers implies dominance of the maxima
        for (int j = 0; j < 20; ++j) {
          PowerMatrix p(3, 3);
          for (int u = 0; u < 3; ++u)
            for (int n = 0; n < 3; ++n) p(u, n) = 4.0 * rng.uniform();
          if (j == 0) p = m.vertex_allocations[0].p;
          CHECK(lagrangian_value(t.slice(0), m.lambdas, theta, swapped, p, 0.5) <=
                lagrangian_value(t.slice(0), m.lambdas, theta, best, p, 0.5) + 1e-9);
        }
      }
    }
  }

  TEST_CASE("scaling every weight scales the prices") {
    const ChannelTrace t = testing::unit_rayleigh(3, 2, 2, 123);
    const std::vector<double> b{1.0, 2.0, 1.5}, theta{1.0, 0.7, 1.3};
    std::vector<double> theta3 = theta;
    for (double& x : theta3) x *= 3.0;
    const MacSolution a = min_pmac(t.slice(0), b, theta, 0.4);
    const MacSolution c = min_pmac(t.slice(0), b, theta3, 0.4);
    for (int u = 0; u < 3; ++u) CHECK(c.lambdas[u] == doctest::Approx(3.0 * a.lambdas[u]).epsilon(1e-3));
    CHECK(c.total_weighted_energy == doctest::Approx(3.0 * a.total_weighted_energy).epsilon(1e-5));
    const PowerMatrix pa = a.blended_powers(), pc = c.blended_powers();
    CHECK((pa - pc).cwiseAbs().maxCoeff() <= 1e-3 * std::max(1.0, pa.cwiseAbs().maxCoeff()));
  }

  TEST_CASE("desk-scale scenario solve") {
    const Scenario s = Scenario::desk_scale();
    const ChannelTrace t = scale_to_snr(generate(s, 3), s, 20.0);
    for (int k = 0; k < 3; ++k) {
      const MacSolution m = min_pmac(s, t.slice(k));
      CHECK(m.converged);
      check_solution_invariants(m, s.rate_targets, s.energy_weights);
    }
    const std::string dump = format_solution(min_pmac(s, t.slice(0)));
    CHECK(dump.find("lambdas") != std::string::npos);
    CHECK(dump.find("gap") != std::string::npos);
  }

  TEST_CASE("large user count falls back to the subgradient path") {
    std::vector<std::vector<double>> g;
    for (int u = 0; u < 13; ++u) g.push_back({0.5 + 0.1 * u});
    const ChannelTrace t = make_scalar_trace(g);
    const std::vector<double> b(13, 0.2), theta(13, 1.0);
    const MacSolution m = min_pmac(t.slice(0), b, theta, 1.0);
    for (int u = 0; u < 13; ++u) CHECK(m.blended_rates[u] >= b[u] - 1e-6);
    CHECK(m.duality_gap >= 0.0);
  }
}
