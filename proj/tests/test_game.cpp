#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "common.hpp"
#include "hetcache/game.hpp"

using namespace hetcache;
using testing::small_config;

TEST_CASE("convergence condition") {
  const auto cond = convergence_condition(testing::default_config());
  CHECK(cond.holds);
  CHECK(cond.value == doctest::Approx(1.0).epsilon(1e-12));
  auto zero = testing::default_config();
  zero.tau = 0.0;
  CHECK_THROWS_AS(convergence_condition(zero), std::domain_error);

  // A large rate threshold makes theta3 dominate theta1 and the factors grow.
  auto harsh = small_config(10, 3, 2);
  harsh.tau = 1e8;
  const auto h = convergence_condition(harsh);
  const auto t1 = theta_coeffs(harsh, Tier::One, 3);
  const auto t2 = theta_coeffs(harsh, Tier::Two, 2);
  CHECK(h.value == doctest::Approx(std::max(1.0, std::abs(1 - t1.theta1 / t1.theta3)) *
                                   std::max(1.0, std::abs(1 - t2.theta1 / t2.theta3))));
  CHECK(h.holds == (h.value < 4.0));
}

TEST_CASE("best response") {
  SUBCASE("symmetric inputs give uniform caching") {
    const auto cfg = small_config(6, 2, 3);
    const auto br = best_response(cfg, PopularityModel::zipf(6, 0.0), Tier::One, CachingMarginals::uniform(6, 3));
    for (int n = 0; n < 6; ++n) CHECK(br[n] == doctest::Approx(2.0 / 6).epsilon(1e-9));
  }
  SUBCASE("two files against a grid") {
    const auto cfg = small_config(2, 1, 1);
    const auto pop = PopularityModel::from_probabilities({0.7, 0.3});
    const AsymptoticModel model(cfg, pop);
    const CachingMarginals opp(Eigen::Vector2d(0.6, 0.4), 1);
    for (Tier j : {Tier::One, Tier::Two}) {
      const auto br = best_response(cfg, pop, j, opp);
      double best_x = 0.0, best_u = -1.0;
      for (int i = 0; i <= 10000; ++i) {
        const double u = model.tier_utility(j, Eigen::Vector2d(i * 1e-4, 1 - i * 1e-4), opp.values());
        if (u > best_u) {
          best_u = u;
          best_x = i * 1e-4;
        }
      }
      CHECK(std::abs(br[0] - best_x) <= 1e-4);
      CHECK((best_response(cfg, pop, j, opp).values() - br.values()).norm() == 0.0);
    }
  }
}

TEST_CASE("best-response dynamics") {
  const auto cfg = small_config(30, 6, 4);
  const auto pop = PopularityModel::zipf(30, 0.9);
  const auto base = best_response_dynamics(cfg, pop, uniform_start(cfg));
  REQUIRE(base.status == Status::Converged);
  CHECK(verify_ne(cfg, pop, base.t1, base.t2, 1e-6));
  const AsymptoticModel model(cfg, pop);
  CHECK(base.utility1 == doctest::Approx(model.tier_utility(Tier::One, base.t1.values(), base.t2.values())));
  CHECK(base.utility2 == doctest::Approx(model.tier_utility(Tier::Two, base.t2.values(), base.t1.values())));

  SUBCASE("unique limit from random starts") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
      const auto r = best_response_dynamics(
          cfg, pop, {testing::random_marginals(30, 6, rng), testing::random_marginals(30, 4, rng)});
      CHECK(r.status == Status::Converged);
      CHECK((r.t1.values() - base.t1.values()).cwiseAbs().maxCoeff() <= 1e-6);
      CHECK((r.t2.values() - base.t2.values()).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
  SUBCASE("starting at the equilibrium stops at once") {
    const auto r = best_response_dynamics(cfg, pop, {base.t1, base.t2});
    CHECK(r.status == Status::Converged);
    CHECK(r.trace.size() <= 3);
  }
  SUBCASE("closed form holds at the limit") {
    const auto br1 = best_response(model, Tier::One, base.t2);
    const auto br2 = best_response(model, Tier::Two, base.t1);
    CHECK((br1.values() - base.t1.values()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((br2.values() - base.t2.values()).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("perturbed equilibrium is not an equilibrium") {
    Eigen::VectorXd t = base.t1.values();
    int hi = -1, lo = -1;
    for (int n = 0; n < 30; ++n) {
      if (hi < 0 && t[n] <= 0.95) hi = n;
      else if (lo < 0 && t[n] >= 0.05) lo = n;
    }
    REQUIRE(hi >= 0);
    REQUIRE(lo >= 0);
    t[hi] += 0.05;
    t[lo] -= 0.05;
    CHECK_FALSE(verify_ne(cfg, pop, CachingMarginals(t, 6), base.t2, 1e-6));
  }
  SUBCASE("joint optimum is not an equilibrium and beats it") {
    const auto joint = bsum(cfg, pop, uniform_start(cfg), {1e-12, 10000});
    CHECK(joint.objective >= base.utility1 + base.utility2 - 1e-9);
    CHECK_FALSE(verify_ne(cfg, pop, joint.t1, joint.t2, 1e-6));
  }
}

TEST_CASE("two-file equilibrium matches a grid of mutual best responses") {
  const auto cfg = small_config(2, 1, 1);
  const auto pop = PopularityModel::from_probabilities({0.7, 0.3});
  const AsymptoticModel model(cfg, pop);
  const auto ne = best_response_dynamics(cfg, pop, uniform_start(cfg));
  REQUIRE(ne.status == Status::Converged);

  // Grid best-response maps, then the grid point closest to a fixed point.
  const int steps = 1000;
  auto grid_br = [&](Tier j, double opp) {
    double best_x = 0.0, best_u = -1.0;
    for (int i = 0; i <= steps; ++i) {
      const double x = double(i) / steps;
      const double u = model.tier_utility(j, Eigen::Vector2d(x, 1 - x), Eigen::Vector2d(opp, 1 - opp));
      if (u > best_u) {
        best_u = u;
        best_x = x;
      }
    }
    return best_x;
  };
  double best_gap = 1e9, fx = 0.0, fy = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double y = double(i) / steps;
    const double x = grid_br(Tier::One, y);
    const double gap = std::abs(grid_br(Tier::Two, x) - y);
    if (gap < best_gap) {
      best_gap = gap;
      fx = x;
      fy = y;
    }
  }
  CHECK(best_gap <= 1e-3);
  CHECK(std::abs(ne.t1[0] - fx) <= 2e-3);
  CHECK(std::abs(ne.t2[0] - fy) <= 2e-3);
}
