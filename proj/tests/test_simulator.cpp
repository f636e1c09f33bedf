#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "common.hpp"
#include "hetcache/analytic.hpp"
#include "hetcache/simulator.hpp"

using namespace hetcache;

namespace {

Eigen::VectorXd frequencies(const TierDesign& design, int n, int draws, std::uint64_t seed) {
  const CacheSampler sampler(design);
  Rng rng(seed);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  int malformed = 0;
  for (int i = 0; i < draws; ++i) {
    const auto c = sampler.sample(rng);
    const bool ok = static_cast<int>(c.size()) == sampler.cache_size() &&
                    std::set<int>(c.begin(), c.end()).size() == c.size() && std::is_sorted(c.begin(), c.end());
    malformed += !ok;
    for (int m : c) f[m] += 1.0;
  }
  CHECK(malformed == 0);
  return f / draws;
}

SimDesign uniform_design(const NetworkConfig& cfg) {
  return {CombinationDistribution::uniform(cfg.n_files, cfg.k1), CombinationDistribution::uniform(cfg.n_files, cfg.k2)};
}

}  // namespace

TEST_CASE("poisson point process") {
  const SimWindow w{100.0};
  Rng rng(1);
  CHECK(sample_ppp(w, 0.0, rng).cols() == 0);
  const double mean = 0.02 * w.area();
  double sum = 0.0, sq = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto p = sample_ppp(w, 0.02, rng);
    const double c = static_cast<double>(p.cols());
    sum += c;
    sq += c * c;
    if (i == 0 && p.cols() > 0) {
      CHECK(p.minCoeff() >= -50.0);
      CHECK(p.maxCoeff() < 50.0);
    }
  }
  const double m = sum / draws;
  const double var = sq / draws - m * m;
  CHECK(std::abs(m - mean) <= 3.0 * std::sqrt(mean / draws));
  CHECK(std::abs(var / mean - 1.0) <= 0.1);
}

TEST_CASE("interval-method cache sampling has exact marginals") {
  SUBCASE("unit marginal is forced") {
    const auto f = frequencies(CachingMarginals(Eigen::Vector3d(1.0, 0.5, 0.5), 2), 3, 100000, 2);
    CHECK(f[0] == 1.0);
    CHECK(std::abs(f[1] - 0.5) <= 0.01);
    CHECK(std::abs(f[2] - 0.5) <= 0.01);
  }
  SUBCASE("uniform") {
    const auto f = frequencies(CachingMarginals::uniform(10, 3), 10, 100000, 3);
    for (int n = 0; n < 10; ++n) CHECK(std::abs(f[n] - 0.3) <= 0.01);
  }
  SUBCASE("general marginals within binomial bands") {
    const Eigen::Vector3d t(0.9, 0.6, 0.5);
    const auto f = frequencies(CachingMarginals(t, 2), 3, 100000, 4);
    for (int n = 0; n < 3; ++n) CHECK(std::abs(f[n] - t[n]) <= 4.0 * std::sqrt(t[n] * (1 - t[n]) / 100000));
  }
  SUBCASE("files with zero probability are never drawn") {
    Eigen::VectorXd t(6);
    t << 0.0, 0.7, 0.0, 0.8, 0.5, 0.0;
    const auto f = frequencies(CachingMarginals(t, 2), 6, 20000, 5);
    CHECK(f[0] == 0.0);
    CHECK(f[2] == 0.0);
    CHECK(f[5] == 0.0);
  }
}

TEST_CASE("combination sampling") {
  using E = CombinationDistribution::Entry;
  const CombinationDistribution d(4, 2, {E{{0, 1}, 0.2}, E{{2, 3}, 0.5}, E{{1, 3}, 0.3}});
  const auto f = frequencies(d, 4, 100000, 6);
  const auto t = marginals_from_combinations(d);
  for (int n = 0; n < 4; ++n) CHECK(std::abs(f[n] - t[n]) <= 4.0 * std::sqrt(t[n] * (1 - t[n]) / 100000) + 1e-12);
}

TEST_CASE("systematic combinations reproduce the marginals") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = testing::random_marginals(12, 4, rng);
    const auto d = combinations_from_marginals_systematic(t);
    CHECK(d.entries().size() <= 13);
    CHECK((marginals_from_combinations(d).values() - t.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("association picks the strongest long-term power") {
  // POA 0: tier 1 at 300 m, P = 10; POA 1: tier 2 at 100 m, P = 1;
  // POA 2: tier 2 at 150 m, P = 1. With alpha = 4: 10/300^4 = 1.23e-9,
  // 1/100^4 = 1e-8, 1/150^4 = 1.98e-9.
  Eigen::Matrix2Xd pos(2, 3);
  pos << 300.0, 0.0, -150.0, 0.0, 100.0, 0.0;
  const std::vector<double> power{10.0, 1.0, 1.0};
  CHECK(strongest_poa(pos, power, 4.0, std::vector<int>{0, 1, 2}) == 1);
  CHECK(strongest_poa(pos, power, 4.0, std::vector<int>{0, 2}) == 2);
  CHECK(strongest_poa(pos, power, 4.0, std::vector<int>{0}) == 0);
  CHECK(strongest_poa(pos, power, 4.0, std::vector<int>{}) == -1);
  // At alpha = 3 the macro wins over the 150 m pico: 10/300^3 = 3.7e-7 > 1/150^3 = 2.96e-7.
  CHECK(strongest_poa(pos, power, 3.0, std::vector<int>{0, 2}) == 0);
}

TEST_CASE("trial outcomes") {
  const auto pop = PopularityModel::zipf(10, 1.0);
  const SimWindow w{8000.0};

  SUBCASE("files cached nowhere are never served") {
    auto cfg = testing::fig2_config();
    cfg.k1 = cfg.k2 = 1;
    Eigen::VectorXd t = Eigen::VectorXd::Zero(10);
    t[0] = 1.0;
    const SimDesign design{CachingMarginals(t, 1), CachingMarginals(t, 1)};
    Rng rng(9);
    for (int i = 0; i < 300; ++i) {
      const auto o = simulate_trial(cfg, pop, design, w, rng);
      CHECK(o.served == (o.file == 0));
      if (!o.served) CHECK_FALSE(o.success);
      if (o.served) CHECK(o.load == 1);
    }
  }
  SUBCASE("zero rate threshold always succeeds") {
    auto cfg = testing::fig2_config();
    cfg.tau = 0.0;
    const auto design = uniform_design(cfg);
    Rng rng(10);
    for (int i = 0; i < 200; ++i) {
      const auto o = simulate_trial(cfg, pop, design, w, rng);
      CHECK(o.served);
      CHECK(o.success);
    }
  }
  SUBCASE("load stays within the serving cache") {
    auto cfg = testing::fig2_config(120.0, 1e-4);
    const auto design = uniform_design(cfg);
    Rng rng(11);
    int above_one = 0;
    for (int i = 0; i < 300; ++i) {
      const auto o = simulate_trial(cfg, pop, design, w, rng);
      REQUIRE(o.served);
      CHECK(o.load >= 1);
      CHECK(o.load <= cfg.cache_size(*o.tier));
      above_one += o.load > 1;
      if (o.success) CHECK(o.sinr >= std::exp2(o.load * cfg.tau / cfg.w) - 1.0);
    }
    CHECK(above_one > 0);
  }
}

TEST_CASE("STP estimates") {
  const auto cfg = testing::fig2_config(120.0, 1e-5);
  const auto pop = PopularityModel::zipf(10, 1.0);
  const auto design = uniform_design(cfg);
  const auto w = SimWindow::for_config(cfg);
  CHECK(w.side == doctest::Approx(20000.0));

  SUBCASE("a single trial is 0 or 1") {
    const auto e = estimate_stp(cfg, pop, design, w, 1, 5);
    CHECK((e.mean == 0.0 || e.mean == 1.0));
  }
  SUBCASE("worker count does not change the result") {
    const auto a = estimate_stp(cfg, pop, design, w, 400, 77, 1);
    const auto b = estimate_stp(cfg, pop, design, w, 400, 77, 3);
    const auto c = estimate_stp(cfg, pop, design, w, 400, 77, 8);
    CHECK(a.successes == b.successes);
    CHECK(a.successes == c.successes);
    CHECK(a.q_tier1 == c.q_tier1);
    CHECK(a.ci_low <= a.mean);
    CHECK(a.mean <= a.ci_high);
  }
  SUBCASE("confidence interval shrinks like 1/sqrt(trials)") {
    const auto a = estimate_stp(cfg, pop, design, w, 2000, 1);
    const auto b = estimate_stp(cfg, pop, design, w, 4000, 2);
    const double ratio = (a.ci_high - a.ci_low) / (b.ci_high - b.ci_low);
    CHECK(std::abs(ratio - std::sqrt(2.0)) <= 0.15 * std::sqrt(2.0));
  }
  SUBCASE("doubling the window changes little") {
    const auto a = estimate_stp(cfg, pop, design, w, 3000, 3);
    const auto b = estimate_stp(cfg, pop, design, SimWindow{2.0 * w.side}, 3000, 4);
    CHECK(std::abs(a.mean - b.mean) <= (a.ci_high - a.ci_low) + (b.ci_high - b.ci_low));
  }
  SUBCASE("agrees with the analytic general STP") {
    const auto noisy = testing::fig2_config(100.0, 1e-5);
    const auto e = estimate_stp(noisy, pop, design, w, 20000, 2024);
    const auto q = stp_general(noisy, pop, CombinationDistribution::uniform(10, 3),
                               CombinationDistribution::uniform(10, 2));
    CHECK(e.ci_low <= q.q_total);
    CHECK(q.q_total <= e.ci_high);
    CHECK(e.q_tier1 + e.q_tier2 == doctest::Approx(e.mean));
  }
  SUBCASE("bad inputs") {
    CHECK_THROWS_AS(estimate_stp(cfg, pop, design, w, 0, 1), std::invalid_argument);
    const SimDesign wrong{CachingMarginals::uniform(10, 2), CachingMarginals::uniform(10, 2)};
    CHECK_THROWS_AS(estimate_stp(cfg, pop, wrong, w, 10, 1), std::invalid_argument);
  }
}
