#pragma once

#include <utility>

#include "hetcache/analytic.hpp"
#include "hetcache/joint.hpp"
#include "hetcache/model.hpp"

namespace hetcache {

/// Sufficient condition for best-response dynamics to converge:
/// prod_j max{1, |1 - theta1_j / theta3_j|} < 4, thetas at full load K_j.
struct ConvergenceCondition {
  double value = 0.0;
  bool holds = false;
};

struct GameOptions {
  double tol = 1e-9;
  int max_iter = 10000;
};

struct GameResult {
  CachingMarginals t1;
  CachingMarginals t2;
  double utility1 = 0.0;
  double utility2 = 0.0;
  OptimizerTrace trace;
  Status status = Status::MaxIterations;
  double condition_value = 0.0;
  bool condition_holds = false;
};

ConvergenceCondition convergence_condition(const NetworkConfig& cfg);

/// argmax over the capped simplex of tier j's own utility q_{j,inf}(., t_jbar).
CachingMarginals best_response(const NetworkConfig& cfg, const PopularityModel& pop, Tier j,
                               const CachingMarginals& t_jbar);
CachingMarginals best_response(const AsymptoticModel& model, Tier j, const CachingMarginals& t_jbar);

/// Alternating best responses (tier 1 first) until no coordinate of either
/// tier moved more than tol over the last two updates. Non-convergence is
/// reported through `status`.
GameResult best_response_dynamics(const NetworkConfig& cfg, const PopularityModel& pop,
                                  const std::pair<CachingMarginals, CachingMarginals>& init,
                                  const GameOptions& opts = {});

/// True when each tier's strategy is within tol (sup norm) of its best
/// response to the other's.
bool verify_ne(const NetworkConfig& cfg, const PopularityModel& pop, const CachingMarginals& t1,
               const CachingMarginals& t2, double tol);

}  // namespace hetcache
