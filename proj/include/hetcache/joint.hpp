#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetcache/analytic.hpp"
#include "hetcache/model.hpp"
#include "hetcache/water_filling.hpp"

namespace hetcache {

enum class Status { Converged, MaxIterations };

const char* to_string(Status s);

struct TraceRecord {
  int iteration = 0;
  double objective = 0.0;
  double max_change = 0.0;
  /// Tier updated in this iteration; empty when both tiers move together
  /// (gradient projection).
  std::optional<Tier> active_tier;
};

using OptimizerTrace = std::vector<TraceRecord>;

struct OptimizerResult {
  CachingMarginals t1;
  CachingMarginals t2;
  double objective = 0.0;
  OptimizerTrace trace;
  Status status = Status::MaxIterations;
};

struct GradientProjectionOptions {
  double stepsize = 1000.0;  // c in eps(t) = c / (2 + t^0.55)
  double tol = 1e-9;
  int max_iter = 10000;
};

struct BsumOptions {
  // Objective changes flatten out well before the iterate does; 1e-9 can
  // leave a projected-gradient residual of several 1e-6.
  double tol = 1e-12;
  int max_iter = 10000;
};

/// Default starting point T_{j,n} = K_j / N.
std::pair<CachingMarginals, CachingMarginals> uniform_start(const NetworkConfig& cfg);

/// Joint design by projected gradient ascent with diminishing step
/// eps(t) = c / (2 + t^0.55). Stops when no coordinate moves more than tol.
OptimizerResult gradient_projection(const NetworkConfig& cfg, const PopularityModel& pop,
                                    const std::pair<CachingMarginals, CachingMarginals>& init,
                                    const GradientProjectionOptions& opts = {});

/// Surrogate maximized by one block update of tier j around (t1, t2): the
/// tier's own utility kept exact, the other tier's utility linearized in T_j.
/// It touches q_inf at T_j = current and lies below it elsewhere.
double bsum_surrogate(const AsymptoticModel& model, Tier j, const Eigen::VectorXd& candidate,
                      const CachingMarginals& t1, const CachingMarginals& t2);

/// Unique maximizer of bsum_surrogate over the capped simplex of tier j.
CachingMarginals bsum_step(const NetworkConfig& cfg, const PopularityModel& pop, const CachingMarginals& t1,
                           const CachingMarginals& t2, Tier j);
CachingMarginals bsum_step(const AsymptoticModel& model, const CachingMarginals& t1, const CachingMarginals& t2,
                           Tier j);

/// Block successive approximation: alternates bsum_step over tier 1, tier 2,
/// ... until |q(t+2) - q(t)| <= tol. The objective never decreases.
OptimizerResult bsum(const NetworkConfig& cfg, const PopularityModel& pop,
                     const std::pair<CachingMarginals, CachingMarginals>& init, const BsumOptions& opts = {});

struct EqualCacheResult {
  OptimizerResult result;
  /// Optimal aggregate received-power weights R_n.
  Eigen::VectorXd weights;
  /// P1^(2/alpha) lambda1 + P2^(2/alpha) lambda2, the per-file cap on R_n.
  double weight_cap = 0.0;
  double multiplier = 0.0;
};

/// Global optimum when K1 == K2: q_inf depends on (T1, T2) only through
/// R_n = P1^(2/alpha) lambda1 T_{1,n} + P2^(2/alpha) lambda2 T_{2,n}, which is
/// solved by water-filling and mapped back with identical tier marginals.
/// Throws std::invalid_argument if K1 != K2.
EqualCacheResult equal_cache_optimal(const NetworkConfig& cfg, const PopularityModel& pop);

/// max_n |P_T(T + grad) - T| over both tiers; zero exactly at stationary points.
double projected_gradient_norm(const AsymptoticModel& model, const CachingMarginals& t1, const CachingMarginals& t2);

}  // namespace hetcache
