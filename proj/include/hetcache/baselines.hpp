#pragma once

#include <cstdint>
#include <variant>

#include <Eigen/Dense>

#include "hetcache/model.hpp"

namespace hetcache {

/// T_n = 1 for the K most popular files (ties go to the lower index).
CachingMarginals most_popular_marginals(const PopularityModel& pop, int cache_size);

/// Enumerates draw orders; needs K <= 3 or N <= 22.
struct IidExact {};
/// Empirical inclusion frequencies over `draws` simulated caches.
struct IidMonteCarlo {
  std::int64_t draws = 100000;
  std::uint64_t seed = 1;
};
/// Exponential-race integral, evaluated for every file at once; exact up
/// to quadrature error (about 1e-12) and usable at N in the hundreds.
struct IidQuadrature {};

using IidMethod = std::variant<IidExact, IidMonteCarlo, IidQuadrature>;

struct IidMarginals {
  CachingMarginals t;
  /// Per-file standard error (zero for the deterministic methods).
  Eigen::VectorXd std_error;
};

/// Inclusion probabilities when each POA fills its cache by K successive
/// popularity-proportional draws without replacement.
IidMarginals iid_popularity_marginals(const PopularityModel& pop, int cache_size, const IidMethod& method);

}  // namespace hetcache
