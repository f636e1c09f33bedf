#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hetcache/model.hpp"

namespace hetcache {

using Rng = std::mt19937_64;

/// Square toroidal observation window of side `side` meters, with the
/// typical user at its center.
struct SimWindow {
  double side = 0.0;

  /// Side chosen so that every tier has at least 200 POAs on average.
  static SimWindow for_config(const NetworkConfig& cfg);
  double area() const { return side * side; }
};

/// A tier's caching design: either marginals (realized by the interval
/// method) or an explicit distribution over K-subsets.
using TierDesign = std::variant<CachingMarginals, CombinationDistribution>;

struct SimDesign {
  TierDesign tier1;
  TierDesign tier2;

  const TierDesign& tier(Tier j) const { return j == Tier::One ? tier1 : tier2; }
};

struct TrialOutcome {
  int file = 0;  // 0-based
  bool served = false;
  std::optional<Tier> tier;
  int load = 0;
  double sinr = 0.0;
  bool success = false;
};

struct StpEstimate {
  double mean = 0.0;
  double ci_low = 0.0;  // 95% normal approximation
  double ci_high = 0.0;
  std::int64_t trials = 0;
  std::int64_t successes = 0;
  std::uint64_t seed = 0;
  double q_tier1 = 0.0;  // successes served by tier 1, per trial
  double q_tier2 = 0.0;
  double window_side = 0.0;
};

/// Homogeneous PPP on the window, coordinates in [-L/2, L/2)^2.
Eigen::Matrix2Xd sample_ppp(const SimWindow& window, double density, Rng& rng);

/// Draws caches from a TierDesign; cheap to copy, immutable after construction.
class CacheSampler {
 public:
  explicit CacheSampler(const TierDesign& design);

  int cache_size() const { return k_; }
  int n_files() const { return n_; }
  /// Exactly K distinct 0-based file indices in ascending order, appended to `out`.
  void sample(Rng& rng, std::vector<int>& out) const;
  std::vector<int> sample(Rng& rng) const;

 private:
  int n_ = 0;
  int k_ = 0;
  // Marginals: cumulative interval ends; combinations: cumulative probabilities.
  std::vector<double> cum_;
  std::vector<std::vector<int>> combo_files_;
};

/// Interval method: file n owns [c_n, c_n + t_n) on [0, K); a single
/// u ~ U[0,1) picks the files covering u, u+1, ..., u+K-1.
std::vector<int> sample_cache(const CachingMarginals& t, Rng& rng);
std::vector<int> sample_cache(const CombinationDistribution& dist, Rng& rng);

/// Exact subset distribution induced by the interval method for `t`.
CombinationDistribution combinations_from_marginals_systematic(const CachingMarginals& t);

/// Among `candidates` (column indices of `pos`), the POA delivering the
/// largest long-term power P d^-alpha at the origin; -1 if there is none.
int strongest_poa(const Eigen::Matrix2Xd& pos, std::span<const double> power, double alpha,
                  std::span<const int> candidates);

/// One realization of the network seen by the typical user.
TrialOutcome simulate_trial(const NetworkConfig& cfg, const PopularityModel& pop, const SimDesign& design,
                            const SimWindow& window, Rng& rng);

/// Trial i draws from its own generator seeded by (seed, i), so the result
/// depends on (seed, trials) only, never on `workers`.
StpEstimate estimate_stp(const NetworkConfig& cfg, const PopularityModel& pop, const SimDesign& design,
                         const SimWindow& window, std::int64_t trials, std::uint64_t seed, int workers = 1);

/// Generator for trial `index` of a run seeded with `seed`.
Rng trial_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace hetcache
