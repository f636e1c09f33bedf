#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hetcache {

/// One of the two POA classes. Tier::One is conventionally the sparse,
/// high-power tier (macro), Tier::Two the dense one.
enum class Tier : int { One = 1, Two = 2 };

constexpr Tier other(Tier j) { return j == Tier::One ? Tier::Two : Tier::One; }
constexpr int tier_index(Tier j) { return static_cast<int>(j) - 1; }

/// Physical-layer parameters and cache sizes. Densities are per m^2,
/// powers and noise in watts, bandwidth in Hz, rate threshold in bit/s.
/// Only tau/w enters the analysis, so any consistent units work.
struct NetworkConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_u = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double alpha = 4.0;
  double w = 0.0;
  double tau = 0.0;
  double n0 = 0.0;
  int n_files = 0;
  int k1 = 0;
  int k2 = 0;

  double sigma1() const { return p1 / p2; }
  double sigma2() const { return p2 / p1; }
  /// 2/alpha, the exponent that shows up everywhere in the PPP formulas.
  double delta() const { return 2.0 / alpha; }

  double density(Tier j) const { return j == Tier::One ? lambda1 : lambda2; }
  double power(Tier j) const { return j == Tier::One ? p1 : p2; }
  int cache_size(Tier j) const { return j == Tier::One ? k1 : k2; }
  /// Power of the other tier relative to tier j (sigma of the other tier).
  double relative_power_of_other(Tier j) const { return power(other(j)) / power(j); }
};

/// File request probabilities a_1..a_N (stored 0-based).
class PopularityModel {
 public:
  /// a_n proportional to n^-gamma. gamma = 0 gives the uniform law.
  static PopularityModel zipf(int n_files, double gamma);
  /// Explicit probabilities; ties are allowed. Throws std::invalid_argument
  /// unless every entry is in (0,1) and the sum is 1 within 1e-12.
  static PopularityModel from_probabilities(std::vector<double> probs);

  const Eigen::VectorXd& probabilities() const { return a_; }
  int size() const { return static_cast<int>(a_.size()); }
  double operator[](int n) const { return a_[n]; }

 private:
  explicit PopularityModel(Eigen::VectorXd a) : a_(std::move(a)) {}
  Eigen::VectorXd a_;
};

/// Per-tier caching probabilities T_n on the capped simplex
/// {0 <= T_n <= 1, sum T_n = K}.
class CachingMarginals {
 public:
  static constexpr double kBudgetTolerance = 1e-9;

  /// Throws std::invalid_argument if `t` is not on the capped simplex
  /// with budget `cache_size`.
  CachingMarginals(Eigen::VectorXd t, int cache_size);

  static CachingMarginals uniform(int n_files, int cache_size);

  const Eigen::VectorXd& values() const { return t_; }
  int size() const { return static_cast<int>(t_.size()); }
  int cache_size() const { return k_; }
  double operator[](int n) const { return t_[n]; }

 private:
  Eigen::VectorXd t_;
  int k_;
};

/// Explicit caching distribution over K-subsets of the file library.
/// File indices are 0-based internally.
class CombinationDistribution {
 public:
  static constexpr std::size_t kMaxEntries = 1'000'000;

  struct Entry {
    std::vector<int> files;  // sorted, distinct
    double probability = 0.0;
  };

  CombinationDistribution(int n_files, int cache_size, std::vector<Entry> entries);

  /// Every K-subset with probability 1/C(N,K).
  static CombinationDistribution uniform(int n_files, int cache_size);

  int n_files() const { return n_; }
  int cache_size() const { return k_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  int n_;
  int k_;
  std::vector<Entry> entries_;
};

/// C(n, k) as a double (exact for the sizes we enumerate).
double binomial_coefficient(int n, int k);

/// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate_config(const NetworkConfig& cfg, const PopularityModel& pop);

/// Throws std::invalid_argument carrying every message from validate_config.
void require_valid(const NetworkConfig& cfg, const PopularityModel& pop);

/// T_n = sum of p_i over subsets containing n.
CachingMarginals marginals_from_combinations(const CombinationDistribution& dist);

}  // namespace hetcache
