#pragma once

#include <span>
#include <utility>

#include <Eigen/Dense>

#include "hetcache/model.hpp"
#include "hetcache/special.hpp"

namespace hetcache {

/// Interference-geometry constants for tier j at file load k. The success
/// probability of a tier-j transmission at load k behaves like
/// 1 / (theta1 * T_j + theta2 * T_other + theta3) in the noise-free limit.
struct ThetaCoefficients {
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;

  template <typename Scalar>
  Scalar denominator(Scalar own, Scalar other) const {
    return theta1 * own + theta2 * other + theta3;
  }
};

/// Conditional distribution of the file load at the serving POA.
/// probs[k-1] = Pr[load = k], k = 1..K.
struct LoadPmf {
  Eigen::VectorXd probs;
};

struct StpBreakdown {
  double q_total = 0.0;
  double q_tier1 = 0.0;
  double q_tier2 = 0.0;

  double tier(Tier j) const { return j == Tier::One ? q_tier1 : q_tier2; }
};

ThetaCoefficients theta_coeffs(const NetworkConfig& cfg, Tier j, int k);

/// Probability that a user requesting a file cached with (t_j, t_jbar) in the
/// two tiers associates with tier j. Returns 0 when neither tier caches it.
double association_prob(const NetworkConfig& cfg, Tier j, double t_j, double t_jbar);

/// Probability that no user in the serving cell of file m requests m
/// (approximate Voronoi-cell-size law). `file` is 0-based.
double b_coeff(const NetworkConfig& cfg, const PopularityModel& pop, Tier j, int file, double t_j, double t_jbar);

/// Distribution of the number of successes among independent Bernoulli
/// trials, computed by the O(n^2) recursion. Entry c is Pr[c successes].
Eigen::VectorXd poisson_binomial_pmf(std::span<const double> success_probs);

/// Load p.m.f. at a tier-j POA serving `file` (0-based). The other tier's
/// caching enters only through its marginals.
LoadPmf load_pmf(const NetworkConfig& cfg, const PopularityModel& pop, Tier j, const CombinationDistribution& dist_j,
                 const CachingMarginals& t_jbar, int file);

/// Coverage integral f_{j,k}(x, y) at caching probabilities x (own tier)
/// and y (other tier), including thermal noise. Exact 1/(theta-denominator)
/// when noise or tau vanishes; otherwise adaptive quadrature at 1e-9.
double f_jk(const NetworkConfig& cfg, Tier j, int k, double x, double y);

/// Successful transmission probability for explicit combination designs,
/// treating load and SINR as independent.
StpBreakdown stp_general(const NetworkConfig& cfg, const PopularityModel& pop, const CombinationDistribution& dist1,
                         const CombinationDistribution& dist2);

/// High-SNR, full-load limit of the successful transmission probability.
/// Theta coefficients are evaluated once at k = K_j; everything downstream
/// (optimizers, game, gradients) works against this object.
class AsymptoticModel {
 public:
  AsymptoticModel(const NetworkConfig& cfg, const PopularityModel& pop);

  const ThetaCoefficients& theta(Tier j) const { return theta_[tier_index(j)]; }
  const Eigen::VectorXd& popularity() const { return a_; }
  int cache_size(Tier j) const { return k_[tier_index(j)]; }
  int n_files() const { return static_cast<int>(a_.size()); }

  /// q_{j,inf}(own, other) = sum_n a_n T_n / (theta1 T_n + theta2 T'_n + theta3),
  /// with 0/0 read as 0 for files tier j does not cache.
  template <typename DerivedOwn, typename DerivedOther>
  typename DerivedOwn::Scalar tier_utility(Tier j, const Eigen::MatrixBase<DerivedOwn>& own,
                                           const Eigen::MatrixBase<DerivedOther>& other) const {
    const auto& th = theta(j);
    const auto den = (th.theta1 * own.array() + th.theta2 * other.array() + th.theta3).eval();
    return (own.array() > 0).select(a_.array() * own.array() / den, 0.0).sum();
  }

  template <typename Derived1, typename Derived2>
  double total(const Eigen::MatrixBase<Derived1>& t1, const Eigen::MatrixBase<Derived2>& t2) const {
    return tier_utility(Tier::One, t1, t2) + tier_utility(Tier::Two, t2, t1);
  }

  /// d q_inf / d T_{j,n}: own-tier gain minus the interference it causes in
  /// the other tier.
  template <typename DerivedOwn, typename DerivedOther>
  Eigen::VectorXd gradient(Tier j, const Eigen::MatrixBase<DerivedOwn>& own,
                           const Eigen::MatrixBase<DerivedOther>& other) const {
    const auto& th = theta(j);
    const auto& tho = theta(hetcache::other(j));
    const Eigen::ArrayXd own_den = th.theta1 * own.array() + th.theta2 * other.array() + th.theta3;
    const Eigen::ArrayXd other_den = tho.theta1 * other.array() + tho.theta2 * own.array() + tho.theta3;
    const Eigen::ArrayXd gain = a_.array() * (th.theta2 * other.array() + th.theta3) / own_den.square();
    const Eigen::ArrayXd loss = a_.array() * tho.theta2 * other.array() / other_den.square();
    return (gain - loss).matrix();
  }

  StpBreakdown evaluate(const CachingMarginals& t1, const CachingMarginals& t2) const;

 private:
  ThetaCoefficients theta_[2];
  int k_[2];
  Eigen::VectorXd a_;
};

StpBreakdown stp_asymptotic(const NetworkConfig& cfg, const PopularityModel& pop, const CachingMarginals& t1,
                            const CachingMarginals& t2);

/// Analytic gradient of q_inf with respect to (T_1, T_2).
std::pair<Eigen::VectorXd, Eigen::VectorXd> grad_asymptotic(const NetworkConfig& cfg, const PopularityModel& pop,
                                                             const CachingMarginals& t1, const CachingMarginals& t2);

}  // namespace hetcache
