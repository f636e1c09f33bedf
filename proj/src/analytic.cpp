#include "hetcache/analytic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hetcache/quadrature.hpp"

namespace hetcache {

namespace {

// Integrand tail e^{-s} is below 1e-17 past this point.
constexpr double kSubstitutedUpperLimit = 40.0;
constexpr double kCoverageRelTol = 1e-11;

double rate_gap(const NetworkConfig& cfg, int k) { return std::exp2(k * cfg.tau / cfg.w) - 1.0; }

void check_shapes(const NetworkConfig& cfg, const CachingMarginals& t1, const CachingMarginals& t2) {
  if (t1.size() != cfg.n_files || t2.size() != cfg.n_files)
    throw std::invalid_argument("marginals length does not match n_files");
  if (t1.cache_size() != cfg.k1 || t2.cache_size() != cfg.k2)
    throw std::invalid_argument("marginals budget does not match tier cache size");
}

// Effective density of file-m servers as seen from tier j, divided by lambda_j.
double weighted_presence(const NetworkConfig& cfg, Tier j, double t_j, double t_jbar) {
  const Tier jb = other(j);
  return cfg.density(j) * t_j +
         cfg.density(jb) * t_jbar * std::pow(cfg.relative_power_of_other(j), cfg.delta());
}

Eigen::VectorXd b_coefficients(const NetworkConfig& cfg, const PopularityModel& pop, Tier j,
                               const Eigen::VectorXd& t_j, const Eigen::VectorXd& t_jbar) {
  Eigen::VectorXd b(t_j.size());
  for (Eigen::Index m = 0; m < t_j.size(); ++m) {
    b[m] = (t_j[m] + t_jbar[m] > 0.0) ? b_coeff(cfg, pop, j, static_cast<int>(m), t_j[m], t_jbar[m]) : 1.0;
  }
  return b;
}

LoadPmf load_pmf_from_b(const CombinationDistribution& dist_j, double t_jn, const Eigen::VectorXd& b, int file) {
  const int k_max = dist_j.cache_size();
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(k_max);
  std::vector<double> requested;
  requested.reserve(k_max);
  for (const auto& e : dist_j.entries()) {
    if (e.probability <= 0.0) continue;
    bool has_file = false;
    requested.clear();
    for (int m : e.files) {
      if (m == file) {
        has_file = true;
      } else {
        requested.push_back(1.0 - b[m]);
      }
    }
    if (!has_file) continue;
    probs += (e.probability / t_jn) * poisson_binomial_pmf(requested);
  }
  return LoadPmf{std::move(probs)};
}

}  // namespace

ThetaCoefficients theta_coeffs(const NetworkConfig& cfg, Tier j, int k) {
  if (k < 1 || k > cfg.cache_size(j)) throw std::invalid_argument("theta_coeffs: load k outside [1, K_j]");
  const double delta = cfg.delta();
  const double gap = rate_gap(cfg, k);
  const Tier jb = other(j);
  const double density_ratio = cfg.density(jb) / cfg.density(j);
  const double sigma = cfg.relative_power_of_other(j);

  if (gap == 0.0) {
    return {1.0, density_ratio * std::pow(sigma, delta), 0.0};
  }

  const double full = beta_fn(delta, 1.0 - delta);
  const double tail = beta_inc_comp(delta, 1.0 - delta, std::exp2(-k * cfg.tau / cfg.w));
  const double own_scale = delta * std::pow(gap, delta);
  const double other_scale = delta * density_ratio * std::pow(sigma * gap, delta);

  ThetaCoefficients th;
  th.theta1 = own_scale * (tail - full) + 1.0;
  th.theta2 = other_scale * (tail - full) + density_ratio * std::pow(sigma, delta);
  th.theta3 = own_scale * full + other_scale * full;
  return th;
}

double association_prob(const NetworkConfig& cfg, Tier j, double t_j, double t_jbar) {
  if (t_j <= 0.0) return 0.0;
  return cfg.density(j) * t_j / weighted_presence(cfg, j, t_j, t_jbar);
}

double b_coeff(const NetworkConfig& cfg, const PopularityModel& pop, Tier j, int file, double t_j, double t_jbar) {
  if (!(t_j + t_jbar > 0.0)) throw std::invalid_argument("b_coeff: file is cached in neither tier");
  const double lambda_j = cfg.density(j);
  const double a_hat = lambda_j / weighted_presence(cfg, j, t_j, t_jbar);
  return std::pow(1.0 + pop[file] * cfg.lambda_u * a_hat / (3.5 * lambda_j), -3.5);
}

Eigen::VectorXd poisson_binomial_pmf(std::span<const double> success_probs) {
  const auto n = static_cast<Eigen::Index>(success_probs.size());
  Eigen::VectorXd pmf = Eigen::VectorXd::Zero(n + 1);
  pmf[0] = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = success_probs[i];
    for (Eigen::Index c = i + 1; c >= 1; --c) pmf[c] = pmf[c] * (1.0 - p) + pmf[c - 1] * p;
    pmf[0] *= 1.0 - p;
  }
  return pmf;
}

LoadPmf load_pmf(const NetworkConfig& cfg, const PopularityModel& pop, Tier j, const CombinationDistribution& dist_j,
                 const CachingMarginals& t_jbar, int file) {
  const CachingMarginals t_j = marginals_from_combinations(dist_j);
  if (file < 0 || file >= t_j.size()) throw std::invalid_argument("load_pmf: file index out of range");
  if (!(t_j[file] > 0.0)) throw std::invalid_argument("load_pmf: tier j never caches the requested file");
  const Eigen::VectorXd b = b_coefficients(cfg, pop, j, t_j.values(), t_jbar.values());
  return load_pmf_from_b(dist_j, t_j[file], b, file);
}

double f_jk(const NetworkConfig& cfg, Tier j, int k, double x, double y) {
  const ThetaCoefficients th = theta_coeffs(cfg, j, k);
  const double den = th.denominator(x, y);
  if (!(den > 0.0)) throw std::domain_error("f_jk: theta denominator must be positive");
  const double gap = rate_gap(cfg, k);
  if (cfg.n0 == 0.0 || gap == 0.0) return 1.0 / den;

  // Substituting s = pi lambda_j den d^2 leaves
  //   int_0^inf e^{-s} exp(-c s^{alpha/2}) ds / den.
  const double c = gap * (cfg.n0 / cfg.power(j)) *
                   std::pow(std::numbers::pi * cfg.density(j) * den, -0.5 * cfg.alpha);
  const double half_alpha = 0.5 * cfg.alpha;
  auto integrand = [c, half_alpha](double s) { return std::exp(-s - c * std::pow(s, half_alpha)); };

  // Past noise_edge the noise factor is below e^{-40}.
  const double noise_edge = std::pow(40.0 / c, 1.0 / half_alpha);
  const double split = std::min(noise_edge, kSubstitutedUpperLimit);
  double integral = adaptive_simpson(integrand, 0.0, split, kCoverageRelTol);
  if (split < kSubstitutedUpperLimit) {
    integral += adaptive_simpson(integrand, split, kSubstitutedUpperLimit, kCoverageRelTol, 1e-18);
  }
  return integral / den;
}

StpBreakdown stp_general(const NetworkConfig& cfg, const PopularityModel& pop, const CombinationDistribution& dist1,
                         const CombinationDistribution& dist2) {
  require_valid(cfg, pop);
  if (dist1.n_files() != cfg.n_files || dist2.n_files() != cfg.n_files)
    throw std::invalid_argument("combination distribution file count does not match n_files");
  if (dist1.cache_size() != cfg.k1 || dist2.cache_size() != cfg.k2)
    throw std::invalid_argument("combination distribution cache size does not match K_j");

  const CachingMarginals m1 = marginals_from_combinations(dist1);
  const CachingMarginals m2 = marginals_from_combinations(dist2);

  StpBreakdown out;
  for (Tier j : {Tier::One, Tier::Two}) {
    const auto& own = (j == Tier::One) ? m1.values() : m2.values();
    const auto& oth = (j == Tier::One) ? m2.values() : m1.values();
    const auto& dist = (j == Tier::One) ? dist1 : dist2;
    const Eigen::VectorXd b = b_coefficients(cfg, pop, j, own, oth);
    double q = 0.0;
    for (int n = 0; n < cfg.n_files; ++n) {
      if (!(own[n] > 0.0)) continue;
      const LoadPmf pmf = load_pmf_from_b(dist, own[n], b, n);
      double success = 0.0;
      for (int k = 1; k <= dist.cache_size(); ++k) {
        if (pmf.probs[k - 1] == 0.0) continue;
        success += pmf.probs[k - 1] * f_jk(cfg, j, k, own[n], oth[n]);
      }
      q += pop[n] * own[n] * success;
    }
    (j == Tier::One ? out.q_tier1 : out.q_tier2) = q;
  }
  out.q_total = out.q_tier1 + out.q_tier2;
  return out;
}

AsymptoticModel::AsymptoticModel(const NetworkConfig& cfg, const PopularityModel& pop)
    : theta_{theta_coeffs(cfg, Tier::One, cfg.k1), theta_coeffs(cfg, Tier::Two, cfg.k2)},
      k_{cfg.k1, cfg.k2},
      a_(pop.probabilities()) {
  require_valid(cfg, pop);
}

StpBreakdown AsymptoticModel::evaluate(const CachingMarginals& t1, const CachingMarginals& t2) const {
  StpBreakdown out;
  out.q_tier1 = tier_utility(Tier::One, t1.values(), t2.values());
  out.q_tier2 = tier_utility(Tier::Two, t2.values(), t1.values());
  out.q_total = out.q_tier1 + out.q_tier2;
  return out;
}

StpBreakdown stp_asymptotic(const NetworkConfig& cfg, const PopularityModel& pop, const CachingMarginals& t1,
                            const CachingMarginals& t2) {
  check_shapes(cfg, t1, t2);
  return AsymptoticModel(cfg, pop).evaluate(t1, t2);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> grad_asymptotic(const NetworkConfig& cfg, const PopularityModel& pop,
                                                             const CachingMarginals& t1, const CachingMarginals& t2) {
  check_shapes(cfg, t1, t2);
  if (!(cfg.tau > 0.0)) throw std::domain_error("grad_asymptotic requires tau > 0");
  const AsymptoticModel model(cfg, pop);
  return {model.gradient(Tier::One, t1.values(), t2.values()), model.gradient(Tier::Two, t2.values(), t1.values())};
}

}  // namespace hetcache
