#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "hetcache/model.hpp"

namespace hetcache {

/// Budget residual below which a multiplier search is declared solved.
inline constexpr double kBudgetResidualTol = 1e-10;

/// Finds nu with total(nu) == budget for a continuous, non-increasing
/// `total`, by bisection. The bracket is widened geometrically until it
/// straddles the budget, then halved until the residual is below `tol` or
/// the bracket collapses to adjacent doubles; the better endpoint wins.
template <typename Total>
double solve_budget_multiplier(Total&& total, double lo, double hi, double budget, double tol = kBudgetResidualTol) {
  if (!(lo < hi)) throw std::invalid_argument("multiplier bracket must satisfy lo < hi");
  for (int i = 0; total(lo) < budget; ++i) {
    if (i > 200) throw std::runtime_error("could not bracket the budget multiplier from below");
    lo -= (hi - lo);
  }
  for (int i = 0; total(hi) > budget; ++i) {
    if (i > 200) throw std::runtime_error("could not bracket the budget multiplier from above");
    hi += (hi - lo);
  }
  double f_lo = total(lo) - budget;
  double f_hi = total(hi) - budget;
  for (int iter = 0; iter < 2000; ++iter) {
    if (std::abs(f_lo) <= tol * 1e-3 || std::abs(f_hi) <= tol * 1e-3) break;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double f_mid = total(mid) - budget;
    if (f_mid > 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
  }
  const double best = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  if (std::min(std::abs(f_lo), std::abs(f_hi)) > tol)
    throw std::runtime_error("budget multiplier search did not reach the residual tolerance");
  return best;
}

/// Euclidean projection of v onto {0 <= T_n <= 1, sum T_n = K}:
/// T_n = min{[v_n - nu]^+, 1}.
CachingMarginals project_capped_simplex(const Eigen::VectorXd& v, int budget);

/// Maximizes sum_n a_n T_n / (theta1 T_n + c_n) - sum_n d_n T_n over the
/// capped simplex with budget K. Requires theta1 > 0, c_n > 0, d_n >= 0.
/// The KKT point is
///   T_n = min{[ sqrt(a_n c_n / (nu + d_n)) / theta1 - c_n / theta1 ]^+, 1}.
/// Returns the maximizer; `multiplier` receives nu when non-null.
CachingMarginals maximize_separable_ratio(const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                                          const Eigen::VectorXd& d, double theta1, int budget,
                                          double* multiplier = nullptr);

}  // namespace hetcache
