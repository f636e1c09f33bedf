#include "hetcache/water_filling.hpp"

#include <algorithm>

namespace hetcache {

namespace {

// The multiplier search leaves |sum - K| <= 1e-10; clamp stray roundoff.
CachingMarginals finish(Eigen::VectorXd t, int budget) {
  t = t.cwiseMax(0.0).cwiseMin(1.0);
  return CachingMarginals(std::move(t), budget);
}

}  // namespace

CachingMarginals project_capped_simplex(const Eigen::VectorXd& v, int budget) {
  const auto n = v.size();
  if (budget < 1 || budget >= n) throw std::invalid_argument("project_capped_simplex requires 1 <= K < N");
  auto at = [&v](double nu) { return (v.array() - nu).max(0.0).min(1.0).eval(); };
  auto total = [&](double nu) { return at(nu).sum(); };
  const double lo = v.minCoeff() - 1.0;  // every coordinate capped: sum = N > K
  const double hi = v.maxCoeff();        // every coordinate zero
  const double nu = solve_budget_multiplier(total, lo, hi, static_cast<double>(budget));
  return finish(at(nu).matrix(), budget);
}

CachingMarginals maximize_separable_ratio(const Eigen::VectorXd& a, const Eigen::VectorXd& c,
                                          const Eigen::VectorXd& d, double theta1, int budget, double* multiplier) {
  const auto n = a.size();
  if (c.size() != n || d.size() != n) throw std::invalid_argument("maximize_separable_ratio: size mismatch");
  if (budget < 1 || budget >= n) throw std::invalid_argument("maximize_separable_ratio requires 1 <= K < N");
  if (!(theta1 > 0.0)) throw std::domain_error("maximize_separable_ratio requires theta1 > 0");
  if (!((c.array() > 0.0).all())) throw std::domain_error("maximize_separable_ratio requires c_n > 0");

  auto at = [&](double nu) {
    Eigen::ArrayXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double shifted = nu + d[i];
      // nu + d_n <= 0 means the marginal value never drops to nu: file is capped.
      if (shifted <= 0.0) {
        t[i] = 1.0;
        continue;
      }
      const double raw = (std::sqrt(a[i] * c[i] / shifted) - c[i]) / theta1;
      t[i] = std::clamp(raw, 0.0, 1.0);
    }
    return t;
  };
  auto total = [&](double nu) { return at(nu).sum(); };

  // T_n = 1 for nu <= a c/(theta1 + c)^2 - d, T_n = 0 for nu >= a/c - d.
  const Eigen::ArrayXd cap_edge = a.array() * c.array() / (theta1 + c.array()).square() - d.array();
  const Eigen::ArrayXd zero_edge = a.array() / c.array() - d.array();
  double lo = cap_edge.minCoeff();
  double hi = zero_edge.maxCoeff();
  if (!(lo < hi)) hi = lo + 1.0;
  const double nu = solve_budget_multiplier(total, lo, hi, static_cast<double>(budget));
  if (multiplier != nullptr) *multiplier = nu;
  return finish(at(nu).matrix(), budget);
}

}  // namespace hetcache
