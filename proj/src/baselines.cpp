#include "hetcache/baselines.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "hetcache/water_filling.hpp"

namespace hetcache {

namespace {

constexpr int kMaxExactSubsetFiles = 22;

void check_budget(const PopularityModel& pop, int cache_size) {
  if (cache_size < 1 || cache_size >= pop.size())
    throw std::invalid_argument("baseline cache size must satisfy 1 <= K < N");
}

void enumerate_prefixes(const Eigen::VectorXd& a, int depth, double prob, double remaining,
                        std::vector<int>& chosen, Eigen::VectorXd& t) {
  if (depth == static_cast<int>(chosen.size())) {
    for (int i : chosen) t[i] += prob;
    return;
  }
  for (int i = 0; i < a.size(); ++i) {
    if (std::find(chosen.begin(), chosen.begin() + depth, i) != chosen.begin() + depth) continue;
    chosen[depth] = i;
    enumerate_prefixes(a, depth + 1, prob * a[i] / remaining, remaining - a[i], chosen, t);
  }
}

Eigen::VectorXd exact_by_prefixes(const Eigen::VectorXd& a, int k) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(a.size());
  std::vector<int> chosen(k);
  enumerate_prefixes(a, 0, 1.0, 1.0, chosen, t);
  return t;
}

// prob[mask] = Pr[the first |mask| draws are exactly `mask`].
Eigen::VectorXd exact_by_subsets(const Eigen::VectorXd& a, int k) {
  const int n = static_cast<int>(a.size());
  const std::uint32_t full = 1u << n;
  std::vector<double> prob(full, 0.0);
  prob[0] = 1.0;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    const double p = prob[mask];
    if (p == 0.0) continue;
    const int size = std::popcount(mask);
    if (size == k) {
      for (int i = 0; i < n; ++i)
        if (mask & (1u << i)) t[i] += p;
      continue;
    }
    double remaining = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) remaining -= a[i];
    for (int i = 0; i < n; ++i)
      if (!(mask & (1u << i))) prob[mask | (1u << i)] += p * a[i] / remaining;
  }
  return t;
}

// Successive sampling is an exponential race: file i arrives at
// E_i ~ Exp(a_i) and the cache keeps the K earliest arrivals, so
//   t_i = int_0^inf a_i e^{-a_i x} Pr[#{j != i : E_j < x} <= K-1] dx.
class RaceIntegrand {
 public:
  RaceIntegrand(const Eigen::VectorXd& a, int k, double scale)
      : a_(a), k_(k), scale_(scale), n_(static_cast<int>(a.size())),
        fwd_((n_ + 1) * k, 0.0), bwd_((n_ + 2) * k, 0.0) {}

  // Integrand in z, where x = scale * z / (1 - z).
  Eigen::VectorXd operator()(double z) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    if (z >= 1.0) return out;
    const double x = scale_ * z / (1.0 - z);
    const double jac = scale_ / ((1.0 - z) * (1.0 - z));

    // fwd row i: count distribution over files [0, i); bwd row i: over [i, n).
    std::fill(fwd_.begin(), fwd_.end(), 0.0);
    std::fill(bwd_.begin(), bwd_.end(), 0.0);
    fwd_[0] = 1.0;
    for (int i = 0; i < n_; ++i) {
      const double p = -std::expm1(-a_[i] * x);
      const double* prev = &fwd_[i * k_];
      double* cur = &fwd_[(i + 1) * k_];
      cur[0] = prev[0] * (1.0 - p);
      for (int c = 1; c < k_; ++c) cur[c] = prev[c] * (1.0 - p) + prev[c - 1] * p;
    }
    bwd_[n_ * k_] = 1.0;
    for (int i = n_ - 1; i >= 0; --i) {
      const double p = -std::expm1(-a_[i] * x);
      const double* next = &bwd_[(i + 1) * k_];
      double* cur = &bwd_[i * k_];
      cur[0] = next[0] * (1.0 - p);
      for (int c = 1; c < k_; ++c) cur[c] = next[c] * (1.0 - p) + next[c - 1] * p;
    }
    for (int i = 0; i < n_; ++i) {
      const double* f = &fwd_[i * k_];
      const double* b = &bwd_[(i + 1) * k_];
      // Pr[count over the others <= K-1] via prefix x suffix convolution.
      double cdf = 0.0;
      double b_cum = 0.0;
      for (int c = 0; c < k_; ++c) {
        b_cum += b[c];
        cdf += f[k_ - 1 - c] * b_cum;
      }
      out[i] = a_[i] * std::exp(-a_[i] * x) * cdf * jac;
    }
    return out;
  }

 private:
  const Eigen::VectorXd& a_;
  int k_;
  double scale_;
  int n_;
  std::vector<double> fwd_;
  std::vector<double> bwd_;
};

template <typename F>
Eigen::VectorXd vector_simpson(F& f, double lo, double hi, const Eigen::VectorXd& flo, const Eigen::VectorXd& fmid,
                               const Eigen::VectorXd& fhi, const Eigen::VectorXd& whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const Eigen::VectorXd fl = f(0.5 * (lo + mid));
  const Eigen::VectorXd fr = f(0.5 * (mid + hi));
  const Eigen::VectorXd left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid);
  const Eigen::VectorXd right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi);
  const Eigen::VectorXd delta = left + right - whole;
  if ((depth >= 6 && delta.cwiseAbs().maxCoeff() <= 15.0 * tol) || depth >= 40)
    return left + right + delta / 15.0;
  return vector_simpson(f, lo, mid, flo, fl, fmid, left, 0.5 * tol, depth + 1) +
         vector_simpson(f, mid, hi, fmid, fr, fhi, right, 0.5 * tol, depth + 1);
}

Eigen::VectorXd by_quadrature(const Eigen::VectorXd& a, int k) {
  // Time by which K files are expected to have arrived.
  auto expected = [&](double x) { return (-(-a.array() * x).exp() + 1.0).sum(); };
  double scale = 1.0;
  while (expected(scale) < k) scale *= 2.0;
  const double s = solve_budget_multiplier([&](double x) { return -expected(x); }, 0.0, scale,
                                           -static_cast<double>(k), 1e-6);
  RaceIntegrand f(a, k, std::max(s, 1e-300));
  const Eigen::VectorXd f0 = f(0.0);
  const Eigen::VectorXd fm = f(0.5);
  const Eigen::VectorXd f1 = f(1.0);
  const Eigen::VectorXd whole = (f0 + 4.0 * fm + f1) / 6.0;
  Eigen::VectorXd t = vector_simpson(f, 0.0, 1.0, f0, fm, f1, whole, 1e-13, 0);
  // Quadrature leaves the budget off by ~1e-12; restore it exactly.
  t *= k / t.sum();
  return t.cwiseMin(1.0);
}

IidMarginals by_monte_carlo(const Eigen::VectorXd& a, int k, const IidMonteCarlo& mc) {
  if (mc.draws < 1) throw std::invalid_argument("Monte Carlo baseline needs at least one draw");
  const int n = static_cast<int>(a.size());
  std::mt19937_64 rng(mc.seed);
  std::exponential_distribution<double> unit_exp(1.0);
  std::vector<std::int64_t> counts(n, 0);
  std::vector<std::pair<double, int>> arrivals(n);
  for (std::int64_t d = 0; d < mc.draws; ++d) {
    for (int i = 0; i < n; ++i) arrivals[i] = {unit_exp(rng) / a[i], i};
    std::nth_element(arrivals.begin(), arrivals.begin() + (k - 1), arrivals.end());
    for (int r = 0; r < k; ++r) ++counts[arrivals[r].second];
  }
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t[i] = static_cast<double>(counts[i]) / static_cast<double>(mc.draws);
  Eigen::VectorXd se = (t.array() * (1.0 - t.array()) / static_cast<double>(mc.draws)).sqrt().matrix();
  return {CachingMarginals(std::move(t), k), std::move(se)};
}

}  // namespace

CachingMarginals most_popular_marginals(const PopularityModel& pop, int cache_size) {
  check_budget(pop, cache_size);
  std::vector<int> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return pop[l] > pop[r]; });
  Eigen::VectorXd t = Eigen::VectorXd::Zero(pop.size());
  for (int r = 0; r < cache_size; ++r) t[order[r]] = 1.0;
  return CachingMarginals(std::move(t), cache_size);
}

IidMarginals iid_popularity_marginals(const PopularityModel& pop, int cache_size, const IidMethod& method) {
  check_budget(pop, cache_size);
  const Eigen::VectorXd& a = pop.probabilities();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(pop.size());
  if (std::holds_alternative<IidExact>(method)) {
    if (cache_size <= 3) return {CachingMarginals(exact_by_prefixes(a, cache_size), cache_size), zero};
    if (pop.size() <= kMaxExactSubsetFiles)
      return {CachingMarginals(exact_by_subsets(a, cache_size), cache_size), zero};
    throw std::invalid_argument("exact i.i.d. marginals need K <= 3 or N <= 22");
  }
  if (std::holds_alternative<IidQuadrature>(method))
    return {CachingMarginals(by_quadrature(a, cache_size), cache_size), zero};
  return by_monte_carlo(a, cache_size, std::get<IidMonteCarlo>(method));
}

}  // namespace hetcache
