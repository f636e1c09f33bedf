#include "hetcache/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hetcache {

namespace {

constexpr double kProbabilitySumTolerance = 1e-12;

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace

PopularityModel PopularityModel::zipf(int n_files, double gamma) {
  if (n_files < 2) throw std::invalid_argument("zipf popularity needs at least 2 files");
  if (!std::isfinite(gamma) || gamma < 0.0) throw std::invalid_argument("zipf exponent must be >= 0");
  Eigen::VectorXd a(n_files);
  for (int n = 0; n < n_files; ++n) a[n] = std::pow(static_cast<double>(n + 1), -gamma);
  a /= a.sum();
  return PopularityModel(std::move(a));
}

PopularityModel PopularityModel::from_probabilities(std::vector<double> probs) {
  if (probs.size() < 2) throw std::invalid_argument("popularity needs at least 2 files");
  double sum = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) {
    if (!(probs[n] > 0.0 && probs[n] < 1.0))
      throw std::invalid_argument(concat("popularity a_", n + 1, " = ", probs[n], " is not in (0,1)"));
    sum += probs[n];
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
    throw std::invalid_argument(concat("popularity sums to ", sum, ", expected 1"));
  return PopularityModel(Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size())));
}

CachingMarginals::CachingMarginals(Eigen::VectorXd t, int cache_size) : t_(std::move(t)), k_(cache_size) {
  if (k_ < 0 || k_ > t_.size()) throw std::invalid_argument("cache size out of range for marginals");
  for (Eigen::Index n = 0; n < t_.size(); ++n) {
    if (!(t_[n] >= 0.0 && t_[n] <= 1.0))
      throw std::invalid_argument(concat("caching probability T_", n + 1, " = ", t_[n], " outside [0,1]"));
  }
  if (std::abs(t_.sum() - k_) > kBudgetTolerance)
    throw std::invalid_argument(concat("caching probabilities sum to ", t_.sum(), ", expected ", k_));
}

CachingMarginals CachingMarginals::uniform(int n_files, int cache_size) {
  if (n_files <= 0) throw std::invalid_argument("uniform marginals need n_files > 0");
  return CachingMarginals(Eigen::VectorXd::Constant(n_files, static_cast<double>(cache_size) / n_files), cache_size);
}

double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

CombinationDistribution::CombinationDistribution(int n_files, int cache_size, std::vector<Entry> entries)
    : n_(n_files), k_(cache_size), entries_(std::move(entries)) {
  if (n_ < 1 || k_ < 1 || k_ > n_) throw std::invalid_argument("combination distribution needs 1 <= K <= N");
  if (entries_.size() > kMaxEntries)
    throw std::invalid_argument("combination distribution exceeds 1e6 entries; use caching marginals");
  double sum = 0.0;
  for (auto& e : entries_) {
    if (static_cast<int>(e.files.size()) != k_)
      throw std::invalid_argument(concat("combination has ", e.files.size(), " files, expected ", k_));
    std::sort(e.files.begin(), e.files.end());
    if (std::adjacent_find(e.files.begin(), e.files.end()) != e.files.end())
      throw std::invalid_argument("combination repeats a file");
    if (e.files.front() < 0 || e.files.back() >= n_) throw std::invalid_argument("combination file index out of range");
    if (!(e.probability >= 0.0 && e.probability <= 1.0))
      throw std::invalid_argument("combination probability outside [0,1]");
    sum += e.probability;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
    throw std::invalid_argument(concat("combination probabilities sum to ", sum, ", expected 1"));
}

CombinationDistribution CombinationDistribution::uniform(int n_files, int cache_size) {
  if (cache_size < 1 || cache_size > n_files) throw std::invalid_argument("uniform combinations need 1 <= K <= N");
  const double count = binomial_coefficient(n_files, cache_size);
  if (count > static_cast<double>(kMaxEntries))
    throw std::invalid_argument("C(N,K) exceeds 1e6; use caching marginals");

  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(count));
  const double p = 1.0 / count;
  std::vector<int> idx(cache_size);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    entries.push_back({idx, p});
    int i = cache_size - 1;
    while (i >= 0 && idx[i] == n_files - cache_size + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int m = i + 1; m < cache_size; ++m) idx[m] = idx[m - 1] + 1;
  }
  return CombinationDistribution(n_files, cache_size, std::move(entries));
}

std::vector<std::string> validate_config(const NetworkConfig& cfg, const PopularityModel& pop) {
  std::vector<std::string> errors;
  auto check = [&](bool ok, std::string msg) {
    if (!ok) errors.push_back(std::move(msg));
  };
  check(cfg.lambda1 > 0.0 && std::isfinite(cfg.lambda1), "lambda1 must be > 0");
  check(cfg.lambda2 > 0.0 && std::isfinite(cfg.lambda2), "lambda2 must be > 0");
  check(cfg.lambda_u >= 0.0 && std::isfinite(cfg.lambda_u), "lambda_u must be >= 0");
  check(cfg.p1 > 0.0 && std::isfinite(cfg.p1), "p1 must be > 0");
  check(cfg.p2 > 0.0 && std::isfinite(cfg.p2), "p2 must be > 0");
  check(cfg.alpha > 2.0 && std::isfinite(cfg.alpha), "alpha must exceed 2");
  check(cfg.w > 0.0 && std::isfinite(cfg.w), "w must be > 0");
  check(cfg.tau >= 0.0 && std::isfinite(cfg.tau), "tau must be >= 0");
  check(cfg.n0 >= 0.0 && std::isfinite(cfg.n0), "n0 must be >= 0");
  check(cfg.n_files >= 2, "n_files must be >= 2");
  check(cfg.k1 >= 1, "k1: cache size must be >= 1");
  check(cfg.k2 >= 1, "k2: cache size must be >= 1");
  check(cfg.k1 < cfg.n_files, "k1: cache size must be < N");
  check(cfg.k2 < cfg.n_files, "k2: cache size must be < N");
  check(pop.size() == cfg.n_files,
        concat("popularity has ", pop.size(), " entries but n_files = ", cfg.n_files));
  return errors;
}

void require_valid(const NetworkConfig& cfg, const PopularityModel& pop) {
  const auto errors = validate_config(cfg, pop);
  if (errors.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw std::invalid_argument(msg);
}

CachingMarginals marginals_from_combinations(const CombinationDistribution& dist) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(dist.n_files());
  for (const auto& e : dist.entries())
    for (int n : e.files) t[n] += e.probability;
  // Rounding can push a certain file a hair above 1.
  t = t.cwiseMin(1.0);
  return CachingMarginals(std::move(t), dist.cache_size());
}

}  // namespace hetcache
