#include "hetcache/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace hetcache {

namespace {

constexpr double kMinPoasPerTier = 200.0;
constexpr double kZ95 = 1.959963984540054;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double wrap(double d, double side) { return d - side * std::nearbyint(d / side); }

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Index of the interval [cum[i], cum[i+1]) holding x, skipping empty ones.
int locate(const std::vector<double>& cum, double x) {
  auto it = std::upper_bound(cum.begin(), cum.end(), x);
  int i = static_cast<int>(it - cum.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(cum.size()) - 2);
}

std::vector<double> interval_ends(const CachingMarginals& t) {
  std::vector<double> cum(t.size() + 1, 0.0);
  for (int n = 0; n < t.size(); ++n) cum[n + 1] = cum[n] + t[n];
  return cum;
}

void systematic_pick(const std::vector<double>& cum, int k, double u, std::vector<int>& out) {
  const int n_files = static_cast<int>(cum.size()) - 1;
  int prev = -1;
  for (int m = 0; m < k; ++m) {
    int i = locate(cum, u + m);
    // Rounding in the cumulative sums can land two points in one interval
    // or past the end; step to the next file that has mass.
    if (i <= prev) i = prev + 1;
    while (i < n_files - 1 && cum[i + 1] - cum[i] <= 0.0) ++i;
    out.push_back(i);
    prev = i;
  }
}

void check_design(const NetworkConfig& cfg, const SimDesign& design) {
  for (Tier j : {Tier::One, Tier::Two}) {
    const auto [n, k] = std::visit(
        [](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, CachingMarginals>) return std::pair{d.size(), d.cache_size()};
          else return std::pair{d.n_files(), d.cache_size()};
        },
        design.tier(j));
    if (n != cfg.n_files) throw std::invalid_argument("design file count does not match n_files");
    if (k != cfg.cache_size(j)) throw std::invalid_argument("design cache size does not match K_j");
  }
}

// POAs of both tiers in one table, positions relative to the typical user.
struct Deployment {
  Eigen::Matrix2Xd pos;
  std::vector<Tier> tier;
  std::vector<double> weight;  // P^(2/alpha): P d^-alpha ranks like weight / d^2
  std::vector<double> power;
  // CSR inverted index: POAs caching file n are holders[start[n] .. start[n+1]).
  std::vector<int> start;
  std::vector<int> holders;
  std::vector<int> cache_start;
  std::vector<int> cache_files;

  int size() const { return static_cast<int>(pos.cols()); }
};

Deployment deploy(const NetworkConfig& cfg, const std::array<CacheSampler, 2>& samplers, const SimWindow& window,
                  Rng& rng) {
  Deployment d;
  const Eigen::Matrix2Xd p1 = sample_ppp(window, cfg.lambda1, rng);
  const Eigen::Matrix2Xd p2 = sample_ppp(window, cfg.lambda2, rng);
  d.pos.resize(2, p1.cols() + p2.cols());
  d.pos << p1, p2;
  const int total = d.size();
  d.tier.resize(total);
  d.weight.resize(total);
  d.power.resize(total);
  d.cache_start.assign(total + 1, 0);
  const double delta = cfg.delta();
  for (int i = 0; i < total; ++i) {
    const Tier j = i < p1.cols() ? Tier::One : Tier::Two;
    d.tier[i] = j;
    d.power[i] = cfg.power(j);
    d.weight[i] = std::pow(cfg.power(j), delta);
    samplers[tier_index(j)].sample(rng, d.cache_files);
    d.cache_start[i + 1] = static_cast<int>(d.cache_files.size());
  }
  d.start.assign(cfg.n_files + 1, 0);
  for (int f : d.cache_files) ++d.start[f + 1];
  for (int n = 0; n < cfg.n_files; ++n) d.start[n + 1] += d.start[n];
  d.holders.resize(d.cache_files.size());
  std::vector<int> fill(d.start.begin(), d.start.end() - 1);
  for (int i = 0; i < total; ++i)
    for (int c = d.cache_start[i]; c < d.cache_start[i + 1]; ++c) d.holders[fill[d.cache_files[c]]++] = i;
  return d;
}

struct Competitor {
  double dx, dy;  // offset from the serving POA
  double weight;
  double dist;
};

// True when some user requesting `file` associates with POA `s`.
bool cell_has_request(const NetworkConfig& cfg, const PopularityModel& pop, const Deployment& d, int s, int file,
                      const SimWindow& window, Rng& rng) {
  const double side = window.side;
  const double ws = d.weight[s];
  std::vector<Competitor> comp;
  std::array<double, 6> sector_min;
  sector_min.fill(std::numeric_limits<double>::infinity());
  for (int h = d.start[file]; h < d.start[file + 1]; ++h) {
    const int c = d.holders[h];
    if (c == s) continue;
    const double dx = wrap(d.pos(0, c) - d.pos(0, s), side);
    const double dy = wrap(d.pos(1, c) - d.pos(1, s), side);
    const double dist = std::hypot(dx, dy);
    comp.push_back({dx, dy, d.weight[c], dist});
    // A competitor at least as strong claims every point of its 60-degree
    // sector that lies farther from s than it does.
    if (d.weight[c] >= ws) {
      double ang = std::atan2(dy, dx);
      if (ang < 0.0) ang += 2.0 * std::numbers::pi;
      const int sec = std::min(5, static_cast<int>(ang / (std::numbers::pi / 3.0)));
      sector_min[sec] = std::min(sector_min[sec], dist);
    }
  }
  const double radius = *std::max_element(sector_min.begin(), sector_min.end());
  const bool bounded = radius < 0.5 * side;
  const double rate = pop[file] * cfg.lambda_u;
  double mean_users;
  if (bounded) {
    mean_users = rate * std::numbers::pi * radius * radius;
    std::erase_if(comp, [&](const Competitor& c) { return c.dist > radius * (1.0 + std::sqrt(c.weight / ws)); });
  } else {
    mean_users = rate * window.area();
  }
  std::sort(comp.begin(), comp.end(), [](const Competitor& a, const Competitor& b) { return a.dist < b.dist; });

  const std::int64_t users = std::poisson_distribution<std::int64_t>(mean_users)(rng);
  for (std::int64_t u = 0; u < users; ++u) {
    double ux, uy;
    if (bounded) {
      const double r = radius * std::sqrt(uniform01(rng));
      const double phi = 2.0 * std::numbers::pi * uniform01(rng);
      ux = r * std::cos(phi);
      uy = r * std::sin(phi);
    } else {
      ux = (uniform01(rng) - 0.5) * side;
      uy = (uniform01(rng) - 0.5) * side;
    }
    const double own = (ux * ux + uy * uy) / ws;
    bool mine = true;
    for (const auto& c : comp) {
      const double ex = wrap(ux - c.dx, side);
      const double ey = wrap(uy - c.dy, side);
      if ((ex * ex + ey * ey) / c.weight < own) {
        mine = false;
        break;
      }
    }
    if (mine) return true;
  }
  return false;
}

TrialOutcome run_trial(const NetworkConfig& cfg, const PopularityModel& pop, const std::array<CacheSampler, 2>& samplers,
                       const std::vector<double>& pop_cum, const SimWindow& window, Rng& rng) {
  const Deployment d = deploy(cfg, samplers, window, rng);
  TrialOutcome out;
  out.file = locate(pop_cum, uniform01(rng));

  const int s = strongest_poa(d.pos, d.power, cfg.alpha,
                              std::span<const int>(d.holders.data() + d.start[out.file],
                                                   d.start[out.file + 1] - d.start[out.file]));
  if (s < 0) return out;
  out.served = true;
  out.tier = d.tier[s];

  out.load = 1;
  for (int c = d.cache_start[s]; c < d.cache_start[s + 1]; ++c) {
    const int m = d.cache_files[c];
    if (m != out.file && cell_has_request(cfg, pop, d, s, m, window, rng)) ++out.load;
  }

  std::exponential_distribution<double> fading(1.0);
  const double half_alpha = 0.5 * cfg.alpha;
  double signal = 0.0;
  double interference = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    const double rx = d.power[i] * fading(rng) * std::pow(d.pos.col(i).squaredNorm(), -half_alpha);
    (i == s ? signal : interference) += rx;
  }
  const double noise = interference + cfg.n0;
  out.sinr = noise > 0.0 ? signal / noise : std::numeric_limits<double>::infinity();
  out.success = out.sinr >= std::exp2(out.load * cfg.tau / cfg.w) - 1.0;
  return out;
}

std::vector<double> popularity_cdf(const PopularityModel& pop) {
  std::vector<double> cum(pop.size() + 1, 0.0);
  for (int n = 0; n < pop.size(); ++n) cum[n + 1] = cum[n] + pop[n];
  cum.back() = 1.0;
  return cum;
}

}  // namespace

SimWindow SimWindow::for_config(const NetworkConfig& cfg) {
  const double sparse = std::min(cfg.lambda1, cfg.lambda2);
  if (!(sparse > 0.0)) throw std::invalid_argument("simulation window needs positive densities");
  return SimWindow{std::sqrt(kMinPoasPerTier / sparse)};
}

Eigen::Matrix2Xd sample_ppp(const SimWindow& window, double density, Rng& rng) {
  if (!(density >= 0.0)) throw std::invalid_argument("PPP density must be >= 0");
  const auto count = std::poisson_distribution<std::int64_t>(density * window.area())(rng);
  Eigen::Matrix2Xd pts(2, count);
  for (std::int64_t i = 0; i < count; ++i) {
    pts(0, i) = (uniform01(rng) - 0.5) * window.side;
    pts(1, i) = (uniform01(rng) - 0.5) * window.side;
  }
  return pts;
}

CacheSampler::CacheSampler(const TierDesign& design) {
  if (const auto* t = std::get_if<CachingMarginals>(&design)) {
    n_ = t->size();
    k_ = t->cache_size();
    cum_ = interval_ends(*t);
    return;
  }
  const auto& dist = std::get<CombinationDistribution>(design);
  n_ = dist.n_files();
  k_ = dist.cache_size();
  cum_.push_back(0.0);
  for (const auto& e : dist.entries()) {
    cum_.push_back(cum_.back() + e.probability);
    combo_files_.push_back(e.files);
  }
  cum_.back() = 1.0;
}

void CacheSampler::sample(Rng& rng, std::vector<int>& out) const {
  const double u = uniform01(rng);
  if (combo_files_.empty()) {
    systematic_pick(cum_, k_, u, out);
    return;
  }
  int i = locate(cum_, u);
  while (cum_[i + 1] - cum_[i] <= 0.0) --i;  // u never lands in an empty slot except by rounding
  out.insert(out.end(), combo_files_[i].begin(), combo_files_[i].end());
}

std::vector<int> CacheSampler::sample(Rng& rng) const {
  std::vector<int> out;
  out.reserve(k_);
  sample(rng, out);
  return out;
}

std::vector<int> sample_cache(const CachingMarginals& t, Rng& rng) { return CacheSampler(t).sample(rng); }

std::vector<int> sample_cache(const CombinationDistribution& dist, Rng& rng) {
  return CacheSampler(dist).sample(rng);
}

CombinationDistribution combinations_from_marginals_systematic(const CachingMarginals& t) {
  const std::vector<double> cum = interval_ends(t);
  // The picked set only changes where u crosses the fractional part of an
  // interval end.
  std::vector<double> cuts{0.0, 1.0};
  for (double c : cum) {
    const double f = c - std::floor(c);
    if (f > 0.0 && f < 1.0) cuts.push_back(f);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::map<std::vector<int>, double> mass;
  std::vector<int> pick;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double width = cuts[i + 1] - cuts[i];
    if (width <= 0.0) continue;
    pick.clear();
    systematic_pick(cum, t.cache_size(), 0.5 * (cuts[i] + cuts[i + 1]), pick);
    mass[pick] += width;
  }
  std::vector<CombinationDistribution::Entry> entries;
  double total = 0.0;
  for (auto& [files, p] : mass) {
    entries.push_back({files, p});
    total += p;
  }
  for (auto& e : entries) e.probability /= total;
  return CombinationDistribution(t.size(), t.cache_size(), std::move(entries));
}

int strongest_poa(const Eigen::Matrix2Xd& pos, std::span<const double> power, double alpha,
                  std::span<const int> candidates) {
  const double delta = 2.0 / alpha;
  int best = -1;
  double best_key = std::numeric_limits<double>::infinity();
  for (int c : candidates) {
    // Ranking by d^2 / P^delta is ranking by P d^-alpha, reversed.
    const double key = pos.col(c).squaredNorm() / std::pow(power[c], delta);
    if (key < best_key) {
      best_key = key;
      best = c;
    }
  }
  return best;
}

Rng trial_rng(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

TrialOutcome simulate_trial(const NetworkConfig& cfg, const PopularityModel& pop, const SimDesign& design,
                            const SimWindow& window, Rng& rng) {
  require_valid(cfg, pop);
  check_design(cfg, design);
  const std::array<CacheSampler, 2> samplers{CacheSampler(design.tier1), CacheSampler(design.tier2)};
  return run_trial(cfg, pop, samplers, popularity_cdf(pop), window, rng);
}

StpEstimate estimate_stp(const NetworkConfig& cfg, const PopularityModel& pop, const SimDesign& design,
                         const SimWindow& window, std::int64_t trials, std::uint64_t seed, int workers) {
  require_valid(cfg, pop);
  check_design(cfg, design);
  if (trials < 1) throw std::invalid_argument("simulation needs at least one trial");
  if (!(window.side > 0.0)) throw std::invalid_argument("simulation window side must be > 0");
  workers = static_cast<int>(std::clamp<std::int64_t>(workers, 1, trials));

  const std::array<CacheSampler, 2> samplers{CacheSampler(design.tier1), CacheSampler(design.tier2)};
  const std::vector<double> pop_cum = popularity_cdf(pop);

  struct Tally {
    std::int64_t success[2] = {0, 0};
  };
  std::vector<Tally> tallies(workers);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      const std::int64_t lo = trials * w / workers;
      const std::int64_t hi = trials * (w + 1) / workers;
      for (std::int64_t i = lo; i < hi; ++i) {
        Rng rng = trial_rng(seed, static_cast<std::uint64_t>(i));
        const TrialOutcome o = run_trial(cfg, pop, samplers, pop_cum, window, rng);
        if (o.success) ++tallies[w].success[tier_index(*o.tier)];
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::int64_t s1 = 0, s2 = 0;
  for (const auto& t : tallies) {
    s1 += t.success[0];
    s2 += t.success[1];
  }
  StpEstimate est;
  est.trials = trials;
  est.successes = s1 + s2;
  est.seed = seed;
  est.window_side = window.side;
  const double n = static_cast<double>(trials);
  est.mean = static_cast<double>(est.successes) / n;
  est.q_tier1 = static_cast<double>(s1) / n;
  est.q_tier2 = static_cast<double>(s2) / n;
  const double half = kZ95 * std::sqrt(est.mean * (1.0 - est.mean) / n);
  est.ci_low = std::max(0.0, est.mean - half);
  est.ci_high = std::min(1.0, est.mean + half);
  return est;
}

}  // namespace hetcache
