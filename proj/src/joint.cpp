#include "hetcache/joint.hpp"

#include <cmath>
#include <stdexcept>

namespace hetcache {

namespace {

void check_init(const NetworkConfig& cfg, const std::pair<CachingMarginals, CachingMarginals>& init) {
  const auto& [t1, t2] = init;
  if (t1.size() != cfg.n_files || t2.size() != cfg.n_files)
    throw std::invalid_argument("initial marginals length does not match n_files");
  if (t1.cache_size() != cfg.k1 || t2.cache_size() != cfg.k2)
    throw std::invalid_argument("initial marginals budget does not match K_j");
}

void require_positive_rate(const NetworkConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw std::domain_error("caching optimization requires tau > 0");
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Slope of the other tier's utility with respect to T_j, negated: the
// interference price paid per unit of T_{j,n}.
Eigen::VectorXd interference_price(const AsymptoticModel& model, Tier j, const Eigen::VectorXd& own,
                                   const Eigen::VectorXd& oth) {
  const auto& tho = model.theta(other(j));
  const Eigen::ArrayXd den = tho.theta1 * oth.array() + tho.theta2 * own.array() + tho.theta3;
  return (model.popularity().array() * tho.theta2 * oth.array() / den.square()).matrix();
}

}  // namespace

const char* to_string(Status s) { return s == Status::Converged ? "converged" : "max-iterations"; }

std::pair<CachingMarginals, CachingMarginals> uniform_start(const NetworkConfig& cfg) {
  return {CachingMarginals::uniform(cfg.n_files, cfg.k1), CachingMarginals::uniform(cfg.n_files, cfg.k2)};
}

OptimizerResult gradient_projection(const NetworkConfig& cfg, const PopularityModel& pop,
                                    const std::pair<CachingMarginals, CachingMarginals>& init,
                                    const GradientProjectionOptions& opts) {
  require_positive_rate(cfg);
  check_init(cfg, init);
  if (!(opts.stepsize > 0.0)) throw std::invalid_argument("gradient projection stepsize must be > 0");
  const AsymptoticModel model(cfg, pop);

  CachingMarginals t1 = init.first;
  CachingMarginals t2 = init.second;
  OptimizerTrace trace;
  trace.push_back({0, model.total(t1.values(), t2.values()), 0.0, std::nullopt});
  Status status = Status::MaxIterations;

  for (int t = 1; t <= opts.max_iter; ++t) {
    const double eps = opts.stepsize / (2.0 + std::pow(static_cast<double>(t), 0.55));
    const Eigen::VectorXd g1 = model.gradient(Tier::One, t1.values(), t2.values());
    const Eigen::VectorXd g2 = model.gradient(Tier::Two, t2.values(), t1.values());
    CachingMarginals next1 = project_capped_simplex(t1.values() + eps * g1, cfg.k1);
    CachingMarginals next2 = project_capped_simplex(t2.values() + eps * g2, cfg.k2);
    const double change =
        std::max(max_abs_diff(next1.values(), t1.values()), max_abs_diff(next2.values(), t2.values()));
    t1 = std::move(next1);
    t2 = std::move(next2);
    trace.push_back({t, model.total(t1.values(), t2.values()), change, std::nullopt});
    if (change <= opts.tol) {
      status = Status::Converged;
      break;
    }
  }
  const double objective = model.total(t1.values(), t2.values());
  return {std::move(t1), std::move(t2), objective, std::move(trace), status};
}

double bsum_surrogate(const AsymptoticModel& model, Tier j, const Eigen::VectorXd& candidate,
                      const CachingMarginals& t1, const CachingMarginals& t2) {
  const Eigen::VectorXd& own = (j == Tier::One) ? t1.values() : t2.values();
  const Eigen::VectorXd& oth = (j == Tier::One) ? t2.values() : t1.values();
  const Eigen::VectorXd price = interference_price(model, j, own, oth);
  return model.tier_utility(j, candidate, oth) + model.tier_utility(other(j), oth, own) -
         price.dot(candidate - own);
}

CachingMarginals bsum_step(const AsymptoticModel& model, const CachingMarginals& t1, const CachingMarginals& t2,
                           Tier j) {
  const Eigen::VectorXd& own = (j == Tier::One) ? t1.values() : t2.values();
  const Eigen::VectorXd& oth = (j == Tier::One) ? t2.values() : t1.values();
  const auto& th = model.theta(j);
  const Eigen::VectorXd c = (th.theta2 * oth.array() + th.theta3).matrix();
  const Eigen::VectorXd price = interference_price(model, j, own, oth);
  return maximize_separable_ratio(model.popularity(), c, price, th.theta1, model.cache_size(j));
}

CachingMarginals bsum_step(const NetworkConfig& cfg, const PopularityModel& pop, const CachingMarginals& t1,
                           const CachingMarginals& t2, Tier j) {
  require_positive_rate(cfg);
  check_init(cfg, {t1, t2});
  return bsum_step(AsymptoticModel(cfg, pop), t1, t2, j);
}

OptimizerResult bsum(const NetworkConfig& cfg, const PopularityModel& pop,
                     const std::pair<CachingMarginals, CachingMarginals>& init, const BsumOptions& opts) {
  require_positive_rate(cfg);
  check_init(cfg, init);
  const AsymptoticModel model(cfg, pop);

  CachingMarginals t1 = init.first;
  CachingMarginals t2 = init.second;
  OptimizerTrace trace;
  trace.push_back({0, model.total(t1.values(), t2.values()), 0.0, std::nullopt});
  Status status = Status::MaxIterations;

  for (int t = 1; t <= opts.max_iter; ++t) {
    const Tier j = (t % 2 == 1) ? Tier::One : Tier::Two;
    CachingMarginals next = bsum_step(model, t1, t2, j);
    CachingMarginals& slot = (j == Tier::One) ? t1 : t2;
    const double change = max_abs_diff(next.values(), slot.values());
    slot = std::move(next);
    trace.push_back({t, model.total(t1.values(), t2.values()), change, j});
    if (t >= 2 && std::abs(trace[t].objective - trace[t - 2].objective) <= opts.tol) {
      status = Status::Converged;
      break;
    }
  }
  const double objective = trace.back().objective;
  return {std::move(t1), std::move(t2), objective, std::move(trace), status};
}

EqualCacheResult equal_cache_optimal(const NetworkConfig& cfg, const PopularityModel& pop) {
  if (cfg.k1 != cfg.k2) throw std::invalid_argument("equal-cache optimum requires k1 == k2");
  require_positive_rate(cfg);
  const AsymptoticModel model(cfg, pop);
  const int budget = cfg.k1;
  const double delta = cfg.delta();
  const double w1 = std::pow(cfg.p1, delta) * cfg.lambda1;
  const double w2 = std::pow(cfg.p2, delta) * cfg.lambda2;
  const double cap = w1 + w2;
  // theta1 depends only on the load, so both tiers share it when K1 == K2.
  const double theta1 = model.theta(Tier::One).theta1;
  const double mu3 = w1 * model.theta(Tier::One).theta3;
  if (!(theta1 > 0.0)) throw std::domain_error("equal-cache optimum requires theta1 > 0");
  const Eigen::ArrayXd a = pop.probabilities().array();

  auto weights_at = [&](double nu) {
    return ((((a * mu3 / nu).sqrt() - mu3) / theta1).max(0.0).min(cap)).eval();
  };
  // Work in units of the cap so the residual tolerance is scale-free.
  auto total = [&](double nu) { return weights_at(nu).sum() / cap; };
  const double lo = (a * mu3 / std::pow(theta1 * cap + mu3, 2)).minCoeff();
  const double hi = (a / mu3).maxCoeff();
  const double nu = solve_budget_multiplier(total, lo, hi, static_cast<double>(budget), 1e-12);

  EqualCacheResult out{.result = {CachingMarginals::uniform(cfg.n_files, cfg.k1),
                                  CachingMarginals::uniform(cfg.n_files, cfg.k2), 0.0, {}, Status::Converged},
                       .weights = weights_at(nu).matrix(),
                       .weight_cap = cap,
                       .multiplier = nu};
  const Eigen::VectorXd t = (out.weights / cap).cwiseMax(0.0).cwiseMin(1.0);
  out.result.t1 = CachingMarginals(t, budget);
  out.result.t2 = CachingMarginals(t, budget);
  out.result.objective = model.total(t, t);
  out.result.trace.push_back({1, out.result.objective, 0.0, std::nullopt});
  return out;
}

double projected_gradient_norm(const AsymptoticModel& model, const CachingMarginals& t1, const CachingMarginals& t2) {
  const Eigen::VectorXd g1 = model.gradient(Tier::One, t1.values(), t2.values());
  const Eigen::VectorXd g2 = model.gradient(Tier::Two, t2.values(), t1.values());
  const CachingMarginals p1 = project_capped_simplex(t1.values() + g1, t1.cache_size());
  const CachingMarginals p2 = project_capped_simplex(t2.values() + g2, t2.cache_size());
  return std::max(max_abs_diff(p1.values(), t1.values()), max_abs_diff(p2.values(), t2.values()));
}

}  // namespace hetcache
