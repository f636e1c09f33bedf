#include "hetcache/game.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hetcache/water_filling.hpp"

namespace hetcache {

namespace {

void require_positive_rate(const NetworkConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw std::domain_error("caching game requires tau > 0");
}

}  // namespace

ConvergenceCondition convergence_condition(const NetworkConfig& cfg) {
  require_positive_rate(cfg);
  double value = 1.0;
  for (Tier j : {Tier::One, Tier::Two}) {
    const ThetaCoefficients th = theta_coeffs(cfg, j, cfg.cache_size(j));
    if (!(th.theta3 > 0.0)) throw std::domain_error("convergence condition requires theta3 > 0");
    value *= std::max(1.0, std::abs(1.0 - th.theta1 / th.theta3));
  }
  return {value, value < 4.0};
}

CachingMarginals best_response(const AsymptoticModel& model, Tier j, const CachingMarginals& t_jbar) {
  const auto& th = model.theta(j);
  const Eigen::VectorXd c = (th.theta2 * t_jbar.values().array() + th.theta3).matrix();
  const Eigen::VectorXd no_price = Eigen::VectorXd::Zero(model.n_files());
  return maximize_separable_ratio(model.popularity(), c, no_price, th.theta1, model.cache_size(j));
}

CachingMarginals best_response(const NetworkConfig& cfg, const PopularityModel& pop, Tier j,
                               const CachingMarginals& t_jbar) {
  require_positive_rate(cfg);
  if (t_jbar.size() != cfg.n_files || t_jbar.cache_size() != cfg.cache_size(other(j)))
    throw std::invalid_argument("best_response: opponent marginals do not match the configuration");
  return best_response(AsymptoticModel(cfg, pop), j, t_jbar);
}

GameResult best_response_dynamics(const NetworkConfig& cfg, const PopularityModel& pop,
                                  const std::pair<CachingMarginals, CachingMarginals>& init,
                                  const GameOptions& opts) {
  require_positive_rate(cfg);
  const auto& [init1, init2] = init;
  if (init1.size() != cfg.n_files || init2.size() != cfg.n_files || init1.cache_size() != cfg.k1 ||
      init2.cache_size() != cfg.k2)
    throw std::invalid_argument("initial strategies do not match the configuration");
  const AsymptoticModel model(cfg, pop);
  const ConvergenceCondition cond = convergence_condition(cfg);

  CachingMarginals t1 = init1;
  CachingMarginals t2 = init2;
  OptimizerTrace trace;
  trace.push_back({0, model.total(t1.values(), t2.values()), 0.0, std::nullopt});
  Status status = Status::MaxIterations;
  double prev_change = std::numeric_limits<double>::infinity();

  for (int t = 1; t <= opts.max_iter; ++t) {
    const Tier j = (t % 2 == 1) ? Tier::One : Tier::Two;
    CachingMarginals next = best_response(model, j, j == Tier::One ? t2 : t1);
    CachingMarginals& slot = (j == Tier::One) ? t1 : t2;
    const double change = (next.values() - slot.values()).cwiseAbs().maxCoeff();
    slot = std::move(next);
    trace.push_back({t, model.total(t1.values(), t2.values()), change, j});
    // T(t+2) vs T(t) differs only in the two tiers touched by the last two updates.
    if (t >= 2 && std::max(change, prev_change) <= opts.tol) {
      status = Status::Converged;
      break;
    }
    prev_change = change;
  }

  GameResult out{std::move(t1), std::move(t2), 0.0, 0.0, std::move(trace), status, cond.value, cond.holds};
  out.utility1 = model.tier_utility(Tier::One, out.t1.values(), out.t2.values());
  out.utility2 = model.tier_utility(Tier::Two, out.t2.values(), out.t1.values());
  return out;
}

bool verify_ne(const NetworkConfig& cfg, const PopularityModel& pop, const CachingMarginals& t1,
               const CachingMarginals& t2, double tol) {
  require_positive_rate(cfg);
  const AsymptoticModel model(cfg, pop);
  const CachingMarginals br1 = best_response(model, Tier::One, t2);
  const CachingMarginals br2 = best_response(model, Tier::Two, t1);
  return (br1.values() - t1.values()).cwiseAbs().maxCoeff() <= tol &&
         (br2.values() - t2.values()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace hetcache
