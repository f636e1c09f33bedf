#include "hetcache/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hetcache/analytic.hpp"
#include "hetcache/baselines.hpp"
#include "hetcache/config_io.hpp"
#include "hetcache/game.hpp"
#include "hetcache/joint.hpp"
#include "hetcache/simulator.hpp"

namespace hetcache::cli {

namespace {

constexpr const char* kCsvHeader = "param,value,design,q_total,q1,q2,ci_low,ci_high,iters,seed";
constexpr double kMonotoneSlack = 1e-12;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("HETCACHE_LOG");
  if (env == nullptr) return LogLevel::Error;
  const std::string v(env);
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  return LogLevel::Error;
}

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), level_(log_level()) {}
  void error(const std::string& msg) const { err_ << "hetcache: error: " << msg << '\n'; }
  void info(const std::string& msg) const {
    if (level_ >= LogLevel::Info) err_ << "hetcache: " << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::Debug) err_ << "hetcache: debug: " << msg << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

struct Options {
  std::string config;
  std::string out;
  std::string trace;
  std::string design = "uniform";
  std::string method = "bsum";
  std::string metric;
  std::string param;
  std::vector<double> values;
  std::vector<std::string> designs;
  std::uint64_t seed = 1;
  std::int64_t trials = 20000;
  int jobs = 1;
  double stepsize = 1000.0;
  std::optional<double> tol;  // unset: each algorithm's own default
  int max_iter = 10000;
  bool strict = false;
  std::optional<double> snr_db;
  std::optional<double> lambda_u;
  std::optional<double> window;
  std::optional<int> k1_offset;
};

GradientProjectionOptions gp_options(const Options& o) {
  GradientProjectionOptions g{.stepsize = o.stepsize, .max_iter = o.max_iter};
  if (o.tol) g.tol = *o.tol;
  return g;
}

BsumOptions bsum_options(const Options& o) {
  BsumOptions b{.max_iter = o.max_iter};
  if (o.tol) b.tol = *o.tol;
  return b;
}

GameOptions game_options(const Options& o) {
  GameOptions g{.max_iter = o.max_iter};
  if (o.tol) g.tol = *o.tol;
  return g;
}

// A design's tier marginals plus optimizer bookkeeping.
struct DesignPoint {
  CachingMarginals t1;
  CachingMarginals t2;
  std::optional<int> iters;
  bool converged = true;
  bool uniform_combinations = false;
};

struct Row {
  std::string param;
  std::string value;
  std::string design;
  StpBreakdown q;
  std::optional<std::pair<double, double>> ci;
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
};

std::string csv_row(const Row& r) {
  std::string s = r.param + ',' + r.value + ',' + r.design + ',' + format_number(r.q.q_total) + ',' +
                  format_number(r.q.q_tier1) + ',' + format_number(r.q.q_tier2) + ',';
  if (r.ci) s += format_number(r.ci->first) + ',' + format_number(r.ci->second);
  else s += ',';
  s += ',';
  if (r.iters) s += std::to_string(*r.iters);
  s += ',';
  if (r.seed) s += std::to_string(*r.seed);
  return s;
}

LoadedConfig load(const Options& o) {
  LoadedConfig lc = load_config(o.config);
  if (o.snr_db) lc.cfg.n0 = noise_for_snr_db(lc.cfg, *o.snr_db);
  if (o.lambda_u) lc.cfg.lambda_u = *o.lambda_u;
  require_valid(lc.cfg, lc.pop);
  return lc;
}

CachingMarginals iid_design(const PopularityModel& pop, int k) {
  if (k <= 3 || pop.size() <= 22) return iid_popularity_marginals(pop, k, IidExact{}).t;
  return iid_popularity_marginals(pop, k, IidQuadrature{}).t;
}

DesignPoint make_design(const std::string& name, const NetworkConfig& cfg, const PopularityModel& pop,
                        const Options& o, const Logger& log) {
  if (name == "uniform") {
    auto [t1, t2] = uniform_start(cfg);
    return {std::move(t1), std::move(t2), std::nullopt, true, true};
  }
  if (name == "most-popular")
    return {most_popular_marginals(pop, cfg.k1), most_popular_marginals(pop, cfg.k2), std::nullopt, true, false};
  if (name == "iid") return {iid_design(pop, cfg.k1), iid_design(pop, cfg.k2), std::nullopt, true, false};
  if (name == "joint" || name == "joint-gp") {
    const bool gp = name == "joint-gp" || o.method == "gp";
    OptimizerResult r = gp ? gradient_projection(cfg, pop, uniform_start(cfg), gp_options(o))
                           : bsum(cfg, pop, uniform_start(cfg), bsum_options(o));
    const int iters = static_cast<int>(r.trace.size()) - 1;
    log.debug(name + ": " + std::to_string(iters) + " iterations, " + to_string(r.status));
    return {std::move(r.t1), std::move(r.t2), iters, r.status == Status::Converged, false};
  }
  if (name == "ne") {
    GameResult g = best_response_dynamics(cfg, pop, uniform_start(cfg), game_options(o));
    const int iters = static_cast<int>(g.trace.size()) - 1;
    log.debug("ne: " + std::to_string(iters) + " iterations, " + to_string(g.status));
    return {std::move(g.t1), std::move(g.t2), iters, g.status == Status::Converged, false};
  }
  if (name == "equal") {
    EqualCacheResult e = equal_cache_optimal(cfg, pop);
    return {std::move(e.result.t1), std::move(e.result.t2), std::nullopt, true, false};
  }
  if (name.rfind("file:", 0) == 0) {
    auto [v1, v2] = read_marginals(std::filesystem::path(name.substr(5)));
    if (v1.size() != cfg.n_files) throw ValidationError("marginals file length does not match n_files");
    return {CachingMarginals(std::move(v1), cfg.k1), CachingMarginals(std::move(v2), cfg.k2), std::nullopt, true,
            false};
  }
  throw ValidationError("unknown design '" + name +
                        "' (expected uniform, most-popular, iid, joint, joint-gp, ne, equal or file:PATH)");
}

TierDesign tier_design(const DesignPoint& d, const NetworkConfig& cfg, Tier j, bool for_simulation) {
  const CachingMarginals& t = j == Tier::One ? d.t1 : d.t2;
  const int k = cfg.cache_size(j);
  if (d.uniform_combinations &&
      binomial_coefficient(cfg.n_files, k) <= static_cast<double>(CombinationDistribution::kMaxEntries))
    return CombinationDistribution::uniform(cfg.n_files, k);
  if (for_simulation) return t;
  return combinations_from_marginals_systematic(t);
}

struct Evaluation {
  StpBreakdown q;
  std::optional<std::pair<double, double>> ci;
  std::optional<std::uint64_t> seed;
  std::optional<StpEstimate> sim;
};

Evaluation evaluate(const std::string& metric, const DesignPoint& d, const NetworkConfig& cfg,
                    const PopularityModel& pop, const Options& o, int sim_workers) {
  Evaluation ev;
  if (metric == "asymptotic") {
    ev.q = stp_asymptotic(cfg, pop, d.t1, d.t2);
  } else if (metric == "general") {
    const auto c1 = std::get<CombinationDistribution>(tier_design(d, cfg, Tier::One, false));
    const auto c2 = std::get<CombinationDistribution>(tier_design(d, cfg, Tier::Two, false));
    ev.q = stp_general(cfg, pop, c1, c2);
  } else if (metric == "simulation") {
    const SimDesign design{tier_design(d, cfg, Tier::One, true), tier_design(d, cfg, Tier::Two, true)};
    const SimWindow window = o.window ? SimWindow{*o.window} : SimWindow::for_config(cfg);
    const StpEstimate est = estimate_stp(cfg, pop, design, window, o.trials, o.seed, sim_workers);
    ev.q = {est.mean, est.q_tier1, est.q_tier2};
    ev.ci = std::pair{est.ci_low, est.ci_high};
    ev.seed = o.seed;
    ev.sim = est;
  } else {
    throw ValidationError("unknown metric '" + metric + "' (expected asymptotic, general or simulation)");
  }
  return ev;
}

// Results go to --out when given, else to `out`.
void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + o.out);
  f << text;
}

void write_trace(const std::string& path, const OptimizerTrace& trace) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << "iteration,objective,max_change,active_tier\n";
  for (const auto& r : trace) {
    f << r.iteration << ',' << format_number(r.objective) << ',' << format_number(r.max_change) << ',';
    if (r.active_tier) f << tier_index(*r.active_tier) + 1;
    f << '\n';
  }
}

bool trace_non_decreasing(const OptimizerTrace& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].objective < trace[i - 1].objective - kMonotoneSlack) return false;
  return true;
}

int cmd_analyze(const Options& o, std::ostream& out, const Logger& log) {
  const LoadedConfig lc = load(o);
  const DesignPoint d = make_design(o.design, lc.cfg, lc.pop, o, log);
  std::vector<std::string> metrics;
  if (o.metric.empty() || o.metric == "both") metrics = {"general", "asymptotic"};
  else metrics = {o.metric};
  std::string text = std::string(kCsvHeader) + '\n';
  for (const auto& m : metrics) {
    if (m == "simulation") throw ValidationError("analyze does not simulate; use the simulate subcommand");
    const Evaluation ev = evaluate(m, d, lc.cfg, lc.pop, o, 1);
    text += csv_row({"metric", m, o.design, ev.q, ev.ci, d.iters, ev.seed}) + '\n';
  }
  emit(o, out, text);
  return (o.strict && !d.converged) ? kNotConverged : kOk;
}

int cmd_simulate(const Options& o, std::ostream& out, const Logger& log) {
  const LoadedConfig lc = load(o);
  const DesignPoint d = make_design(o.design, lc.cfg, lc.pop, o, log);
  const Evaluation ev = evaluate("simulation", d, lc.cfg, lc.pop, o, o.jobs);
  std::string text = "# window_side=" + format_number(ev.sim->window_side) + " trials=" + std::to_string(o.trials) +
                     " seed=" + std::to_string(o.seed) + '\n';
  text += std::string(kCsvHeader) + '\n';
  text += csv_row({"metric", "simulation", o.design, ev.q, ev.ci, d.iters, ev.seed}) + '\n';
  emit(o, out, text);
  log.info("simulated " + std::to_string(o.trials) + " trials, STP " + format_number(ev.q.q_total));
  return (o.strict && !d.converged) ? kNotConverged : kOk;
}

std::string marginals_text(const CachingMarginals& t1, const CachingMarginals& t2,
                           const std::vector<std::string>& comments) {
  std::ostringstream ss;
  write_marginals(ss, t1, t2, comments);
  return ss.str();
}

int cmd_optimize_joint(const Options& o, std::ostream& out, const Logger& log) {
  const LoadedConfig lc = load(o);
  if (o.method != "bsum" && o.method != "gp") throw ValidationError("--method must be bsum or gp");
  const OptimizerResult r =
      o.method == "gp" ? gradient_projection(lc.cfg, lc.pop, uniform_start(lc.cfg), gp_options(o))
                       : bsum(lc.cfg, lc.pop, uniform_start(lc.cfg), bsum_options(o));
  const int iters = static_cast<int>(r.trace.size()) - 1;
  const std::vector<std::string> comments = {
      "design joint-" + o.method, std::string("status ") + to_string(r.status),
      "iterations " + std::to_string(iters), "objective " + format_number(r.objective)};
  emit(o, out, marginals_text(r.t1, r.t2, comments));
  if (!o.trace.empty()) write_trace(o.trace, r.trace);
  log.info("joint-" + o.method + ": q_inf " + format_number(r.objective) + " after " + std::to_string(iters) +
           " iterations (" + to_string(r.status) + ")");
  if (!o.strict) return kOk;
  if (r.status != Status::Converged) return kNotConverged;
  if (o.method == "bsum" && !trace_non_decreasing(r.trace)) {
    log.error("BSUM objective decreased along the trace");
    return kNotConverged;
  }
  return kOk;
}

int cmd_optimize_equal(const Options& o, std::ostream& out, const Logger& log) {
  const LoadedConfig lc = load(o);
  if (lc.cfg.k1 != lc.cfg.k2)
    throw ValidationError("optimize-equal requires k1 == k2 (got k1=" + std::to_string(lc.cfg.k1) +
                          ", k2=" + std::to_string(lc.cfg.k2) + ")");
  const EqualCacheResult e = equal_cache_optimal(lc.cfg, lc.pop);
  const std::vector<std::string> comments = {"design equal", "status converged",
                                             "objective " + format_number(e.result.objective),
                                             "multiplier " + format_number(e.multiplier)};
  emit(o, out, marginals_text(e.result.t1, e.result.t2, comments));
  log.info("equal-cache optimum q_inf " + format_number(e.result.objective));
  return kOk;
}

int cmd_game(const Options& o, std::ostream& out, const Logger& log) {
  const LoadedConfig lc = load(o);
  const GameResult g = best_response_dynamics(lc.cfg, lc.pop, uniform_start(lc.cfg), game_options(o));
  const int iters = static_cast<int>(g.trace.size()) - 1;
  const std::vector<std::string> comments = {
      "design ne",
      std::string("status ") + to_string(g.status),
      "iterations " + std::to_string(iters),
      "utility1 " + format_number(g.utility1),
      "utility2 " + format_number(g.utility2),
      "condition_value " + format_number(g.condition_value),
      std::string("condition_holds ") + (g.condition_holds ? "true" : "false")};
  emit(o, out, marginals_text(g.t1, g.t2, comments));
  if (!o.trace.empty()) write_trace(o.trace, g.trace);
  log.info("best-response dynamics: " + std::string(to_string(g.status)) + " after " + std::to_string(iters) +
           " iterations; convergence condition " + format_number(g.condition_value) +
           (g.condition_holds ? " < 4 (holds)" : " >= 4 (does not hold)"));
  return (o.strict && g.status != Status::Converged) ? kNotConverged : kOk;
}

void apply_sweep_value(const std::string& param, double v, const Options& o, NetworkConfig& cfg,
                       std::optional<PopularityModel>& pop) {
  auto as_int = [&](double x) {
    if (x != std::floor(x)) throw ValidationError(param + " values must be integers");
    return static_cast<int>(x);
  };
  if (param == "snr_db") {
    cfg.n0 = noise_for_snr_db(cfg, v);
  } else if (param == "lambda_u") {
    cfg.lambda_u = v;
  } else if (param == "k1") {
    cfg.k1 = as_int(v);
  } else if (param == "k2") {
    cfg.k2 = as_int(v);
    if (o.k1_offset) cfg.k1 = cfg.k2 + *o.k1_offset;
  } else if (param == "gamma") {
    pop = PopularityModel::zipf(cfg.n_files, v);
  } else {
    throw ValidationError("unknown sweep parameter '" + param + "' (expected snr_db, lambda_u, k1, k2 or gamma)");
  }
}

int cmd_sweep(const Options& o, std::ostream& out, const Logger& log) {
  const LoadedConfig lc = load(o);
  if (o.values.empty()) throw ValidationError("sweep needs --values");
  if (o.k1_offset && o.param != "k2") throw ValidationError("--k1-offset only applies to --param k2");
  const std::vector<std::string> designs = o.designs.empty() ? std::vector<std::string>{"joint"} : o.designs;
  const std::string metric = o.metric.empty() ? "asymptotic" : o.metric;

  struct Task {
    double value;
    std::string design;
  };
  std::vector<Task> tasks;
  for (double v : o.values)
    for (const auto& d : designs) tasks.push_back({v, d});

  // Validate every point up front so bad values fail before any work.
  for (double v : o.values) {
    NetworkConfig cfg = lc.cfg;
    std::optional<PopularityModel> pop;
    apply_sweep_value(o.param, v, o, cfg, pop);
    require_valid(cfg, pop ? *pop : lc.pop);
  }

  std::vector<std::string> rows(tasks.size());
  std::vector<char> converged(tasks.size(), 1);
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        NetworkConfig cfg = lc.cfg;
        std::optional<PopularityModel> pop;
        apply_sweep_value(o.param, tasks[i].value, o, cfg, pop);
        const PopularityModel& p = pop ? *pop : lc.pop;
        const DesignPoint d = make_design(tasks[i].design, cfg, p, o, log);
        const Evaluation ev = evaluate(metric, d, cfg, p, o, 1);
        rows[i] = csv_row({o.param, format_number(tasks[i].value), tasks[i].design, ev.q, ev.ci, d.iters, ev.seed});
        converged[i] = d.converged;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::string text = std::string(kCsvHeader) + '\n';
  for (const auto& r : rows) text += r + '\n';
  emit(o, out, text);
  log.info("sweep wrote " + std::to_string(rows.size()) + " rows");
  const bool all_converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
  return (o.strict && !all_converged) ? kNotConverged : kOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON network configuration")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "write results here instead of standard output");
  sub->add_option("--snr-db", o.snr_db, "override noise: P2/N0 in dB");
  sub->add_option("--lambda-u", o.lambda_u, "override user density")->check(CLI::NonNegativeNumber);
  sub->add_flag("--strict", o.strict, "exit 2 when an optimizer does not converge");
}

void add_optimizer(CLI::App* sub, Options& o) {
  sub->add_option("--tol", o.tol, "convergence tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", o.max_iter, "iteration limit")->check(CLI::PositiveNumber);
}

void add_method(CLI::App* sub, Options& o) {
  sub->add_option("--method", o.method, "joint optimizer")->check(CLI::IsMember({"bsum", "gp"}));
  sub->add_option("--stepsize", o.stepsize, "gradient projection constant c")->check(CLI::PositiveNumber);
}

void add_simulation(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--trials", o.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--window", o.window, "window side in meters (default: 200 POAs in the sparser tier)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const Logger log(err);
  Options o;
  CLI::App app("Random caching designs for two-tier cache-enabled wireless multicast networks", "hetcache");
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "analytic STP of a design");
  add_common(analyze, o);
  add_optimizer(analyze, o);
  add_method(analyze, o);
  analyze->add_option("--design", o.design, "uniform, most-popular, iid, joint, joint-gp, ne, equal or file:PATH");
  analyze->add_option("--metric", o.metric, "general, asymptotic or both")
      ->check(CLI::IsMember({"general", "asymptotic", "both"}));

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo STP estimate of a design");
  add_common(simulate, o);
  add_optimizer(simulate, o);
  add_method(simulate, o);
  add_simulation(simulate, o);
  simulate->add_option("--design", o.design, "uniform, most-popular, iid, joint, joint-gp, ne, equal or file:PATH");

  auto* joint = app.add_subcommand("optimize-joint", "joint caching design (BSUM or gradient projection)");
  add_common(joint, o);
  add_optimizer(joint, o);
  add_method(joint, o);
  joint->add_option("--trace", o.trace, "write the per-iteration trace CSV here");

  auto* equal = app.add_subcommand("optimize-equal", "global optimum for equal cache sizes");
  add_common(equal, o);

  auto* game = app.add_subcommand("game", "Nash equilibrium of the two-operator caching game");
  add_common(game, o);
  add_optimizer(game, o);
  game->add_option("--trace", o.trace, "write the per-iteration trace CSV here");

  auto* sweep = app.add_subcommand("sweep", "evaluate designs over a parameter grid");
  add_common(sweep, o);
  add_optimizer(sweep, o);
  add_method(sweep, o);
  add_simulation(sweep, o);
  sweep->add_option("--param", o.param, "snr_db, lambda_u, k1, k2 or gamma")
      ->required()
      ->check(CLI::IsMember({"snr_db", "lambda_u", "k1", "k2", "gamma"}));
  sweep->add_option("--values", o.values, "comma-separated parameter values")->required()->delimiter(',');
  sweep->add_option("--designs", o.designs, "comma-separated designs")->delimiter(',');
  sweep->add_option("--metric", o.metric, "asymptotic (default), general or simulation")
      ->check(CLI::IsMember({"asymptotic", "general", "simulation"}));
  sweep->add_option("--k1-offset", o.k1_offset, "with --param k2, set k1 = k2 + offset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "hetcache: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kValidationError;
  }

  const std::map<const CLI::App*, std::function<int(const Options&, std::ostream&, const Logger&)>> handlers = {
      {analyze, cmd_analyze}, {simulate, cmd_simulate}, {joint, cmd_optimize_joint},
      {equal, cmd_optimize_equal}, {game, cmd_game}, {sweep, cmd_sweep}};
  try {
    for (const auto& [sub, fn] : handlers)
      if (sub->parsed()) return fn(o, out, log);
  } catch (const std::exception& e) {
    // Bad inputs (configs, flag values, designs) and infeasible requests
    // such as tau = 0 for the optimizers all land here.
    log.error(e.what());
    return kValidationError;
  }
  return kValidationError;
}

}  // namespace hetcache::cli
