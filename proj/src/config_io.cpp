#include "hetcache/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hetcache {

namespace {

using nlohmann::json;

double number_field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("config: missing key '") + key + "'");
  if (!j[key].is_number()) throw std::invalid_argument(std::string("config: '") + key + "' must be a number");
  return j[key].get<double>();
}

int integer_field(const json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("config: missing key '") + key + "'");
  if (!j[key].is_number_integer()) throw std::invalid_argument(std::string("config: '") + key + "' must be an integer");
  return j[key].get<int>();
}

}  // namespace

double noise_for_snr_db(const NetworkConfig& cfg, double snr_db) { return cfg.p2 / std::pow(10.0, snr_db / 10.0); }

LoadedConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

  static const char* known[] = {"lambda1", "lambda2", "lambda_u", "p1",      "p2", "alpha",     "w",
                                "tau",     "n0",      "snr_db",   "n_files", "k1", "k2", "popularity"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }

  NetworkConfig cfg;
  cfg.lambda1 = number_field(j, "lambda1");
  cfg.lambda2 = number_field(j, "lambda2");
  cfg.lambda_u = j.contains("lambda_u") ? number_field(j, "lambda_u") : 0.0;
  cfg.p1 = number_field(j, "p1");
  cfg.p2 = number_field(j, "p2");
  cfg.alpha = number_field(j, "alpha");
  cfg.w = number_field(j, "w");
  cfg.tau = number_field(j, "tau");
  cfg.n_files = integer_field(j, "n_files");
  cfg.k1 = integer_field(j, "k1");
  cfg.k2 = integer_field(j, "k2");
  if (j.contains("n0") && j.contains("snr_db")) throw std::invalid_argument("config: give either 'n0' or 'snr_db'");
  if (j.contains("n0")) cfg.n0 = number_field(j, "n0");
  if (j.contains("snr_db")) cfg.n0 = noise_for_snr_db(cfg, number_field(j, "snr_db"));

  if (!j.contains("popularity") || !j["popularity"].is_object())
    throw std::invalid_argument("config: 'popularity' must be {\"zipf\": gamma} or {\"explicit\": [...]}");
  const json& p = j["popularity"];
  std::optional<double> gamma;
  std::optional<PopularityModel> pop;
  if (p.size() == 1 && p.contains("zipf") && p["zipf"].is_number()) {
    gamma = p["zipf"].get<double>();
    if (cfg.n_files < 2) throw std::invalid_argument("config: n_files must be >= 2");
    pop = PopularityModel::zipf(cfg.n_files, *gamma);
  } else if (p.size() == 1 && p.contains("explicit") && p["explicit"].is_array()) {
    std::vector<double> a;
    for (const auto& v : p["explicit"]) {
      if (!v.is_number()) throw std::invalid_argument("config: explicit popularity entries must be numbers");
      a.push_back(v.get<double>());
    }
    pop = PopularityModel::from_probabilities(std::move(a));
  } else {
    throw std::invalid_argument("config: 'popularity' must be {\"zipf\": gamma} or {\"explicit\": [...]}");
  }
  LoadedConfig out{cfg, std::move(*pop), gamma};
  require_valid(out.cfg, out.pop);
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_marginals(std::ostream& os, const CachingMarginals& t1, const CachingMarginals& t2,
                     const std::vector<std::string>& comments) {
  if (t1.size() != t2.size()) throw std::invalid_argument("tier marginals differ in length");
  for (const auto& c : comments) os << "# " << c << '\n';
  char buf[96];
  for (int n = 0; n < t1.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g\n", n + 1, t1[n], t2[n]);
    os << buf;
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> read_marginals(std::istream& is) {
  std::vector<double> a, b;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    int n = 0;
    double x = 0.0, y = 0.0;
    std::string rest;
    if (!(ls >> n >> x >> y) || (ls >> rest))
      throw std::invalid_argument("marginals line " + std::to_string(lineno) + ": expected 'n T1 T2'");
    if (n != static_cast<int>(a.size()) + 1)
      throw std::invalid_argument("marginals line " + std::to_string(lineno) + ": file indices must run 1..N");
    a.push_back(x);
    b.push_back(y);
  }
  if (a.empty()) throw std::invalid_argument("marginals file has no entries");
  return {Eigen::Map<Eigen::VectorXd>(a.data(), a.size()), Eigen::Map<Eigen::VectorXd>(b.data(), b.size())};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> read_marginals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open marginals file " + path.string());
  return read_marginals(in);
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace hetcache
