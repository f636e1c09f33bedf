#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetcache/model.hpp"

namespace hetcache {

/// A network configuration read from JSON. Keys match the NetworkConfig
/// fields; noise is given as `n0` (watts) or `snr_db` (P2/N0 in dB), and
/// popularity as {"zipf": gamma} or {"explicit": [a_1, ..., a_N]}.
struct LoadedConfig {
  NetworkConfig cfg;
  PopularityModel pop;
  std::optional<double> zipf_gamma;
};

/// Throws std::invalid_argument naming the offending key.
LoadedConfig parse_config(const std::string& json_text);
LoadedConfig load_config(const std::filesystem::path& path);

/// N0 = P2 / 10^(snr_db/10).
double noise_for_snr_db(const NetworkConfig& cfg, double snr_db);

/// Plain-text marginals: `#` comment lines, then one "n T1_n T2_n" line per
/// file with n starting at 1.
void write_marginals(std::ostream& os, const CachingMarginals& t1, const CachingMarginals& t2,
                     const std::vector<std::string>& comments = {});
std::pair<Eigen::VectorXd, Eigen::VectorXd> read_marginals(std::istream& is);
std::pair<Eigen::VectorXd, Eigen::VectorXd> read_marginals(const std::filesystem::path& path);

/// %.12g, the precision used for every CSV number.
std::string format_number(double x);

}  // namespace hetcache
