#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "hetcache/model.hpp"

namespace hetcache::testing {

inline NetworkConfig fig2_config(double snr_db = 120.0, double lambda_u = 1e-5) {
  NetworkConfig c;
  c.lambda1 = 5e-7;
  c.lambda2 = 3e-6;
  c.lambda_u = lambda_u;
  c.p1 = std::pow(10.0, 1.5);
  c.p2 = 1.0;
  c.alpha = 4.0;
  c.w = 2e7;
  c.tau = 3.5e5;
  c.n0 = c.p2 / std::pow(10.0, snr_db / 10.0);
  c.n_files = 10;
  c.k1 = 3;
  c.k2 = 2;
  return c;
}

inline NetworkConfig default_config(int k1 = 55, int k2 = 35) {
  NetworkConfig c;
  c.lambda1 = 5e-7;
  c.lambda2 = 3e-6;
  c.lambda_u = 1e-4;
  c.p1 = std::pow(10.0, 1.6);
  c.p2 = 1.0;
  c.alpha = 4.0;
  c.w = 2e7;
  c.tau = 4e4;
  c.n0 = 0.0;
  c.n_files = 500;
  c.k1 = k1;
  c.k2 = k2;
  return c;
}

// Small instance with the fig2 physical layer.
inline NetworkConfig small_config(int n, int k1, int k2) {
  NetworkConfig c = fig2_config();
  c.n0 = 0.0;
  c.n_files = n;
  c.k1 = k1;
  c.k2 = k2;
  return c;
}

// Random interior point of the capped simplex: a scaled Dirichlet draw with
// any mass above 1 spread over the files that have headroom.
inline CachingMarginals random_marginals(int n, int k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  v *= k / v.sum();
  for (int pass = 0; pass < 100 && (v.array() > 1.0).any(); ++pass) {
    double excess = 0.0;
    for (int i = 0; i < n; ++i)
      if (v[i] > 1.0) {
        excess += v[i] - 1.0;
        v[i] = 1.0;
      }
    double room = (1.0 - v.array()).sum();
    for (int i = 0; i < n; ++i) v[i] += excess * (1.0 - v[i]) / room;
  }
  v = v.cwiseMin(1.0);
  v *= k / v.sum();
  return CachingMarginals(v.cwiseMin(1.0), k);
}

}  // namespace hetcache::testing
