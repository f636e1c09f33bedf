#pragma once

namespace hetcache {

/// Beta function B(x,y) for x,y > 0. Throws std::domain_error otherwise.
double beta_fn(double x, double y);

/// Complementary incomplete Beta function
///   B'(x, y, z) = int_z^1 u^(x-1) (1-u)^(y-1) du,
/// for x, y in (0,1) and z in [0,1]. Evaluated through the regularized
/// incomplete beta continued fraction, relative error around 1e-13.
double beta_inc_comp(double x, double y, double z);

}  // namespace hetcache
