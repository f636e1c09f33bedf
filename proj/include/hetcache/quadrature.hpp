#pragma once

#include <cmath>
#include <stdexcept>

namespace hetcache {

/// Adaptive Simpson quadrature with Richardson correction. Throws
/// std::runtime_error when the recursion depth limit is hit before the
/// local error estimate drops below tolerance.
template <typename F>
class AdaptiveSimpson {
 public:
  AdaptiveSimpson(F f, double rel_tol, double abs_tol, int max_depth = 50)
      : f_(std::move(f)), rel_tol_(rel_tol), abs_tol_(abs_tol), max_depth_(max_depth) {}

  double integrate(double a, double b) {
    const double fa = f_(a);
    const double fb = f_(b);
    const double m = 0.5 * (a + b);
    const double fm = f_(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Coarse pass to anchor the relative tolerance.
    const double scale = std::abs(whole);
    const double tol = std::max(rel_tol_ * scale, abs_tol_);
    return recurse(a, b, fa, fm, fb, whole, tol, 0);
  }

 private:
  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f_(lm);
    const double frm = f_(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= 4 && std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= max_depth_) throw std::runtime_error("adaptive Simpson: maximum refinement reached");
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }

  F f_;
  double rel_tol_;
  double abs_tol_;
  int max_depth_;
};

template <typename F>
double adaptive_simpson(F f, double a, double b, double rel_tol, double abs_tol = 0.0) {
  return AdaptiveSimpson<F>(std::move(f), rel_tol, abs_tol).integrate(a, b);
}

}  // namespace hetcache
