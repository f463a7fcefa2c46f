#pragma once

#include <cmath>
#include <functional>

// Finite-difference oracles used by the tests; forward-evaluation only, so
// they stay independent of every backward pass they arbitrate.

// Central difference, O(eps^2).
inline double fd_central(const std::function<double()>& eval, double* slot,
                         double eps = 1e-5) {
  const double saved = *slot;
  *slot = saved + eps;
  const double up = eval();
  *slot = saved - eps;
  const double down = eval();
  *slot = saved;
  return (up - down) / (2.0 * eps);
}

// Five-point central stencil, O(eps^4); needed where identities are asserted
// to 1e-12.
inline double fd_central5(const std::function<double(double)>& f, double x,
                          double eps = 1e-3) {
  return (-f(x + 2 * eps) + 8 * f(x + eps) - 8 * f(x - eps) + f(x - 2 * eps)) /
         (12.0 * eps);
}

inline double rel_error(double a, double b) {
  const double diff = std::abs(a - b);
  if (diff <= 1e-9) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}
