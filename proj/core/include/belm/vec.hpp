#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace belm {

// State vectors are plain dense doubles; every step kernel is elementwise.
using Vec = std::vector<double>;

inline double inf_norm(const Vec& v) {
  double m = 0.0;
  for (double x : v) {
    const double a = std::fabs(x);
    if (a > m) m = a;
  }
  return m;
}

// Relative infinity-norm error of `a` against reference `b`. The floor keeps
// the quotient defined when the reference is exactly zero.
inline double rel_err_inf(const Vec& a, const Vec& b) {
  double num = 0.0;
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t c = 0; c < n; ++c) {
    const double d = std::fabs(a[c] - b[c]);
    if (d > num) num = d;
  }
  const double den = inf_norm(b);
  return num / (den > 1e-300 ? den : 1e-300);
}

inline bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace belm
