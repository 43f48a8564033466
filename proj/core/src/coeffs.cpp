#include "belm/coeffs.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "belm/errors.hpp"

namespace belm {

namespace {

using LD = long double;

std::size_t idx(int r, int c, int n) {
  return static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c);
}

// Gaussian elimination with partial pivoting over long double. Mutates copies.
std::vector<LD> gepp(std::vector<LD> a, std::vector<LD> b, int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    LD best = fabsl(a[idx(col, col, n)]);
    for (int r = col + 1; r < n; ++r) {
      const LD v = fabsl(a[idx(r, col, n)]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-14L) {
      throw SingularError("solve_dense: pivot magnitude below 1e-14 at column " +
                          std::to_string(col) + " (degenerate step grid)");
    }
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(a[idx(col, c, n)], a[idx(piv, c, n)]);
      std::swap(b[static_cast<std::size_t>(col)], b[static_cast<std::size_t>(piv)]);
    }
    for (int r = col + 1; r < n; ++r) {
      const LD f = a[idx(r, col, n)] / a[idx(col, col, n)];
      if (f == 0.0L) continue;
      for (int c = col; c < n; ++c) a[idx(r, c, n)] -= f * a[idx(col, c, n)];
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<LD> x(static_cast<std::size_t>(n));
  for (int r = n - 1; r >= 0; --r) {
    LD acc = b[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < n; ++c) acc -= a[idx(r, c, n)] * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(r)] = acc / a[idx(r, r, n)];
  }
  return x;
}

// Elimination plus two passes of iterative refinement. Narrowing the solution
// to double sets the accuracy floor (~||A|| * eps * ||x||), and on
// ill-conditioned step grids a single elimination pass lands above it;
// refinement pulls the extended-precision solution well below so the narrowed
// result sits at the floor. An exact system (zero residual) refines by zero.
std::vector<LD> gepp_refined(const std::vector<LD>& a, const std::vector<LD>& b, int n) {
  std::vector<LD> x = gepp(a, b, n);
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<LD> r(static_cast<std::size_t>(n));
    for (int row = 0; row < n; ++row) {
      LD acc = -b[static_cast<std::size_t>(row)];
      for (int c = 0; c < n; ++c) acc += a[idx(row, c, n)] * x[static_cast<std::size_t>(c)];
      r[static_cast<std::size_t>(row)] = acc;
    }
    const std::vector<LD> d = gepp(a, r, n);
    for (int c = 0; c < n; ++c) x[static_cast<std::size_t>(c)] -= d[static_cast<std::size_t>(c)];
  }
  return x;
}

LD residual_inf(const std::vector<LD>& a, const std::vector<LD>& b, const std::vector<LD>& x,
                int n) {
  LD worst = 0.0L;
  for (int r = 0; r < n; ++r) {
    LD acc = -b[static_cast<std::size_t>(r)];
    for (int c = 0; c < n; ++c) acc += a[idx(r, c, n)] * x[static_cast<std::size_t>(c)];
    if (fabsl(acc) > worst) worst = fabsl(acc);
  }
  return worst;
}

LD inf_norm_ld(const std::vector<LD>& v) {
  LD m = 0.0L;
  for (LD x : v) {
    if (fabsl(x) > m) m = fabsl(x);
  }
  return m;
}

// Order-cancellation system in long double: row 0 is sum(a) = 1, row l
// cancels the order-l term. H_j is the cumulative span h_i + ... + h_{i+j-1}.
void assemble_belmk(const std::vector<LD>& hs, std::vector<LD>& a, std::vector<LD>& b) {
  const int k = static_cast<int>(hs.size());
  const int n = 2 * k - 1;
  a.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0L);
  b.assign(static_cast<std::size_t>(n), 0.0L);
  b[0] = 1.0L;
  std::vector<LD> H(static_cast<std::size_t>(k));
  LD run = 0.0L;
  for (int j = 1; j <= k; ++j) {
    run += hs[static_cast<std::size_t>(j) - 1];
    H[static_cast<std::size_t>(j) - 1] = run;
  }
  for (int j = 1; j <= k; ++j) a[idx(0, j - 1, n)] = 1.0L;
  LD lfact = 1.0L;
  for (int l = 1; l <= n - 1; ++l) {
    lfact *= static_cast<LD>(l);
    const LD lm1fact = lfact / static_cast<LD>(l);
    for (int j = 1; j <= k; ++j) {
      a[idx(l, j - 1, n)] = powl(H[static_cast<std::size_t>(j) - 1], static_cast<LD>(l)) / lfact;
    }
    for (int j = 1; j <= k - 1; ++j) {
      a[idx(l, k + j - 1, n)] = hs[static_cast<std::size_t>(j) - 1] *
                                powl(H[static_cast<std::size_t>(j) - 1], static_cast<LD>(l - 1)) /
                                lm1fact;
    }
  }
}

void check_positive_steps(const std::vector<double>& hs, const char* who) {
  for (double h : hs) {
    if (h == 0.0) throw SingularError(std::string(who) + ": zero step makes the system singular");
    if (!(h > 0.0)) throw ConfigError(std::string(who) + ": steps must be positive");
  }
}

}  // namespace

Belm2Coeffs belm2_optimal(double h_i, double h_ip1) {
  if (h_ip1 == 0.0) throw SingularError("belm2_optimal: h_ip1 = 0 divides the closed form");
  if (!(h_i > 0.0) || !(h_ip1 > 0.0)) {
    throw ConfigError("belm2_optimal: steps must be positive");
  }
  Belm2Coeffs c;
  c.a1 = (h_ip1 * h_ip1 - h_i * h_i) / (h_ip1 * h_ip1);
  c.a2 = (h_i * h_i) / (h_ip1 * h_ip1);
  c.b1 = -(h_i + h_ip1) / h_ip1;
  return c;
}

BelmKCoeffs belm3_optimal(double h_i, double h_ip1, double h_ip2) {
  check_positive_steps({h_i, h_ip1, h_ip2}, "belm3_optimal");
  const LD hi = static_cast<LD>(h_i);
  const LD h1 = static_cast<LD>(h_ip1);
  const LD h2 = static_cast<LD>(h_ip2);
  const LD s01 = hi + h1;        // span of two steps
  const LD s12 = h1 + h2;        // span of the upper two steps
  const LD s012 = hi + h1 + h2;  // full span

  const LD a1 = -(s01 * s01 *
                  (3.0L * hi * hi * h1 + 2.0L * hi * hi * h2 + 2.0L * hi * h1 * h1 +
                   4.0L * hi * h1 * h2 + 2.0L * hi * h2 * h2 - h1 * h1 * h1 -
                   2.0L * h1 * h1 * h2 - h1 * h2 * h2)) /
                (h1 * h1 * h1 * s12 * s12);
  const LD a2 = (hi * hi *
                 (-hi * hi * h1 + 2.0L * hi * hi * h2 - 2.0L * hi * h1 * h1 +
                  4.0L * hi * h1 * h2 + 2.0L * hi * h2 * h2 - h1 * h1 * h1 +
                  2.0L * h1 * h1 * h2 + 3.0L * h1 * h2 * h2)) /
                (h1 * h1 * h1 * h2 * h2);
  const LD a3 = (hi * hi * s01 * s01) / (h2 * h2 * s12 * s12);
  const LD b1 = -(s01 * s01 * s012) / (h1 * h1 * s12);
  const LD b2 = -(hi * hi * s01 * s012) / (h1 * h1 * h1 * h2);

  BelmKCoeffs c;
  c.k = 3;
  c.a = {static_cast<double>(a1), static_cast<double>(a2), static_cast<double>(a3)};
  c.b = {static_cast<double>(b1), static_cast<double>(b2)};
  return c;
}

DenseSystem belmk_system(const std::vector<double>& hs) {
  const int k = static_cast<int>(hs.size());
  if (k < 2) {
    throw ConfigError("belmk_system: need k >= 2 steps, got " + std::to_string(k));
  }
  check_positive_steps(hs, "belmk_system");
  std::vector<LD> a, b;
  std::vector<LD> hl(hs.begin(), hs.end());
  assemble_belmk(hl, a, b);
  DenseSystem sys;
  sys.n = 2 * k - 1;
  sys.matrix.assign(a.begin(), a.end());
  sys.rhs.assign(b.begin(), b.end());
  return sys;
}

std::vector<double> solve_dense(const DenseSystem& system) {
  const int n = system.n;
  if (n < 1 || n > 21) {
    throw ConfigError("solve_dense: system size must be in 1..21, got " + std::to_string(n));
  }
  if (system.matrix.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n) ||
      system.rhs.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("solve_dense: matrix/rhs shapes do not match n");
  }
  std::vector<LD> a(system.matrix.begin(), system.matrix.end());
  std::vector<LD> b(system.rhs.begin(), system.rhs.end());
  const std::vector<LD> x = gepp_refined(a, b, n);
  // The gate polices the solver itself, so it is evaluated on the extended-
  // precision solution (rounding x to double would re-add ~||A||*eps*||x||).
  const LD res = residual_inf(a, b, x, n);
  const LD gate = 1e-10L * inf_norm_ld(b);
  if (!(res <= gate)) {
    throw NumericalError("solve_dense: residual " + std::to_string(static_cast<double>(res)) +
                         " exceeds 1e-10 * ||rhs||");
  }
  return std::vector<double>(x.begin(), x.end());
}

BelmKCoeffs belmk_optimal(const std::vector<double>& hs) {
  const int k = static_cast<int>(hs.size());
  if (k < 2) {
    throw ConfigError("belmk_optimal: need k >= 2 steps, got " + std::to_string(k));
  }
  if (k > 11) {
    throw ConfigError("belmk_optimal: k must be <= 11, got " + std::to_string(k));
  }
  check_positive_steps(hs, "belmk_optimal");
  // Solve the narrowed system rather than a private extended-precision
  // re-assembly: the double matrix is the published artifact (CSV output,
  // cross-checks), and a solution to a slightly different matrix carries a
  // narrowing error ~eps*|A|*|x| that dominates its residual on
  // ill-conditioned step grids.
  const std::vector<double> x = solve_dense(belmk_system(hs));
  BelmKCoeffs c;
  c.k = k;
  c.a.assign(x.begin(), x.begin() + k);
  c.b.assign(x.begin() + k, x.end());
  return c;
}

Belm2Coeffs bdia_as_belm(double gamma, const NoiseSchedule& schedule, int i) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("bdia_as_belm: gamma must lie in [0, 1]");
  }
  const int N = schedule.N();
  if (i < 1 || i > N - 1) {
    throw ConfigError("bdia_as_belm: index must satisfy 1 <= i <= N-1, got " + std::to_string(i));
  }
  const Grid g = grid_of(schedule);
  const double ratio = schedule.alpha(i + 1) / schedule.alpha(i - 1);
  Belm2Coeffs c;
  c.a2 = gamma * ratio;
  c.a1 = 1.0 - c.a2;
  c.b1 = -1.0 - gamma * ratio * (g.step(i + 1) / g.step(i));
  return c;
}

Belm2Coeffs edict_phase_coeffs(double p, const NoiseSchedule& schedule, long long j) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("edict_phase_coeffs: mixing weight p must lie in (0, 1)");
  }
  const long long N = schedule.N();
  if (j < 0) throw ConfigError("edict_phase_coeffs: phase index must be >= 0");
  const long long m = j % 4;
  Belm2Coeffs c;
  if (m == 0) {
    const long long l = j / 4;
    if (l + 1 > N) {
      throw ConfigError("edict_phase_coeffs: phase index beyond the noise end");
    }
    c.a1 = 1.0 - p;
    c.a2 = p * std::sqrt(schedule.alpha(static_cast<int>(l) + 1) /
                         schedule.alpha(static_cast<int>(l)));
    c.b1 = 0.0;
  } else if (m == 3) {
    const long long l = (j + 1) / 4;
    if (l > N) throw ConfigError("edict_phase_coeffs: phase index beyond the noise end");
    c.a1 = 1.0 - p;
    c.a2 = p;
    c.b1 = 0.0;
  } else if (m == 2) {
    const long long l = (j + 2) / 4;
    if (l > N) throw ConfigError("edict_phase_coeffs: phase index beyond the noise end");
    const double r = std::sqrt(schedule.alpha(static_cast<int>(l) - 1) /
                               schedule.alpha(static_cast<int>(l)));
    c.a1 = 0.0;
    c.a2 = r;
    c.b1 = -2.0 * r;
  } else {  // m == 1
    const long long l = (j + 3) / 4;
    if (l > N) throw ConfigError("edict_phase_coeffs: phase index beyond the noise end");
    c.a1 = 0.0;
    c.a2 = 1.0;
    c.b1 = -2.0;
  }
  return c;
}

RootMatrix root_matrix(const BelmKCoeffs& coeffs) {
  const int k = coeffs.k;
  if (k < 1 || static_cast<int>(coeffs.a.size()) != k) {
    throw ConfigError("root_matrix: coefficient arrays do not match k");
  }
  RootMatrix r;
  r.k = k;
  r.m.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) r.m[idx(0, c, k)] = coeffs.a[static_cast<std::size_t>(c)];
  for (int row = 1; row < k; ++row) r.m[idx(row, row - 1, k)] = 1.0;
  return r;
}

RootMatrix root_matrix(const Belm2Coeffs& coeffs) {
  BelmKCoeffs k2;
  k2.k = 2;
  k2.a = {coeffs.a1, coeffs.a2};
  k2.b = {coeffs.b1};
  return root_matrix(k2);
}

std::vector<std::complex<double>> companion_roots(const RootMatrix& matrix) {
  const int k = matrix.k;
  if (k == 1) return {std::complex<double>(matrix.at(0, 0), 0.0)};
  // Characteristic polynomial: z^k - a1 z^{k-1} - ... - ak.
  std::vector<std::complex<double>> c(static_cast<std::size_t>(k) + 1);
  c[0] = 1.0;
  for (int j = 1; j <= k; ++j) c[static_cast<std::size_t>(j)] = -matrix.at(0, j - 1);
  const auto eval = [&](std::complex<double> z) {
    std::complex<double> v = c[0];
    for (int j = 1; j <= k; ++j) v = v * z + c[static_cast<std::size_t>(j)];
    return v;
  };
  // Durand-Kerner simultaneous iteration from spread-out starting points.
  std::vector<std::complex<double>> z(static_cast<std::size_t>(k));
  const std::complex<double> g(0.4, 0.9);
  std::complex<double> acc(1.0, 0.0);
  for (int m = 0; m < k; ++m) {
    acc *= g;
    z[static_cast<std::size_t>(m)] = acc;
  }
  for (int it = 0; it < 500; ++it) {
    double moved = 0.0;
    for (int m = 0; m < k; ++m) {
      std::complex<double> den(1.0, 0.0);
      for (int l = 0; l < k; ++l) {
        if (l != m) den *= z[static_cast<std::size_t>(m)] - z[static_cast<std::size_t>(l)];
      }
      if (std::abs(den) == 0.0) den = std::complex<double>(1e-30, 0.0);
      const std::complex<double> delta = eval(z[static_cast<std::size_t>(m)]) / den;
      z[static_cast<std::size_t>(m)] -= delta;
      moved = std::max(moved, std::abs(delta));
    }
    if (moved < 1e-14) break;
  }
  return z;
}

double spectral_radius(const RootMatrix& matrix) {
  double r = 0.0;
  for (const auto& z : companion_roots(matrix)) r = std::max(r, std::abs(z));
  return r;
}

StabilityReport stability_check(const Grid& grid) {
  const int N = grid.N();
  if (N < 2) {
    throw ConfigError("stability_check: need at least 2 steps, got " + std::to_string(N));
  }
  StabilityReport report;
  report.eta = 0.0;
  for (int i = 1; i <= N - 1; ++i) {
    const double r = (grid.step(i) * grid.step(i)) / (grid.step(i + 1) * grid.step(i + 1));
    if (r > report.eta) report.eta = r;
  }
  if (!(report.eta < 1.0)) {
    report.passed = false;
    report.reason =
        "eta >= 1: the similarity certificate needs steps strictly growing toward the "
        "noise end; no conclusion about instability";
    return report;
  }
  // H = [[1, q], [0, q]] with q = 2/(1-eta); H^-1 = [[1, -1], [0, 1/q]].
  const double q = 2.0 / (1.0 - report.eta);
  bool ok = true;
  for (int i = 1; i <= N - 1; ++i) {
    const double r = (grid.step(i) * grid.step(i)) / (grid.step(i + 1) * grid.step(i + 1));
    // M = H^-1 * R_i * H with R_i = [[1-r, r], [1, 0]].
    const double rh[2][2] = {{(1.0 - r) * 1.0, (1.0 - r) * q + r * q}, {1.0, q}};
    const double m00 = rh[0][0] - rh[1][0];
    const double m01 = rh[0][1] - rh[1][1];
    const double m10 = rh[1][0] / q;
    const double m11 = rh[1][1] / q;
    const double col0 = std::fabs(m00) + std::fabs(m10);
    const double col1 = std::fabs(m01) + std::fabs(m11);
    const double norm1 = std::max(col0, col1);
    report.norms.push_back(norm1);
    if (!(norm1 <= 1.0 + 1e-12)) ok = false;
  }
  report.passed = ok;
  report.reason = ok ? "" : "a step-matrix norm exceeds 1";
  return report;
}

}  // namespace belm
