#pragma once

#include <complex>
#include <string>
#include <vector>

#include "belm/schedule.hpp"

namespace belm {

// Two-step coefficients in scaled (x-bar) form: the update reads
//   xbar_{i-1} = a1 * xbar_i + a2 * xbar_{i+1} + b1 * h_i * epsbar_i.
// Consistency requires a1 + a2 = 1; exact invertibility requires a2 != 0.
struct Belm2Coeffs {
  double a1 = 0.0;
  double a2 = 0.0;
  double b1 = 0.0;
};

// General k-step coefficients:
//   xbar_{i-1} = sum_j a_j xbar_{i+j-1} + sum_j b_j h_{i+j-1} epsbar_{i+j-1}
// with j = 1..k for a and j = 1..k-1 for b. Consistency: sum a_j = 1.
struct BelmKCoeffs {
  int k = 0;
  std::vector<double> a;  // a_1..a_k
  std::vector<double> b;  // b_1..b_{k-1}
};

// Row-major dense linear system A x = rhs.
struct DenseSystem {
  int n = 0;
  std::vector<double> matrix;  // n*n, row-major
  std::vector<double> rhs;     // n
};

// Order-optimal 2-step coefficients:
//   a1 = (h_{i+1}^2 - h_i^2)/h_{i+1}^2,  a2 = h_i^2/h_{i+1}^2,
//   b1 = -(h_i + h_{i+1})/h_{i+1}.
// Accurate to third order in the step sizes.
Belm2Coeffs belm2_optimal(double h_i, double h_ip1);

// Order-optimal 3-step coefficients from the closed form (fifth-order
// accurate). Evaluated in extended precision to keep cancellation in check.
BelmKCoeffs belm3_optimal(double h_i, double h_ip1, double h_ip2);

// The (2k-1)x(2k-1) order-cancellation system for k-step coefficients over
// steps hs = (h_i, ..., h_{i+k-1}). Row 0 is the consistency row sum(a) = 1;
// row l cancels the order-l Taylor term: the a-block entry for a_j is
// H_j^l / l! with H_j = h_i + ... + h_{i+j-1}, and the b-block entry for b_j
// is h_{i+j-1} * H_j^{l-1} / (l-1)!. Right-hand side is (1, 0, ..., 0).
DenseSystem belmk_system(const std::vector<double>& hs);

// Gaussian elimination with partial pivoting, performed in long double.
// Throws SingularError when a pivot falls below 1e-14 and NumericalError when
// the solver's own residual exceeds 1e-10 * ||rhs||_inf.
std::vector<double> solve_dense(const DenseSystem& system);

// Solves the k-step system for the order-optimal coefficients. The system is
// assembled and solved entirely in long double before rounding the
// coefficients to double.
BelmKCoeffs belmk_optimal(const std::vector<double>& hs);

// BDIA's update at index i written as 2-step coefficients on the x-bar grid:
//   a2 = gamma * alpha_{i+1}/alpha_{i-1},  a1 = 1 - a2,
//   b1 = -1 - gamma * (alpha_{i+1}/alpha_{i-1}) * (h_{i+1}/h_i).
// Requires 1 <= i <= N-1.
Belm2Coeffs bdia_as_belm(double gamma, const NoiseSchedule& schedule, int i);

// EDICT's four sub-updates per macro step form a 4-phase sequence of 2-step
// updates on an interleaved grid (two micro half-steps plus two mixing rows).
// Phase index j counts sub-updates from the data end; with l the macro index:
//   j = 4l   (second mixing row):   (1-p, p * sqrt(alpha_{l+1}/alpha_l), 0)
//   j = 4l-1 (first mixing row):    (1-p, p, 0)
//   j = 4l-2 (second half-step):    (0, sqrt(alpha_{l-1}/alpha_l), -2 sqrt(alpha_{l-1}/alpha_l))
//   j = 4l-3 (first half-step):     (0, 1, -2)
Belm2Coeffs edict_phase_coeffs(double p, const NoiseSchedule& schedule, long long j);

// Companion-form root matrix: first row (a_1 ... a_k), ones on the
// subdiagonal. Its eigenvalues are the characteristic roots of the recursion.
struct RootMatrix {
  int k = 0;
  std::vector<double> m;  // k*k, row-major

  double at(int r, int c) const {
    return m[static_cast<std::size_t>(r) * static_cast<std::size_t>(k) +
             static_cast<std::size_t>(c)];
  }
};

RootMatrix root_matrix(const BelmKCoeffs& coeffs);
RootMatrix root_matrix(const Belm2Coeffs& coeffs);

// Characteristic roots of the companion matrix (Durand-Kerner iteration).
std::vector<std::complex<double>> companion_roots(const RootMatrix& matrix);

double spectral_radius(const RootMatrix& matrix);

// Zero-stability certificate for the 2-step method on a grid. With
// r_i = h_i^2 / h_{i+1}^2 and eta = max_i r_i < 1, the similarity transform
// H = [[1, 2/(1-eta)], [0, 2/(1-eta)]] gives ||H^-1 R_i H||_1 <= 1 for every
// step matrix R_i = [[1-r_i, r_i], [1, 0]], which bounds perturbation growth
// by a constant. When eta >= 1 the certificate is inconclusive: passed is
// false and `reason` says why, but no instability is claimed.
struct StabilityReport {
  double eta = 0.0;
  std::vector<double> norms;  // ||H^-1 R_i H||_1 per interior step, i = 1..N-1
  bool passed = false;
  std::string reason;
};

StabilityReport stability_check(const Grid& grid);

}  // namespace belm
