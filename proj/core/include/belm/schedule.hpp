#pragma once

#include <vector>

namespace belm {

// Discrete noise schedule over indices 0..N. Index 0 is the data end
// (alpha_0 = 1, sigma_0 = 0 for variance-preserving families) and index N is
// the noise end. The integration variable is sigma-bar = sigma/alpha, which
// must be strictly increasing in the index.
struct NoiseSchedule {
  std::vector<double> alphas;  // size N+1, alpha_i > 0
  std::vector<double> sigmas;  // size N+1, sigma_i >= 0

  int N() const { return static_cast<int>(alphas.size()) - 1; }
  double alpha(int i) const { return alphas[static_cast<std::size_t>(i)]; }
  double sigma(int i) const { return sigmas[static_cast<std::size_t>(i)]; }
  double sbar(int i) const {
    return sigmas[static_cast<std::size_t>(i)] / alphas[static_cast<std::size_t>(i)];
  }
};

// Variance-preserving schedule with a linear beta ramp: beta_j = beta_start +
// (beta_end - beta_start) * j/(N-1) for j = 0..N-1, alpha-bar = prod(1-beta),
// prepended with the exact data point (alpha, sigma) = (1, 0).
// Throws ConfigError for N < 2, negative betas, beta >= 1, or start > end;
// degenerate tables (e.g. all-zero betas) are rejected by the same structural
// validation as from_tables.
NoiseSchedule vp_linear_schedule(int N, double beta_start, double beta_end);

// Builds a schedule from explicit tables, validating every invariant:
// equal lengths >= 2, finite entries, alpha > 0, sigma >= 0, and sigma-bar
// strictly increasing. Throws ScheduleError naming the violated invariant.
NoiseSchedule from_tables(std::vector<double> alphas, std::vector<double> sigmas);

// The sigma-bar grid of a schedule. h[i-1] = sbar(i) - sbar(i-1) > 0 is the
// step attached to index i (there are N steps for N+1 nodes).
struct Grid {
  std::vector<double> sbar;  // size N+1
  std::vector<double> h;     // size N

  int N() const { return static_cast<int>(h.size()); }
  // Step h_i for 1 <= i <= N.
  double step(int i) const { return h[static_cast<std::size_t>(i) - 1]; }
};

Grid grid_of(const NoiseSchedule& schedule);

// Second differences of the sigma-bar grid. The strict-concavity assumption
// used by some stability arguments requires every second difference to be
// strictly negative; `satisfied` reports exactly that.
struct ConcavityReport {
  std::vector<double> second_differences;  // sbar[i+1] - 2 sbar[i] + sbar[i-1]
  bool satisfied = false;
};

ConcavityReport check_concavity(const NoiseSchedule& schedule);

}  // namespace belm
