#include "belm/schedule.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "belm/errors.hpp"

namespace belm {

namespace {

// Shared structural validation. `origin` names the constructor for messages.
void validate(const NoiseSchedule& s, const std::string& origin) {
  const std::size_t n = s.alphas.size();
  if (s.sigmas.size() != n) {
    throw ScheduleError(origin + ": alphas and sigmas must have equal lengths (got " +
                        std::to_string(n) + " and " + std::to_string(s.sigmas.size()) + ")");
  }
  if (n < 2) {
    throw ScheduleError(origin + ": need at least 2 entries (indices 0..N with N >= 1), got " +
                        std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double a = s.alphas[i];
    const double g = s.sigmas[i];
    if (!std::isfinite(a) || !std::isfinite(g)) {
      throw ScheduleError(origin + ": non-finite entry at index " + std::to_string(i));
    }
    if (!(a > 0.0)) {
      throw ScheduleError(origin + ": alpha must be positive, got " + std::to_string(a) +
                          " at index " + std::to_string(i));
    }
    if (g < 0.0) {
      throw ScheduleError(origin + ": sigma must be non-negative, got " + std::to_string(g) +
                          " at index " + std::to_string(i));
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(s.sbar(static_cast<int>(i)) > s.sbar(static_cast<int>(i) - 1))) {
      throw ScheduleError(origin + ": sigma-bar must be strictly increasing, violated at index " +
                          std::to_string(i));
    }
  }
}

}  // namespace

NoiseSchedule vp_linear_schedule(int N, double beta_start, double beta_end) {
  if (N < 2) {
    throw ConfigError("vp_linear_schedule: N must be >= 2, got " + std::to_string(N));
  }
  if (!std::isfinite(beta_start) || !std::isfinite(beta_end) || beta_start < 0.0 ||
      beta_end >= 1.0 || beta_start > beta_end) {
    throw ConfigError("vp_linear_schedule: need 0 <= beta_start <= beta_end < 1, got [" +
                      std::to_string(beta_start) + ", " + std::to_string(beta_end) + "]");
  }
  NoiseSchedule s;
  s.alphas.resize(static_cast<std::size_t>(N) + 1);
  s.sigmas.resize(static_cast<std::size_t>(N) + 1);
  s.alphas[0] = 1.0;
  s.sigmas[0] = 0.0;
  double abar = 1.0;
  for (int j = 0; j < N; ++j) {
    const double beta = beta_start + (beta_end - beta_start) * static_cast<double>(j) /
                                         static_cast<double>(N - 1);
    abar *= 1.0 - beta;
    s.alphas[static_cast<std::size_t>(j) + 1] = std::sqrt(abar);
    s.sigmas[static_cast<std::size_t>(j) + 1] = std::sqrt(1.0 - abar);
  }
  validate(s, "vp_linear_schedule");
  return s;
}

NoiseSchedule from_tables(std::vector<double> alphas, std::vector<double> sigmas) {
  NoiseSchedule s{std::move(alphas), std::move(sigmas)};
  validate(s, "from_tables");
  return s;
}

Grid grid_of(const NoiseSchedule& schedule) {
  const int N = schedule.N();
  Grid g;
  g.sbar.resize(static_cast<std::size_t>(N) + 1);
  g.h.resize(static_cast<std::size_t>(N));
  for (int i = 0; i <= N; ++i) {
    g.sbar[static_cast<std::size_t>(i)] = schedule.sbar(i);
  }
  for (int i = 1; i <= N; ++i) {
    g.h[static_cast<std::size_t>(i) - 1] =
        g.sbar[static_cast<std::size_t>(i)] - g.sbar[static_cast<std::size_t>(i) - 1];
  }
  return g;
}

ConcavityReport check_concavity(const NoiseSchedule& schedule) {
  const Grid g = grid_of(schedule);
  const int N = g.N();
  ConcavityReport report;
  report.satisfied = N >= 2;
  for (int i = 1; i < N; ++i) {
    // sbar[i+1] - 2 sbar[i] + sbar[i-1] = h_{i+1} - h_i
    const double d2 = g.step(i + 1) - g.step(i);
    report.second_differences.push_back(d2);
    if (!(d2 < 0.0)) report.satisfied = false;
  }
  return report;
}

}  // namespace belm
