#include "belm/predictor.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "belm/errors.hpp"
#include "belm/rng.hpp"

namespace belm {

namespace {

void require_schedule(const NoiseSchedule* schedule, const char* who) {
  if (schedule == nullptr) {
    throw ConfigError(std::string(who) + ": problem has no schedule attached");
  }
}

void require_index(const NoiseSchedule& schedule, int i, const char* who) {
  if (i < 0 || i > schedule.N()) {
    throw ConfigError(std::string(who) + ": index " + std::to_string(i) +
                      " outside 0.." + std::to_string(schedule.N()));
  }
}

}  // namespace

Vec gaussian_eps(const Vec& x, int i, const GaussianProblem& problem) {
  require_schedule(problem.schedule, "gaussian_eps");
  require_index(*problem.schedule, i, "gaussian_eps");
  if (!(problem.s > 0.0)) {
    throw ConfigError("gaussian_eps: data standard deviation must be positive");
  }
  if (static_cast<int>(x.size()) != problem.d) {
    throw ConfigError("gaussian_eps: state dimension " + std::to_string(x.size()) +
                      " does not match problem dimension " + std::to_string(problem.d));
  }
  const double a = problem.schedule->alpha(i);
  const double g = problem.schedule->sigma(i);
  const double scale = g / (a * a * problem.s * problem.s + g * g);
  Vec out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = scale * x[c];
  return out;
}

Vec gaussian_exact_flow(const Vec& x_from, int i_from, int i_to, const GaussianProblem& problem) {
  require_schedule(problem.schedule, "gaussian_exact_flow");
  require_index(*problem.schedule, i_from, "gaussian_exact_flow");
  require_index(*problem.schedule, i_to, "gaussian_exact_flow");
  if (!(problem.s > 0.0)) {
    throw ConfigError("gaussian_exact_flow: data standard deviation must be positive");
  }
  if (static_cast<int>(x_from.size()) != problem.d) {
    throw ConfigError("gaussian_exact_flow: state dimension " + std::to_string(x_from.size()) +
                      " does not match problem dimension " + std::to_string(problem.d));
  }
  const auto std_at = [&](int i) {
    const double a = problem.schedule->alpha(i);
    const double g = problem.schedule->sigma(i);
    return std::sqrt(a * a * problem.s * problem.s + g * g);
  };
  const double ratio = std_at(i_to) / std_at(i_from);
  Vec out(x_from.size());
  for (std::size_t c = 0; c < x_from.size(); ++c) out[c] = ratio * x_from[c];
  return out;
}

double polynomial_value(const PolynomialProblem& problem, double sbar) {
  double v = 0.0;
  for (std::size_t m = problem.coeffs.size(); m-- > 0;) {
    v = v * sbar + problem.coeffs[m];
  }
  return v;
}

double polynomial_derivative(const PolynomialProblem& problem, double sbar) {
  double v = 0.0;
  for (std::size_t m = problem.coeffs.size(); m-- > 1;) {
    v = v * sbar + static_cast<double>(m) * problem.coeffs[m];
  }
  return v;
}

Vec polynomial_eps(const Vec& x, int i, const PolynomialProblem& problem) {
  require_schedule(problem.schedule, "polynomial_eps");
  require_index(*problem.schedule, i, "polynomial_eps");
  const double dp = polynomial_derivative(problem, problem.schedule->sbar(i));
  return Vec(x.size(), dp);
}

Vec synthetic_eps(const Vec& x, int i, std::uint64_t seed, const NoiseSchedule& schedule) {
  require_index(schedule, i, "synthetic_eps");
  const double sbar = schedule.sbar(i);
  const std::size_t d = x.size();
  Vec out(d);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < d; ++c) {
    const double phi = two_pi * rng::u01(rng::splitmix64(seed ^ rng::splitmix64(2 * c)));
    const double psi = two_pi * rng::u01(rng::splitmix64(seed ^ rng::splitmix64(2 * c + 1)));
    const double xn = x[(c + 1) % d];
    out[c] = std::sin(x[c] + phi) + 0.5 * std::cos(xn - psi) +
             0.25 * std::sin(sbar + static_cast<double>(c));
  }
  return out;
}

GaussianPredictor::GaussianPredictor(GaussianProblem problem) : problem_(problem) {
  require_schedule(problem_.schedule, "GaussianPredictor");
  if (!(problem_.s > 0.0)) {
    throw ConfigError("GaussianPredictor: data standard deviation must be positive");
  }
  if (problem_.d < 1) {
    throw ConfigError("GaussianPredictor: dimension must be >= 1");
  }
}

PolynomialPredictor::PolynomialPredictor(PolynomialProblem problem)
    : problem_(std::move(problem)) {
  require_schedule(problem_.schedule, "PolynomialPredictor");
  if (problem_.coeffs.empty()) {
    throw ConfigError("PolynomialPredictor: need at least one coefficient");
  }
}

SyntheticPredictor::SyntheticPredictor(std::uint64_t seed, const NoiseSchedule* schedule)
    : seed_(seed), schedule_(schedule) {
  require_schedule(schedule_, "SyntheticPredictor");
}

}  // namespace belm
