#pragma once

#include <cstdint>
#include <vector>

#include "belm/schedule.hpp"
#include "belm/vec.hpp"

namespace belm {

// Abstract noise predictor eps(x, i). Implementations must be deterministic
// (identical inputs give bit-identical outputs) and stateless, so they can be
// evaluated concurrently from several threads.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual Vec eval(const Vec& x, int i) const = 0;
};

// Centered Gaussian data with standard deviation s. The marginal score is
// analytic, so the probability-flow map between any two indices is the exact
// scaling by marginal standard deviations.
struct GaussianProblem {
  double s = 1.0;
  const NoiseSchedule* schedule = nullptr;
  int d = 1;
};

// eps(x, i) = sigma_i * x / (alpha_i^2 s^2 + sigma_i^2), componentwise.
Vec gaussian_eps(const Vec& x, int i, const GaussianProblem& problem);

// Exact flow map: x_from * std_to / std_from with std_i = sqrt(alpha_i^2 s^2 +
// sigma_i^2).
Vec gaussian_exact_flow(const Vec& x_from, int i_from, int i_to, const GaussianProblem& problem);

// Manufactured problem whose scaled solution is a polynomial of sigma-bar:
// x-bar(sbar) = P(sbar) * (1,...,1) with P given by `coeffs` (c0 + c1 t + ...).
struct PolynomialProblem {
  std::vector<double> coeffs;
  const NoiseSchedule* schedule = nullptr;
};

double polynomial_value(const PolynomialProblem& problem, double sbar);
double polynomial_derivative(const PolynomialProblem& problem, double sbar);

// eps(x, i) = P'(sbar_i) * (1,...,1), ignoring x.
Vec polynomial_eps(const Vec& x, int i, const PolynomialProblem& problem);

// Deterministic smooth nonlinear field with seed-derived phases:
//   eps_c = sin(x_c + phi_c) + 0.5 cos(x_{(c+1) mod d} - psi_c) + 0.25 sin(sbar_i + c)
// Bounded by 1.75 and Lipschitz (constant <= 1.5 componentwise) in x.
Vec synthetic_eps(const Vec& x, int i, std::uint64_t seed, const NoiseSchedule& schedule);

class GaussianPredictor : public NoisePredictor {
 public:
  explicit GaussianPredictor(GaussianProblem problem);
  Vec eval(const Vec& x, int i) const override { return gaussian_eps(x, i, problem_); }
  const GaussianProblem& problem() const { return problem_; }

 private:
  GaussianProblem problem_;
};

class PolynomialPredictor : public NoisePredictor {
 public:
  explicit PolynomialPredictor(PolynomialProblem problem);
  Vec eval(const Vec& x, int i) const override { return polynomial_eps(x, i, problem_); }
  const PolynomialProblem& problem() const { return problem_; }

 private:
  PolynomialProblem problem_;
};

class SyntheticPredictor : public NoisePredictor {
 public:
  SyntheticPredictor(std::uint64_t seed, const NoiseSchedule* schedule);
  Vec eval(const Vec& x, int i) const override { return synthetic_eps(x, i, seed_, *schedule_); }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  const NoiseSchedule* schedule_;
};

// eps identically zero: the flow map is the identity in x-bar coordinates.
class ZeroPredictor : public NoisePredictor {
 public:
  Vec eval(const Vec& x, int) const override { return Vec(x.size(), 0.0); }
};

// State-independent constant predictor, useful for exactness checks.
class ConstantPredictor : public NoisePredictor {
 public:
  explicit ConstantPredictor(Vec value) : value_(std::move(value)) {}
  Vec eval(const Vec&, int) const override { return value_; }

 private:
  Vec value_;
};

}  // namespace belm
