#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "belm/predictor.hpp"
#include "belm/samplers.hpp"
#include "belm/schedule.hpp"
#include "belm/vec.hpp"

namespace belm {

// ---- order fitting --------------------------------------------------------

// Least-squares slope of log(error) against log(h). Pairs whose error is at
// or below 100 ulps (100 * DBL_EPSILON) are excluded as rounding noise;
// throws InsufficientDataError when fewer than three usable pairs remain.
double fit_order(const std::vector<double>& hs, const std::vector<double>& errors);

// ---- convergence ----------------------------------------------------------

struct ConvergenceRow {
  int N = 0;
  double h_max = 0.0;
  double global_error = 0.0;    // at the data end, versus the exact flow
  double max_grid_error = 0.0;  // worst error over all grid levels
};

struct ConvergenceReport {
  std::string method;
  std::string problem;
  std::vector<ConvergenceRow> rows;
  std::optional<double> fitted_order;  // absent when all errors are rounding-level
};

struct ConvergenceOptions {
  double sbar_max = 2.0;  // sigma-bar at the noise end (shared by all N)
  double power = 1.6;     // grid clustering exponent: sbar_i = sbar_max (i/N)^power
  // Scaled reference state at the data end; cycled/truncated to dimension d.
  // A zero vector makes the exact flow and every sampled trajectory vanish.
  Vec xbar_ref = {0.7, -1.1, 0.4, 1.3};
};

// Samples the Gaussian problem on a family of smooth grids that share their
// endpoints, then fits the observed order of the data-end error against the
// largest step. The prototype supplies s and d; schedules are built per N.
ConvergenceReport convergence_study(const Method& method, const GaussianProblem& prototype,
                                    const std::vector<int>& Ns,
                                    const ConvergenceOptions& options = {});

// ---- local truncation error ------------------------------------------------

struct LteRow {
  double h = 0.0;
  double error = 0.0;
};

struct LteReport {
  std::string method;
  std::string problem;
  std::vector<LteRow> rows;
  std::optional<double> fitted_order;
};

// Local truncation error measured as the recursion defect: exact states of a
// problem with a known flow are substituted into the method's multistep form,
// and the residual is scaled back to unscaled coordinates. For EDICT the
// defect is the worst row of its four-phase interleaved form.
LteReport lte_study(const Method& method, const GaussianProblem& prototype,
                    const std::vector<double>& hs, double sbar_base = 0.8);
LteReport lte_study(const Method& method, const PolynomialProblem& prototype,
                    const std::vector<double>& hs, double sbar_base = 0.5);

// ---- roundtrip --------------------------------------------------------------

struct RoundtripRow {
  std::string method;
  int N = 0;
  int trials = 0;
  // invert-then-sample: reconstruct the data-end state from its own inversion
  double reconstruction_max_rel = 0.0;
  double reconstruction_mse = 0.0;
  // sample-then-invert: recover the noise-end state of a sampled trajectory
  double forward_max_rel = 0.0;
  double forward_mse = 0.0;
  std::string note;  // non-empty when the method was skipped
  bool skipped = false;
};

struct RoundtripReport {
  std::vector<RoundtripRow> rows;
};

// Runs both roundtrip compositions per method over `trials` random states
// drawn from a counter-based generator. Multistep history is stored on the
// first leg and replayed on the second, so the measurement isolates the
// method's own invertibility. Methods with no inverse (BDIA gamma = 0) are
// skipped with a note instead of failing the whole study.
RoundtripReport roundtrip_study(const std::vector<Method>& methods, const NoisePredictor& eps,
                                const NoiseSchedule& schedule, int trials, int d,
                                std::uint64_t seed);

// ---- perturbation growth ----------------------------------------------------

struct PerturbationReport {
  std::string method;
  double delta = 0.0;
  int trials = 0;
  double k_hat = 0.0;                    // max over steps and trials
  std::vector<double> per_trial_k_hat;
};

// Empirical zero-stability probe: every starting slot of the method is
// shifted by delta in scaled coordinates and the worst divergence of the
// paired trajectories, measured in scaled coordinates relative to delta, is
// reported. delta = 0 runs identical trajectories and reports 0.
PerturbationReport perturbation_study(const Method& method, const NoisePredictor& eps,
                                      const NoiseSchedule& schedule, double delta, int trials,
                                      int d, std::uint64_t seed = 0x5eed);

// ---- deterministic output ---------------------------------------------------

// Shortest round-trippable decimal (%.17g) used for every number we write.
std::string format_g17(double v);

// 64-bit FNV-1a over a byte string / file contents (hex, lowercase).
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string fnv1a64_hex_of_file(const std::string& path);

// CSV writers. All files use '\n' line endings and %.17g formatting so a
// fixed configuration reproduces byte-identical outputs.
void write_convergence_csv(const ConvergenceReport& report, const std::string& path);
void write_lte_csv(const LteReport& report, const std::string& path);
void write_roundtrip_csv(const RoundtripReport& report, const std::string& path);
void write_perturbation_csv(const PerturbationReport& report, const std::string& path);
void write_trajectory_csv(const Trajectory& trajectory, const NoiseSchedule& schedule,
                          const std::string& path);

}  // namespace belm
