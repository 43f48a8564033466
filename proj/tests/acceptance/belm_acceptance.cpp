// Acceptance harness: one pass/fail line per criterion, exit code = number of
// failed criteria. Each criterion prints its measured values so a red line
// documents exactly what was observed, not just that a bound was missed.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "belm/analysis.hpp"
#include "belm/coeffs.hpp"
#include "belm/errors.hpp"
#include "belm/predictor.hpp"
#include "belm/rng.hpp"
#include "belm/samplers.hpp"
#include "belm/schedule.hpp"
#include "belm/vec.hpp"

using namespace belm;

namespace {

int g_failures = 0;
std::vector<std::string> g_details;

void detail(const std::string& line) { g_details.push_back(line); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

void run_criterion(int idx, const std::string& label, const std::function<bool()>& body) {
  g_details.clear();
  bool ok = false;
  std::string exception_note;
  try {
    ok = body();
  } catch (const std::exception& e) {
    ok = false;
    exception_note = std::string("exception: ") + e.what();
  }
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, label.c_str());
  for (const std::string& line : g_details) std::printf("         %s\n", line.c_str());
  if (!exception_note.empty()) std::printf("         %s\n", exception_note.c_str());
  if (!ok) ++g_failures;
}

NoiseSchedule power_schedule(int N, double power = 1.6) {
  std::vector<double> alphas, sigmas;
  for (int i = 0; i <= N; ++i) {
    const double sbar = 2.0 * std::pow(static_cast<double>(i) / N, power);
    const double alpha = 1.0 / std::sqrt(1.0 + sbar * sbar);
    alphas.push_back(alpha);
    sigmas.push_back(sbar * alpha);
  }
  return from_tables(std::move(alphas), std::move(sigmas));
}

double uniform_in(std::uint64_t counter, double lo, double hi) {
  return lo + (hi - lo) * rng::u01(rng::splitmix64(counter));
}

// ---- criterion 1 ----------------------------------------------------------
// Sampling then inverting recovers the starting noise state to 1e-10 in
// relative infinity norm for the exactly invertible methods, over 10 random
// trials per grid, with multistep history stored on the first leg. DDIM, whose
// inverse is only approximate, must sit above 1e-4 on the same protocol.
bool criterion_exact_inversion() {
  bool ok = true;
  const std::vector<Method> methods{Method::obelm2(), Method::bdia(0.5), Method::edict(0.93)};
  for (int N : {10, 20, 50, 100}) {
    const NoiseSchedule s = power_schedule(N);
    const SyntheticPredictor eps(7, &s);
    const RoundtripReport rep = roundtrip_study(methods, eps, s, 10, 4, 42);
    for (const RoundtripRow& row : rep.rows) {
      const bool cell_ok = !row.skipped && row.forward_max_rel <= 1e-10;
      detail(row.method + " N=" + std::to_string(N) + ": forward rel err " +
             fmt(row.forward_max_rel) + (cell_ok ? "" : "  <-- exceeds 1e-10"));
      ok = ok && cell_ok;
    }
  }

  const NoiseSchedule s10 = power_schedule(10);
  GaussianProblem prob{1.3, &s10, 4};
  const GaussianPredictor geps(prob);
  const RoundtripReport ddim = roundtrip_study({Method::ddim()}, geps, s10, 10, 4, 42);
  const double ddim_err = ddim.rows[0].forward_max_rel;
  detail("ddim N=10 (gaussian): forward rel err " + fmt(ddim_err) + " (must be >= 1e-4)");
  ok = ok && ddim_err >= 1e-4;
  return ok;
}

// ---- criterion 2 ----------------------------------------------------------
// Closed-form 2- and 3-step coefficients match the order-condition solve to a
// scale-normalized 1e-9 on random grids, the k = 4, 5 solves keep their
// residuals under 1e-10, and the whole check finishes in under a second.
bool criterion_coefficients() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;

  const Belm2Coeffs eq2 = belm2_optimal(0.5, 0.5);
  ok = ok && eq2.a1 == 0.0 && eq2.a2 == 1.0 && eq2.b1 == -2.0;
  const Belm2Coeffs c12 = belm2_optimal(1.0, 2.0);
  ok = ok && c12.a1 == 0.75 && c12.a2 == 0.25 && c12.b1 == -1.5;
  const BelmKCoeffs eq3 = belm3_optimal(0.5, 0.5, 0.5);
  ok = ok && eq3.a[0] == -9.0 && eq3.a[1] == 9.0 && eq3.a[2] == 1.0 && eq3.b[0] == -6.0 &&
       eq3.b[1] == -6.0;
  detail(std::string("equal-step and (1,2) closed forms exact: ") + (ok ? "yes" : "NO"));

  double worst_pair = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double h1 = uniform_in(2 * static_cast<std::uint64_t>(t) + 100000, 0.01, 2.0);
    const double h2 = uniform_in(2 * static_cast<std::uint64_t>(t) + 100001, 0.01, 2.0);
    const Belm2Coeffs closed = belm2_optimal(h1, h2);
    const BelmKCoeffs numeric = belmk_optimal({h1, h2});
    const double scale =
        std::max({1.0, std::fabs(closed.a1), std::fabs(closed.a2), std::fabs(closed.b1)});
    worst_pair = std::max({worst_pair, std::fabs(closed.a1 - numeric.a[0]) / scale,
                           std::fabs(closed.a2 - numeric.a[1]) / scale,
                           std::fabs(closed.b1 - numeric.b[0]) / scale});
  }
  detail("2-step closed form vs solve, 100 random step pairs in [0.01,2]: max dev " +
         fmt(worst_pair));
  ok = ok && worst_pair <= 1e-9;

  double worst_triple = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::uint64_t base = 200000 + 3 * static_cast<std::uint64_t>(t);
    const std::vector<double> hs{uniform_in(base, 0.01, 2.0), uniform_in(base + 1, 0.01, 2.0),
                                 uniform_in(base + 2, 0.01, 2.0)};
    const BelmKCoeffs closed = belm3_optimal(hs[0], hs[1], hs[2]);
    const BelmKCoeffs numeric = belmk_optimal(hs);
    double scale = 1.0;
    for (double v : numeric.a) scale = std::max(scale, std::fabs(v));
    for (double v : numeric.b) scale = std::max(scale, std::fabs(v));
    for (int j = 0; j < 3; ++j) {
      worst_triple = std::max(worst_triple, std::fabs(closed.a[static_cast<std::size_t>(j)] -
                                                      numeric.a[static_cast<std::size_t>(j)]) /
                                                scale);
    }
    for (int j = 0; j < 2; ++j) {
      worst_triple = std::max(worst_triple, std::fabs(closed.b[static_cast<std::size_t>(j)] -
                                                      numeric.b[static_cast<std::size_t>(j)]) /
                                                scale);
    }
  }
  detail("3-step closed form vs solve, 100 random step triples in [0.01,2]: max dev " +
         fmt(worst_triple));
  ok = ok && worst_triple <= 1e-9;

  double worst_residual = 0.0;
  for (int k : {4, 5}) {
    for (int t = 0; t < 20; ++t) {
      std::vector<double> hs;
      for (int j = 0; j < k; ++j) {
        hs.push_back(uniform_in(300000 + static_cast<std::uint64_t>(100 * k + k * t + j), 0.1, 1.0));
      }
      const BelmKCoeffs c = belmk_optimal(hs);
      const DenseSystem sys = belmk_system(hs);
      std::vector<double> coeffs;
      coeffs.insert(coeffs.end(), c.a.begin(), c.a.end());
      coeffs.insert(coeffs.end(), c.b.begin(), c.b.end());
      // Extended-precision accumulation: terms reach ~1e6 on anisotropic
      // grids, so double accumulation would inject ~2e-10 of measurement
      // noise and swamp the residual being measured.
      for (int r = 0; r < sys.n; ++r) {
        long double acc = 0.0L;
        for (int j = 0; j < sys.n; ++j) {
          acc += static_cast<long double>(
                     sys.matrix[static_cast<std::size_t>(r * sys.n + j)]) *
                 static_cast<long double>(coeffs[static_cast<std::size_t>(j)]);
        }
        acc -= static_cast<long double>(sys.rhs[static_cast<std::size_t>(r)]);
        worst_residual =
            std::max(worst_residual, static_cast<double>(fabsl(acc)));
      }
    }
  }
  detail("k = 4, 5 order-condition residuals over random grids in [0.1,1]: max " +
         fmt(worst_residual));
  ok = ok && worst_residual <= 1e-10;

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail("elapsed " + fmt(elapsed) + " s (budget 1 s)");
  return ok && elapsed < 1.0;
}

// ---- criterion 3 ----------------------------------------------------------
// Fitted global convergence orders on the Gaussian problem: DDIM near 1,
// the optimal 2-step method near 2; fitted local-defect orders: DDIM and BDIA
// near 2, the optimal 2-step method near 3, EDICT's below DDIM's. Budget 30 s.
bool criterion_orders() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  const GaussianProblem g{1.3, nullptr, 4};
  const std::vector<int> Ns{16, 32, 64, 128, 256};

  const ConvergenceReport conv_ddim = convergence_study(Method::ddim(), g, Ns);
  const ConvergenceReport conv_ob2 = convergence_study(Method::obelm2(), g, Ns);
  const double o_ddim = conv_ddim.fitted_order.value_or(-1.0);
  const double o_ob2 = conv_ob2.fitted_order.value_or(-1.0);
  detail("global order: ddim " + fmt(o_ddim) + " (band [0.7,1.3]), obelm2 " + fmt(o_ob2) +
         " (band [1.7,2.3])");
  ok = ok && o_ddim > 0.7 && o_ddim < 1.3 && o_ob2 > 1.7 && o_ob2 < 2.3;

  std::vector<double> hs;
  for (int k = 0; k < 6; ++k) hs.push_back(0.2 / std::pow(2.0, k));
  const double l_ddim = lte_study(Method::ddim(), g, hs).fitted_order.value_or(-1.0);
  const double l_bdia = lte_study(Method::bdia(0.5), g, hs).fitted_order.value_or(-1.0);
  const double l_ob2 = lte_study(Method::obelm2(), g, hs).fitted_order.value_or(-1.0);
  const double l_edict = lte_study(Method::edict(0.93), g, hs).fitted_order.value_or(-1.0);
  detail("defect order: ddim " + fmt(l_ddim) + ", bdia " + fmt(l_bdia) +
         " (bands [1.7,2.3]), obelm2 " + fmt(l_ob2) + " (band [2.7,3.3]), edict " + fmt(l_edict) +
         " (must be < ddim)");
  ok = ok && l_ddim > 1.7 && l_ddim < 2.3 && l_bdia > 1.7 && l_bdia < 2.3;
  ok = ok && l_ob2 > 2.7 && l_ob2 < 3.3;
  ok = ok && l_edict < l_ddim;

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail("elapsed " + fmt(elapsed) + " s (budget 30 s)");
  return ok && elapsed < 30.0;
}

// ---- criterion 4 ----------------------------------------------------------
// With a quadratic scaled solution and exact starting history, the optimal
// 2-step method reproduces the data-end state to 1e-12 regardless of N or
// grid spacing: its defect vanishes identically on quadratics.
bool criterion_quadratic_exactness() {
  const PolynomialProblem proto{{0.3, -0.2, 0.5}, nullptr};
  bool ok = true;
  double worst = 0.0;

  const auto run_case = [&](const std::string& name, const std::vector<double>& sbar) {
    const int N = static_cast<int>(sbar.size()) - 1;
    std::vector<double> alphas(sbar.size(), 1.0);
    const NoiseSchedule s = from_tables(std::move(alphas), std::vector<double>(sbar));
    PolynomialProblem prob = proto;
    prob.schedule = &s;
    const PolynomialPredictor eps(prob);
    const int d = 3;
    const Vec x_N(static_cast<std::size_t>(d), polynomial_value(prob, s.sbar(N)));
    SampleOptions opt;
    opt.x_Nm1 = Vec(static_cast<std::size_t>(d), polynomial_value(prob, s.sbar(N - 1)));
    const Trajectory t = sample(Method::obelm2(), eps, s, x_N, opt);
    double err = 0.0;
    for (double v : t.x(0)) err = std::max(err, std::fabs(v - polynomial_value(prob, s.sbar(0))));
    detail(name + ": data-end error " + fmt(err));
    worst = std::max(worst, err);
    ok = ok && err <= 1e-12;
  };

  for (int N : {10, 100, 1000}) {
    std::vector<double> sbar;
    for (int i = 0; i <= N; ++i) sbar.push_back(2.0 * i / N);
    run_case("uniform N=" + std::to_string(N), sbar);
  }
  {
    const int N = 100;
    std::vector<double> sbar;
    for (int i = 0; i <= N; ++i) sbar.push_back(2.0 * std::pow(static_cast<double>(i) / N, 1.2));
    run_case("clustered (power 1.2) N=100", sbar);
  }
  detail("worst case " + fmt(worst) + " (tolerance 1e-12)");
  return ok;
}

// ---- criterion 5 ----------------------------------------------------------
// The per-method updates coincide with their shared 2-step reformulation:
// BDIA at gamma = 0 is DDIM bit for bit; generic BDIA equals its coefficient
// form to 1e-13; EDICT's four sub-updates, walked phase by phase with the
// published coefficients, match edict_step to 1e-13.
bool criterion_reformulation() {
  bool ok = true;

  {
    const NoiseSchedule s = vp_linear_schedule(12, 1e-3, 0.03);
    const SyntheticPredictor eps(5, &s);
    const Vec x_N = rng::normal_vector(3, 0, 4);
    const Trajectory td = sample(Method::ddim(), eps, s, x_N);
    const Trajectory tb = sample(Method::bdia(0.0), eps, s, x_N);
    bool identical = true;
    for (int i = 0; i <= 12; ++i) identical = identical && td.x(i) == tb.x(i);
    detail(std::string("bdia(gamma=0) trajectory == ddim trajectory bitwise: ") +
           (identical ? "yes" : "NO"));
    ok = ok && identical;
  }

  {
    const NoiseSchedule s = vp_linear_schedule(10, 1e-4, 0.02);
    const SyntheticPredictor eps(5, &s);
    const Grid grid = grid_of(s);
    const Vec x_i = rng::normal_vector(3, 0, 4);
    const Vec x_ip1 = rng::normal_vector(3, 1, 4);
    double worst = 0.0;
    for (int i : {1, 4, 9}) {
      const Belm2Coeffs c = bdia_as_belm(0.37, s, i);
      Vec xbar_i(4), xbar_ip1(4);
      for (int k = 0; k < 4; ++k) {
        xbar_i[static_cast<std::size_t>(k)] = x_i[static_cast<std::size_t>(k)] / s.alpha(i);
        xbar_ip1[static_cast<std::size_t>(k)] =
            x_ip1[static_cast<std::size_t>(k)] / s.alpha(i + 1);
      }
      Vec expect = belm2_apply(c.a1, c.a2, c.b1, xbar_i, xbar_ip1, grid.step(i), eps.eval(x_i, i));
      for (double& v : expect) v *= s.alpha(i - 1);
      worst = std::max(worst, rel_err_inf(bdia_step(x_ip1, x_i, i, 0.37, eps, s), expect));
    }
    detail("bdia generic step vs 2-step coefficient form: max rel dev " + fmt(worst));
    ok = ok && worst <= 1e-13;
  }

  {
    const NoiseSchedule s = vp_linear_schedule(12, 1e-3, 0.03);
    const SyntheticPredictor eps(17, &s);
    const Vec x = rng::normal_vector(21, 0, 4);
    const Vec y = rng::normal_vector(21, 1, 4);
    const double p = 0.93;
    double worst = 0.0;
    for (int i : {1, 5, 12}) {
      const auto [dx, dy] = edict_step(x, y, i, p, eps, s);
      const double ai = s.alpha(i), aim1 = s.alpha(i - 1);
      const double amid = std::sqrt(ai * aim1);
      const double hB = 0.5 * (s.sbar(i) - s.sbar(i - 1));
      Vec za(4), zb(4), site(4);
      for (int c = 0; c < 4; ++c) {
        za[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] / ai;
        zb[static_cast<std::size_t>(c)] = y[static_cast<std::size_t>(c)] / ai;
      }
      const Belm2Coeffs cC = edict_phase_coeffs(p, s, 4LL * i - 2);
      for (int c = 0; c < 4; ++c) site[static_cast<std::size_t>(c)] = ai * zb[static_cast<std::size_t>(c)];
      const Vec zc = belm2_apply(cC.a1, cC.a2, cC.b1, zb, za, hB, eps.eval(site, i));
      const Belm2Coeffs cD = edict_phase_coeffs(p, s, 4LL * i - 3);
      for (int c = 0; c < 4; ++c) site[static_cast<std::size_t>(c)] = amid * zc[static_cast<std::size_t>(c)];
      const Vec zd = belm2_apply(cD.a1, cD.a2, cD.b1, zc, zb, hB, eps.eval(site, i));
      const Belm2Coeffs cE = edict_phase_coeffs(p, s, 4LL * i - 4);
      const Vec ze = belm2_apply(cE.a1, cE.a2, cE.b1, zd, zc, 0.0, Vec(4, 0.0));
      Vec zf(4);
      if (i >= 2) {
        const Belm2Coeffs cF = edict_phase_coeffs(p, s, 4LL * i - 5);
        zf = belm2_apply(cF.a1, cF.a2, cF.b1, ze, zd, 0.0, Vec(4, 0.0));
      } else {
        for (int c = 0; c < 4; ++c) {
          zf[static_cast<std::size_t>(c)] =
              p * zd[static_cast<std::size_t>(c)] + (1 - p) * ze[static_cast<std::size_t>(c)];
        }
      }
      for (int c = 0; c < 4; ++c) {
        worst = std::max(worst, std::fabs(aim1 * ze[static_cast<std::size_t>(c)] -
                                          dx[static_cast<std::size_t>(c)]));
        worst = std::max(worst, std::fabs(aim1 * zf[static_cast<std::size_t>(c)] -
                                          dy[static_cast<std::size_t>(c)]));
      }
    }
    detail("edict phase walk vs edict_step at i in {1,5,12}: max abs dev " + fmt(worst));
    ok = ok && worst <= 1e-13;
  }
  return ok;
}

// ---- criterion 6 ----------------------------------------------------------
// Zero-stability evidence: on a grid with strictly expanding steps toward the
// noise end the certificate transform keeps every step-matrix norm at or
// below 1, and the empirical perturbation-growth constant stays bounded (the
// worst/best ratio over N in {50, 100, 200} is under 2).
bool criterion_stability() {
  bool ok = true;

  Grid geometric;
  geometric.sbar.push_back(0.0);
  double h = 1.0;
  for (int i = 0; i < 8; ++i) {
    geometric.sbar.push_back(geometric.sbar.back() + h);
    geometric.h.push_back(h);
    h *= 2.0;
  }
  const StabilityReport cert = stability_check(geometric);
  double max_norm = 0.0;
  for (double n : cert.norms) max_norm = std::max(max_norm, n);
  detail("doubling grid: eta " + fmt(cert.eta) + ", max transformed norm " + fmt(max_norm) +
         ", certificate " + (cert.passed ? "holds" : "inconclusive"));
  ok = ok && cert.passed && cert.eta == 0.25 && max_norm <= 1.0;

  std::vector<double> khats;
  std::string ks;
  for (int N : {50, 100, 200}) {
    const NoiseSchedule s = power_schedule(N);
    const SyntheticPredictor eps(7, &s);
    const PerturbationReport rep = perturbation_study(Method::obelm2(), eps, s, 1e-6, 1, 4, 11);
    khats.push_back(rep.k_hat);
    ks += (ks.empty() ? "" : ", ") + std::string("N=") + std::to_string(N) + ": " + fmt(rep.k_hat);
  }
  const double lo = std::min({khats[0], khats[1], khats[2]});
  const double hi = std::max({khats[0], khats[1], khats[2]});
  detail("perturbation growth K-hat (" + ks + "), max/min " + fmt(hi / lo) + " (bound 2)");
  ok = ok && hi / lo < 2.0;
  return ok;
}

// ---- criterion 7 ----------------------------------------------------------
// The command-line tool is deterministic: identical invocations produce
// byte-identical outputs, and the recorded content hash matches.
bool criterion_deterministic_cli() {
#ifndef BELM_LAB_PATH
  detail("belm_lab path not configured");
  return false;
#else
  const auto temp = [](const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
  };
  const auto slurp = [](const std::string& path) -> std::string {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return "<missing:" + path + ">";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto run = [](const std::string& args) {
    const std::string cmd = std::string("\"") + BELM_LAB_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };

  bool ok = true;
  const struct {
    const char* name;
    std::string args;
  } cases[] = {
      {"sample", "sample --method obelm2 --problem gaussian --steps 20 --dim 4 --seed 97 --out "},
      {"roundtrip",
       "roundtrip --method obelm2,edict --problem synthetic --steps 12 --trials 10 --dim 3 "
       "--seed 5 --out "},
  };
  for (const auto& c : cases) {
    const std::string a = temp(std::string("belm_acc_") + c.name + "_a.csv");
    const std::string b = temp(std::string("belm_acc_") + c.name + "_b.csv");
    const int rc_a = run(c.args + "\"" + a + "\"");
    const int rc_b = run(c.args + "\"" + b + "\"");
    const bool same = rc_a == 0 && rc_b == 0 && slurp(a) == slurp(b) &&
                      fnv1a64_hex_of_file(a) == fnv1a64_hex_of_file(b);
    detail(std::string(c.name) + ": exit codes " + std::to_string(rc_a) + "/" +
           std::to_string(rc_b) + ", reruns byte-identical: " + (same ? "yes" : "NO") +
           " (hash " + fnv1a64_hex_of_file(a) + ")");
    ok = ok && same;
    std::remove(a.c_str());
    std::remove(b.c_str());
    std::remove((a + ".meta.json").c_str());
    std::remove((b + ".meta.json").c_str());
  }
  return ok;
#endif
}

}  // namespace

int main() {
  run_criterion(1,
                "exact inversion: sample-then-invert recovers the noise state to 1e-10 "
                "(OBELM2, BDIA 0.5, EDICT 0.93; N in {10,20,50,100}); DDIM stays above 1e-4",
                criterion_exact_inversion);
  run_criterion(2,
                "coefficient correctness: closed forms match the order-condition solve to 1e-9; "
                "k = 4, 5 residuals below 1e-10; under 1 second",
                criterion_coefficients);
  run_criterion(3,
                "empirical orders: global DDIM ~1 / OBELM2 ~2; local defect DDIM, BDIA ~2 / "
                "OBELM2 ~3 / EDICT below DDIM; under 30 seconds",
                criterion_orders);
  run_criterion(4, "quadratic exactness: OBELM2 integrates quadratic data to 1e-12 on uniform "
                   "and clustered grids",
                criterion_quadratic_exactness);
  run_criterion(5,
                "shared reformulation: BDIA(0) == DDIM bitwise; BDIA and EDICT match their "
                "2-step coefficient forms to 1e-13",
                criterion_reformulation);
  run_criterion(6,
                "stability: norm certificate holds on an expanding grid; perturbation growth "
                "bounded across N",
                criterion_stability);
  run_criterion(7, "determinism: identical CLI invocations produce byte-identical outputs",
                criterion_deterministic_cli);

  std::printf("%d of 7 criteria failed\n", g_failures);
  return g_failures;
}
