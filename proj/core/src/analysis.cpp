#include "belm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "belm/coeffs.hpp"
#include "belm/errors.hpp"
#include "belm/rng.hpp"

namespace belm {

namespace {

// Fixed scaled reference state used by the local-error studies; cycled to the
// requested dimension.
Vec cycled_reference(const Vec& ref, int d) {
  if (ref.empty()) throw ConfigError("reference state must not be empty");
  Vec out(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(c)] = ref[static_cast<std::size_t>(c) % ref.size()];
  return out;
}

double vp_alpha_of_sbar(double sbar) { return 1.0 / std::sqrt(1.0 + sbar * sbar); }

// Schedule with the variance-preserving relation alpha = 1/sqrt(1+sbar^2)
// over an explicit sigma-bar grid.
NoiseSchedule schedule_from_sbar(const std::vector<double>& sbar) {
  std::vector<double> alphas(sbar.size()), sigmas(sbar.size());
  for (std::size_t i = 0; i < sbar.size(); ++i) {
    alphas[i] = vp_alpha_of_sbar(sbar[i]);
    sigmas[i] = alphas[i] * sbar[i];
  }
  return from_tables(std::move(alphas), std::move(sigmas));
}

// Exact scaled Gaussian flow anchored at sbar_base: the scaled state grows
// with the scaled marginal deviation sqrt(s^2 + sbar^2).
struct ScaledGaussianFlow {
  double s;
  Vec ref;
  double sbar_base;

  Vec xbar(double sbar) const {
    const double scale =
        std::sqrt((s * s + sbar * sbar) / (s * s + sbar_base * sbar_base));
    Vec out(ref.size());
    for (std::size_t c = 0; c < ref.size(); ++c) out[c] = ref[c] * scale;
    return out;
  }
  Vec ebar(const Vec& xb, double sbar) const {
    Vec out(xb.size());
    for (std::size_t c = 0; c < xb.size(); ++c) out[c] = sbar * xb[c] / (s * s + sbar * sbar);
    return out;
  }
};

double max_abs_scaled(const Vec& v, double scale) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(scale * x));
  return m;
}

void require_positive_hs(const std::vector<double>& hs, const char* who) {
  if (hs.empty()) throw ConfigError(std::string(who) + ": need at least one step size");
  for (double h : hs) {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw ConfigError(std::string(who) + ": step sizes must be positive and finite");
    }
  }
}

std::optional<double> try_fit(const std::vector<double>& hs, const std::vector<double>& errors) {
  try {
    return fit_order(hs, errors);
  } catch (const InsufficientDataError&) {
    return std::nullopt;
  }
}

double mean_squared_error(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    acc += d * d;
  }
  return a.empty() ? 0.0 : acc / static_cast<double>(a.size());
}

}  // namespace

double fit_order(const std::vector<double>& hs, const std::vector<double>& errors) {
  if (hs.size() != errors.size()) {
    throw ConfigError("fit_order: mismatched pair lengths");
  }
  const double floor = 100.0 * std::numeric_limits<double>::epsilon();
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0)) throw ConfigError("fit_order: step sizes must be positive");
    if (!(errors[i] >= 0.0) || !std::isfinite(errors[i])) {
      throw ConfigError("fit_order: errors must be finite and non-negative");
    }
    if (errors[i] > floor) {
      lx.push_back(std::log(hs[i]));
      ly.push_back(std::log(errors[i]));
    }
  }
  if (lx.size() < 3) {
    throw InsufficientDataError("fit_order: fewer than 3 pairs above the rounding floor (" +
                                std::to_string(lx.size()) + " usable)");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) {
    throw InsufficientDataError("fit_order: all step sizes identical");
  }
  return sxy / sxx;
}

ConvergenceReport convergence_study(const Method& method, const GaussianProblem& prototype,
                                    const std::vector<int>& Ns,
                                    const ConvergenceOptions& options) {
  if (Ns.empty()) throw ConfigError("convergence_study: empty N list");
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (Ns[i] < 4) throw ConfigError("convergence_study: every N must be >= 4");
    if (i > 0 && Ns[i] <= Ns[i - 1]) {
      throw ConfigError("convergence_study: Ns must be strictly increasing");
    }
  }
  if (!(prototype.s > 0.0)) throw ConfigError("convergence_study: s must be positive");
  if (prototype.d < 1) throw ConfigError("convergence_study: dimension must be >= 1");
  if (!(options.sbar_max > 0.0) || !(options.power > 0.0)) {
    throw ConfigError("convergence_study: sbar_max and power must be positive");
  }

  ConvergenceReport report;
  report.method = method.name();
  report.problem = "gaussian";
  std::vector<double> fit_h, fit_e;
  for (int N : Ns) {
    std::vector<double> sbar(static_cast<std::size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) {
      sbar[static_cast<std::size_t>(i)] =
          options.sbar_max *
          std::pow(static_cast<double>(i) / static_cast<double>(N), options.power);
    }
    const NoiseSchedule schedule = schedule_from_sbar(sbar);
    const GaussianProblem problem{prototype.s, &schedule, prototype.d};
    const GaussianPredictor predictor(problem);
    const Vec ref = cycled_reference(options.xbar_ref, prototype.d);
    const Vec x_N = gaussian_exact_flow(ref, 0, N, problem);
    Trajectory traj;
    try {
      traj = sample(method, predictor, schedule, x_N);
    } catch (const NumericalError& e) {
      throw NumericalError("convergence_study: " + method.name() + " at N = " +
                           std::to_string(N) + ": " + e.what());
    }
    ConvergenceRow row;
    row.N = N;
    for (int i = 1; i <= N; ++i) {
      row.h_max = std::max(row.h_max, sbar[static_cast<std::size_t>(i)] -
                                          sbar[static_cast<std::size_t>(i) - 1]);
    }
    for (int i = 0; i <= N; ++i) {
      const Vec exact = gaussian_exact_flow(x_N, N, i, problem);
      double err = 0.0;
      for (std::size_t c = 0; c < exact.size(); ++c) {
        err = std::max(err, std::fabs(traj.x(i)[c] - exact[c]));
      }
      if (i == 0) row.global_error = err;
      row.max_grid_error = std::max(row.max_grid_error, err);
    }
    if (!std::isfinite(row.global_error)) {
      throw NumericalError("convergence_study: non-finite error for " + method.name() +
                           " at N = " + std::to_string(N));
    }
    report.rows.push_back(row);
    fit_h.push_back(row.h_max);
    fit_e.push_back(row.global_error);
  }
  report.fitted_order = try_fit(fit_h, fit_e);
  return report;
}

namespace {

// Recursion defect of one step on exact states, in unscaled norm. The grid is
// (b, b+h, b+2h[, b+3h]) with the variance-preserving alpha relation for the
// Gaussian problem and alpha = 1 for polynomial problems.
double gaussian_defect(const Method& method, const ScaledGaussianFlow& flow, double h,
                       double sbar_base) {
  const auto dvec = [&](const Vec& a, const Vec& b1v, double scale) {
    Vec d(a.size());
    for (std::size_t c = 0; c < a.size(); ++c) d[c] = a[c] - b1v[c];
    return max_abs_scaled(d, scale);
  };
  if (method.kind == MethodKind::Edict) {
    const double sb0 = sbar_base, sb1 = sbar_base + h;
    const double a0 = vp_alpha_of_sbar(sb0), a1 = vp_alpha_of_sbar(sb1);
    const double amid = std::sqrt(a0 * a1);
    const double sbm = 0.5 * (sb0 + sb1);
    const double hB = 0.5 * h;
    const Vec x0 = flow.xbar(sb0), x1 = flow.xbar(sb1), xm = flow.xbar(sbm);
    const Vec e1 = flow.ebar(x1, sb1), em = flow.ebar(xm, sbm);
    const double rA = std::sqrt(a0 / a1), rC = std::sqrt(a1 / a0);
    const double p = method.p;
    double worst = 0.0;
    Vec t(x0.size());
    // half-step row producing the midpoint level
    for (std::size_t c = 0; c < t.size(); ++c) t[c] = xm[c] - (rA * x1[c] - 2.0 * rA * hB * e1[c]);
    worst = std::max(worst, max_abs_scaled(t, amid));
    // half-step row producing the lower level (predictor at the midpoint state)
    for (std::size_t c = 0; c < t.size(); ++c) t[c] = x0[c] - (x1[c] - 2.0 * hB * em[c]);
    worst = std::max(worst, max_abs_scaled(t, a0));
    // first mixing row
    for (std::size_t c = 0; c < t.size(); ++c) {
      t[c] = x0[c] - ((1.0 - p) * x0[c] + p * rC * xm[c]);
    }
    worst = std::max(worst, max_abs_scaled(t, a0));
    // second mixing row: exact states make it vanish identically
    return worst;
  }

  const double sb0 = sbar_base, sb1 = sbar_base + h, sb2 = sbar_base + 2.0 * h;
  const Vec x0 = flow.xbar(sb0), x1 = flow.xbar(sb1), x2 = flow.xbar(sb2);
  const Vec e1 = flow.ebar(x1, sb1);
  const double al0 = vp_alpha_of_sbar(sb0), al2 = vp_alpha_of_sbar(sb2);
  Vec pred(x0.size());
  switch (method.kind) {
    case MethodKind::Ddim: {
      for (std::size_t c = 0; c < pred.size(); ++c) pred[c] = x1[c] - h * e1[c];
      break;
    }
    case MethodKind::Obelm2: {
      const Belm2Coeffs cf = belm2_optimal(h, h);
      for (std::size_t c = 0; c < pred.size(); ++c) {
        pred[c] = cf.a1 * x1[c] + cf.a2 * x2[c] + cf.b1 * h * e1[c];
      }
      break;
    }
    case MethodKind::Bdia: {
      const double a2 = method.gamma * al2 / al0;
      const double a1c = 1.0 - a2;
      const double b1 = -1.0 - method.gamma * (al2 / al0);
      for (std::size_t c = 0; c < pred.size(); ++c) {
        pred[c] = a1c * x1[c] + a2 * x2[c] + b1 * h * e1[c];
      }
      break;
    }
    case MethodKind::Obelm3: {
      const double sb3 = sbar_base + 3.0 * h;
      const Vec x3 = flow.xbar(sb3);
      const Vec e2 = flow.ebar(x2, sb2);
      const BelmKCoeffs cf = belm3_optimal(h, h, h);
      for (std::size_t c = 0; c < pred.size(); ++c) {
        pred[c] = cf.a[0] * x1[c] + cf.a[1] * x2[c] + cf.a[2] * x3[c] + cf.b[0] * h * e1[c] +
                  cf.b[1] * h * e2[c];
      }
      break;
    }
    case MethodKind::Edict:
      break;  // handled above
  }
  return dvec(x0, pred, al0);
}

}  // namespace

LteReport lte_study(const Method& method, const GaussianProblem& prototype,
                    const std::vector<double>& hs, double sbar_base) {
  require_positive_hs(hs, "lte_study");
  if (!(prototype.s > 0.0)) throw ConfigError("lte_study: s must be positive");
  if (prototype.d < 1) throw ConfigError("lte_study: dimension must be >= 1");
  if (!(sbar_base >= 0.0)) throw ConfigError("lte_study: sbar_base must be >= 0");

  const ScaledGaussianFlow flow{prototype.s,
                                cycled_reference({0.7, -1.1, 0.4, 1.3}, prototype.d), sbar_base};
  LteReport report;
  report.method = method.name();
  report.problem = "gaussian";
  std::vector<double> fe;
  for (double h : hs) {
    const double err = gaussian_defect(method, flow, h, sbar_base);
    report.rows.push_back({h, err});
    fe.push_back(err);
  }
  report.fitted_order = try_fit(hs, fe);
  return report;
}

LteReport lte_study(const Method& method, const PolynomialProblem& prototype,
                    const std::vector<double>& hs, double sbar_base) {
  require_positive_hs(hs, "lte_study");
  if (prototype.coeffs.empty()) throw ConfigError("lte_study: polynomial needs coefficients");
  if (!(sbar_base >= 0.0)) throw ConfigError("lte_study: sbar_base must be >= 0");

  const auto P = [&](double t) { return polynomial_value(prototype, t); };
  const auto dP = [&](double t) { return polynomial_derivative(prototype, t); };

  LteReport report;
  report.method = method.name();
  report.problem = "polynomial";
  std::vector<double> fe;
  for (double h : hs) {
    const double sb0 = sbar_base, sb1 = sbar_base + h, sb2 = sbar_base + 2.0 * h;
    const double x0 = P(sb0), x1 = P(sb1), x2 = P(sb2);
    const double e1 = dP(sb1);
    double err = 0.0;
    switch (method.kind) {
      case MethodKind::Ddim:
        err = std::fabs(x0 - (x1 - h * e1));
        break;
      case MethodKind::Obelm2: {
        const Belm2Coeffs cf = belm2_optimal(h, h);
        err = std::fabs(x0 - (cf.a1 * x1 + cf.a2 * x2 + cf.b1 * h * e1));
        break;
      }
      case MethodKind::Bdia: {
        const double a2 = method.gamma;  // alpha ratio is 1 on flat-alpha grids
        const double b1 = -1.0 - method.gamma;
        err = std::fabs(x0 - ((1.0 - a2) * x1 + a2 * x2 + b1 * h * e1));
        break;
      }
      case MethodKind::Obelm3: {
        const double sb3 = sbar_base + 3.0 * h;
        const BelmKCoeffs cf = belm3_optimal(h, h, h);
        err = std::fabs(x0 - (cf.a[0] * x1 + cf.a[1] * x2 + cf.a[2] * P(sb3) +
                              cf.b[0] * h * e1 + cf.b[1] * h * dP(sb2)));
        break;
      }
      case MethodKind::Edict: {
        const double sbm = 0.5 * (sb0 + sb1);
        const double xm = P(sbm);
        const double hB = 0.5 * h;
        const double p = method.p;
        const double tA = std::fabs(xm - (x1 - 2.0 * hB * e1));
        const double tB = std::fabs(x0 - (x1 - 2.0 * hB * dP(sbm)));
        const double tC = std::fabs(x0 - ((1.0 - p) * x0 + p * xm));
        err = std::max({tA, tB, tC});
        break;
      }
    }
    report.rows.push_back({h, err});
    fe.push_back(err);
  }
  report.fitted_order = try_fit(hs, fe);
  return report;
}

RoundtripReport roundtrip_study(const std::vector<Method>& methods, const NoisePredictor& eps,
                                const NoiseSchedule& schedule, int trials, int d,
                                std::uint64_t seed) {
  if (trials < 10) throw ConfigError("roundtrip_study: need at least 10 trials");
  if (d < 1) throw ConfigError("roundtrip_study: dimension must be >= 1");
  if (methods.empty()) throw ConfigError("roundtrip_study: empty method list");

  const int N = schedule.N();
  RoundtripReport report;
  for (const Method& method : methods) {
    RoundtripRow row;
    row.method = method.name();
    row.N = N;
    row.trials = trials;
    if (method.kind == MethodKind::Bdia && method.gamma == 0.0) {
      row.skipped = true;
      row.note = "skipped: BDIA with gamma = 0 is DDIM and has no exact inverse";
      report.rows.push_back(row);
      continue;
    }
    const bool multistep =
        method.kind == MethodKind::Bdia || method.kind == MethodKind::Obelm2 ||
        method.kind == MethodKind::Obelm3;
    try {
      double rec_mse_acc = 0.0, fwd_mse_acc = 0.0;
      for (int t = 0; t < trials; ++t) {
        // invert-then-sample: reconstruct a data-end state
        const Vec x0 = rng::normal_vector(seed, 2 * static_cast<std::uint64_t>(t), d);
        const Trajectory up = invert(method, eps, schedule, InversionSeed{x0, {}, {}, {}});
        SampleOptions opts;
        if (multistep && N >= 1) opts.x_Nm1 = up.x(N - 1);
        if (method.kind == MethodKind::Obelm3 && N >= 2) opts.x_Nm2 = up.x(N - 2);
        if (method.kind == MethodKind::Edict) opts.y_N = up.y(N);
        const Trajectory down = sample(method, eps, schedule, up.x(N), opts);
        row.reconstruction_max_rel = std::max(row.reconstruction_max_rel,
                                              rel_err_inf(down.x(0), x0));
        rec_mse_acc += mean_squared_error(down.x(0), x0);

        // sample-then-invert: recover a noise-end state
        const Vec xN = rng::normal_vector(seed, 2 * static_cast<std::uint64_t>(t) + 1, d);
        const Trajectory samp = sample(method, eps, schedule, xN);
        InversionSeed inv_seed;
        inv_seed.x0 = samp.x(0);
        if (multistep && N >= 1) inv_seed.x1 = samp.x(1);
        if (method.kind == MethodKind::Obelm3 && N >= 2) inv_seed.x2 = samp.x(2);
        if (method.kind == MethodKind::Edict) inv_seed.y0 = samp.y(0);
        const Trajectory back = invert(method, eps, schedule, inv_seed);
        row.forward_max_rel = std::max(row.forward_max_rel, rel_err_inf(back.x(N), xN));
        fwd_mse_acc += mean_squared_error(back.x(N), xN);
      }
      row.reconstruction_mse = rec_mse_acc / static_cast<double>(trials);
      row.forward_mse = fwd_mse_acc / static_cast<double>(trials);
    } catch (const NotInvertibleError& e) {
      row.skipped = true;
      row.note = std::string("skipped: ") + e.what();
    } catch (const NumericalError& e) {
      row.skipped = true;
      row.note = std::string("numerical failure: ") + e.what();
    }
    report.rows.push_back(row);
  }
  return report;
}

PerturbationReport perturbation_study(const Method& method, const NoisePredictor& eps,
                                      const NoiseSchedule& schedule, double delta, int trials,
                                      int d, std::uint64_t seed) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ConfigError("perturbation_study: delta must be >= 0 and finite");
  }
  if (trials < 1) throw ConfigError("perturbation_study: need at least 1 trial");
  if (d < 1) throw ConfigError("perturbation_study: dimension must be >= 1");

  PerturbationReport report;
  report.method = method.name();
  report.delta = delta;
  report.trials = trials;
  if (delta == 0.0) {
    report.per_trial_k_hat.assign(static_cast<std::size_t>(trials), 0.0);
    report.k_hat = 0.0;
    return report;
  }

  const int N = schedule.N();
  const bool multistep = method.kind == MethodKind::Bdia ||
                         method.kind == MethodKind::Obelm2 ||
                         method.kind == MethodKind::Obelm3;
  const auto shifted = [&](const Vec& v, int level) {
    Vec out(v.size());
    const double off = delta * schedule.alpha(level);
    for (std::size_t c = 0; c < v.size(); ++c) out[c] = v[c] + off;
    return out;
  };

  for (int t = 0; t < trials; ++t) {
    const Vec xN = rng::normal_vector(seed, static_cast<std::uint64_t>(t), d);
    SampleOptions base, pert;
    Vec zN = shifted(xN, N);
    if (multistep && N >= 1) {
      const Vec xNm1 = ddim_step(xN, N, eps, schedule);
      base.x_Nm1 = xNm1;
      pert.x_Nm1 = shifted(xNm1, N - 1);
      if (method.kind == MethodKind::Obelm3 && N >= 2) {
        const Vec xNm2 = ddim_step(xNm1, N - 1, eps, schedule);
        base.x_Nm2 = xNm2;
        pert.x_Nm2 = shifted(xNm2, N - 2);
      }
    }
    if (method.kind == MethodKind::Edict) {
      base.y_N = xN;
      pert.y_N = zN;
    }
    const Trajectory a = sample(method, eps, schedule, xN, base);
    const Trajectory b = sample(method, eps, schedule, zN, pert);
    double worst = 0.0;
    for (int i = 0; i <= N; ++i) {
      const double ai = schedule.alpha(i);
      for (std::size_t c = 0; c < a.x(i).size(); ++c) {
        worst = std::max(worst, std::fabs(a.x(i)[c] / ai - b.x(i)[c] / ai));
      }
    }
    const double k_t = worst / delta;
    if (!std::isfinite(k_t)) {
      throw NumericalError("perturbation_study: non-finite amplification for " + method.name());
    }
    report.per_trial_k_hat.push_back(k_t);
    report.k_hat = std::max(report.k_hat, k_t);
  }
  return report;
}

// ---- deterministic output ---------------------------------------------------

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fnv1a64_hex_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("fnv1a64_hex_of_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(body.data(), body.size())));
  return buf;
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file " + path);
  return out;
}

}  // namespace

void write_convergence_csv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "method,problem,N,h_max,global_error,fitted_order,max_grid_error\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const ConvergenceRow& r = report.rows[i];
    out << report.method << ',' << report.problem << ',' << r.N << ','
        << format_g17(r.h_max) << ',' << format_g17(r.global_error) << ',';
    if (i + 1 == report.rows.size() && report.fitted_order) {
      out << format_g17(*report.fitted_order);
    }
    out << ',' << format_g17(r.max_grid_error) << '\n';
  }
}

void write_lte_csv(const LteReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "method,h,error,fitted_order\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const LteRow& r = report.rows[i];
    out << report.method << ',' << format_g17(r.h) << ',' << format_g17(r.error) << ',';
    if (i + 1 == report.rows.size() && report.fitted_order) {
      out << format_g17(*report.fitted_order);
    }
    out << '\n';
  }
}

void write_roundtrip_csv(const RoundtripReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "method,N,trials,max_rel_error\n";
  for (const RoundtripRow& r : report.rows) {
    if (r.skipped) continue;  // skipped methods carry a note in the report/JSON
    out << r.method << ',' << r.N << ',' << r.trials << ','
        << format_g17(r.reconstruction_max_rel) << '\n';
  }
}

void write_perturbation_csv(const PerturbationReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "method,delta,K_hat\n";
  out << report.method << ',' << format_g17(report.delta) << ',' << format_g17(report.k_hat)
      << '\n';
}

void write_trajectory_csv(const Trajectory& trajectory, const NoiseSchedule& schedule,
                          const std::string& path) {
  std::ofstream out = open_output(path);
  const int N = schedule.N();
  const std::size_t d = trajectory.states.empty() ? 0 : trajectory.states.front().size();
  out << "step_index,sbar";
  for (std::size_t c = 0; c < d; ++c) out << ",x_" << c;
  out << '\n';
  for (int i = 0; i <= N; ++i) {
    out << i << ',' << format_g17(schedule.sbar(i));
    for (std::size_t c = 0; c < d; ++c) out << ',' << format_g17(trajectory.x(i)[c]);
    out << '\n';
  }
}

}  // namespace belm
