#include "belm/samplers.hpp"

#include <cstddef>
#include <string>

#include "belm/coeffs.hpp"
#include "belm/errors.hpp"

namespace belm {

namespace {

constexpr int kObelm3MaxSteps = 10000;

void require_step_index(const NoiseSchedule& schedule, int i, int lo, int hi, const char* who) {
  if (i < lo || i > hi) {
    throw ConfigError(std::string(who) + ": step index " + std::to_string(i) + " outside " +
                      std::to_string(lo) + ".." + std::to_string(hi) + " (N = " +
                      std::to_string(schedule.N()) + ")");
  }
}

void require_finite(const Vec& v, const char* method, int level) {
  if (!all_finite(v)) {
    throw NumericalError(std::string(method) + ": non-finite state at level " +
                         std::to_string(level));
  }
}

void require_same_dim(const Vec& v, std::size_t d, const char* who) {
  if (v.size() != d) {
    throw ConfigError(std::string(who) + ": state dimension mismatch (" +
                      std::to_string(v.size()) + " vs " + std::to_string(d) + ")");
  }
}

// Shared two-step history term t = a1 * xbar_i + (b1 h) * epsbar, evaluated
// with one fixed expression tree. The forward update adds a2 * xbar_ip1 to it
// and the inverse subtracts it back out, so the only rounding a roundtrip
// sees is the add/divide pair.
inline double hist2(double a1, double xbar_i, double b1h, double e) {
  return a1 * xbar_i + b1h * e;
}

// Three-step analogue: t = (a1 xb_i + a2 xb_ip1) + (b1 h1 e1 + b2 h2 e2).
inline double hist3(double a1, double xb_i, double a2, double xb_ip1, double b1h1, double e1,
                    double b2h2, double e2) {
  return (a1 * xb_i + a2 * xb_ip1) + (b1h1 * e1 + b2h2 * e2);
}

// Local sigma-bar step h_i, identical arithmetic to grid_of but O(1).
inline double local_step(const NoiseSchedule& schedule, int i) {
  return schedule.sbar(i) - schedule.sbar(i - 1);
}

}  // namespace

Method Method::ddim() { return Method{MethodKind::Ddim, 0.93, 0.5}; }

Method Method::edict(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("Method::edict: mixing weight p must lie in (0, 1), got " +
                      std::to_string(p));
  }
  return Method{MethodKind::Edict, p, 0.5};
}

Method Method::bdia(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("Method::bdia: gamma must lie in [0, 1], got " + std::to_string(gamma));
  }
  return Method{MethodKind::Bdia, 0.93, gamma};
}

Method Method::obelm2() { return Method{MethodKind::Obelm2, 0.93, 0.5}; }

Method Method::obelm3() { return Method{MethodKind::Obelm3, 0.93, 0.5}; }

std::string Method::name() const {
  switch (kind) {
    case MethodKind::Ddim:
      return "ddim";
    case MethodKind::Edict:
      return "edict";
    case MethodKind::Bdia:
      return "bdia";
    case MethodKind::Obelm2:
      return "obelm2";
    case MethodKind::Obelm3:
      return "obelm3";
  }
  return "unknown";
}

Method method_from_name(const std::string& name, double p, double gamma) {
  if (name == "ddim") return Method::ddim();
  if (name == "edict") return Method::edict(p);
  if (name == "bdia") return Method::bdia(gamma);
  if (name == "obelm2") return Method::obelm2();
  if (name == "obelm3") return Method::obelm3();
  throw ConfigError("unknown method '" + name + "' (expected ddim|edict|bdia|obelm2|obelm3)");
}

Vec ddim_step(const Vec& x_i, int i, const NoisePredictor& eps, const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N(), "ddim_step");
  const double r = schedule.alpha(i - 1) / schedule.alpha(i);
  const double b = schedule.sigma(i - 1) - r * schedule.sigma(i);
  const Vec e = eps.eval(x_i, i);
  Vec out(x_i.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = r * x_i[c] + b * e[c];
  return out;
}

Vec ddim_invert_step(const Vec& x_im1, int i, const NoisePredictor& eps,
                     const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N(), "ddim_invert_step");
  const double r = schedule.alpha(i) / schedule.alpha(i - 1);
  const double b = schedule.sigma(i) - r * schedule.sigma(i - 1);
  const Vec e = eps.eval(x_im1, i - 1);
  Vec out(x_im1.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = r * x_im1[c] + b * e[c];
  return out;
}

std::pair<Vec, Vec> edict_step(const Vec& x_i, const Vec& y_i, int i, double p,
                               const NoisePredictor& eps, const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N(), "edict_step");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("edict_step: p must lie in (0, 1)");
  const double a = schedule.alpha(i - 1) / schedule.alpha(i);
  const double b = schedule.sigma(i - 1) - a * schedule.sigma(i);
  const std::size_t d = x_i.size();
  const Vec ey = eps.eval(y_i, i);
  Vec x_inter(d), y_inter(d), x_out(d), y_out(d);
  for (std::size_t c = 0; c < d; ++c) x_inter[c] = a * x_i[c] + b * ey[c];
  const Vec ex = eps.eval(x_inter, i);
  for (std::size_t c = 0; c < d; ++c) y_inter[c] = a * y_i[c] + b * ex[c];
  for (std::size_t c = 0; c < d; ++c) x_out[c] = p * x_inter[c] + (1.0 - p) * y_inter[c];
  for (std::size_t c = 0; c < d; ++c) y_out[c] = p * y_inter[c] + (1.0 - p) * x_out[c];
  return {x_out, y_out};
}

std::pair<Vec, Vec> edict_invert_step(const Vec& x_im1, const Vec& y_im1, int i, double p,
                                      const NoisePredictor& eps, const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N(), "edict_invert_step");
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("edict_invert_step: p must lie in (0, 1)");
  const double a = schedule.alpha(i - 1) / schedule.alpha(i);
  const double b = schedule.sigma(i - 1) - a * schedule.sigma(i);
  const std::size_t d = x_im1.size();
  Vec y_inter(d), x_inter(d), y_out(d), x_out(d);
  for (std::size_t c = 0; c < d; ++c) y_inter[c] = (y_im1[c] - (1.0 - p) * x_im1[c]) / p;
  for (std::size_t c = 0; c < d; ++c) x_inter[c] = (x_im1[c] - (1.0 - p) * y_inter[c]) / p;
  const Vec ex = eps.eval(x_inter, i);
  for (std::size_t c = 0; c < d; ++c) y_out[c] = (y_inter[c] - b * ex[c]) / a;
  const Vec ey = eps.eval(y_out, i);
  for (std::size_t c = 0; c < d; ++c) x_out[c] = (x_inter[c] - b * ey[c]) / a;
  return {x_out, y_out};
}

Vec bdia_step(const Vec& x_ip1, const Vec& x_i, int i, double gamma, const NoisePredictor& eps,
              const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N() - 1, "bdia_step");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("bdia_step: gamma must lie in [0, 1]");
  const double r = schedule.alpha(i - 1) / schedule.alpha(i);
  const double bd = schedule.sigma(i - 1) - r * schedule.sigma(i);
  const double rp = schedule.alpha(i + 1) / schedule.alpha(i);
  const double bu = schedule.sigma(i + 1) - rp * schedule.sigma(i);
  const Vec e = eps.eval(x_i, i);
  Vec out(x_i.size());
  // DDIM part plus gamma times the mismatch of the upward DDIM prediction;
  // with gamma = 0 this evaluates to exactly the DDIM update.
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double down = r * x_i[c] + bd * e[c];
    const double up = rp * x_i[c] + bu * e[c];
    out[c] = down + gamma * (x_ip1[c] - up);
  }
  return out;
}

Vec bdia_invert_step(const Vec& x_im1, const Vec& x_i, int i, double gamma,
                     const NoisePredictor& eps, const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N() - 1, "bdia_invert_step");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("bdia_invert_step: gamma must lie in [0, 1]");
  }
  if (gamma == 0.0) {
    throw NotInvertibleError(
        "bdia_invert_step: gamma = 0 collapses to DDIM, whose step is not exactly invertible");
  }
  const double r = schedule.alpha(i - 1) / schedule.alpha(i);
  const double bd = schedule.sigma(i - 1) - r * schedule.sigma(i);
  const double rp = schedule.alpha(i + 1) / schedule.alpha(i);
  const double bu = schedule.sigma(i + 1) - rp * schedule.sigma(i);
  const Vec e = eps.eval(x_i, i);
  Vec out(x_i.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double down = r * x_i[c] + bd * e[c];
    const double up = rp * x_i[c] + bu * e[c];
    out[c] = up + (x_im1[c] - down) / gamma;
  }
  return out;
}

Vec belm2_apply(double a1, double a2, double b1, const Vec& xbar_i, const Vec& xbar_ip1, double h,
                const Vec& epsbar_i) {
  const double b1h = b1 * h;
  Vec out(xbar_i.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = a2 * xbar_ip1[c] + hist2(a1, xbar_i[c], b1h, epsbar_i[c]);
  }
  return out;
}

Vec obelm2_step(const Vec& x_ip1, const Vec& x_i, int i, const NoisePredictor& eps,
                const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N() - 1, "obelm2_step");
  const double h1 = local_step(schedule, i);
  const double h2 = local_step(schedule, i + 1);
  const Belm2Coeffs c = belm2_optimal(h1, h2);
  const double ai = schedule.alpha(i);
  const double aip1 = schedule.alpha(i + 1);
  const Vec e = eps.eval(x_i, i);
  const double b1h = c.b1 * h1;
  Vec out(x_i.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = hist2(c.a1, x_i[k] / ai, b1h, e[k]);
    out[k] = schedule.alpha(i - 1) * (c.a2 * (x_ip1[k] / aip1) + t);
  }
  return out;
}

Vec obelm2_invert_step(const Vec& x_im1, const Vec& x_i, int i, const NoisePredictor& eps,
                       const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N() - 1, "obelm2_invert_step");
  const double h1 = local_step(schedule, i);
  const double h2 = local_step(schedule, i + 1);
  const Belm2Coeffs c = belm2_optimal(h1, h2);
  const double ai = schedule.alpha(i);
  const Vec e = eps.eval(x_i, i);
  const double b1h = c.b1 * h1;
  Vec out(x_i.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = hist2(c.a1, x_i[k] / ai, b1h, e[k]);
    out[k] = schedule.alpha(i + 1) * ((x_im1[k] / schedule.alpha(i - 1) - t) / c.a2);
  }
  return out;
}

Vec obelm3_step(const Vec& x_ip2, const Vec& x_ip1, const Vec& x_i, int i,
                const NoisePredictor& eps, const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N() - 2, "obelm3_step");
  const double h1 = local_step(schedule, i);
  const double h2 = local_step(schedule, i + 1);
  const double h3 = local_step(schedule, i + 2);
  const BelmKCoeffs c = belm3_optimal(h1, h2, h3);
  const Vec e1 = eps.eval(x_i, i);
  const Vec e2 = eps.eval(x_ip1, i + 1);
  const double b1h1 = c.b[0] * h1;
  const double b2h2 = c.b[1] * h2;
  const double ai = schedule.alpha(i);
  const double aip1 = schedule.alpha(i + 1);
  const double aip2 = schedule.alpha(i + 2);
  Vec out(x_i.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = hist3(c.a[0], x_i[k] / ai, c.a[1], x_ip1[k] / aip1, b1h1, e1[k], b2h2, e2[k]);
    out[k] = schedule.alpha(i - 1) * (c.a[2] * (x_ip2[k] / aip2) + t);
  }
  return out;
}

Vec obelm3_invert_step(const Vec& x_im1, const Vec& x_i, const Vec& x_ip1, int i,
                       const NoisePredictor& eps, const NoiseSchedule& schedule) {
  require_step_index(schedule, i, 1, schedule.N() - 2, "obelm3_invert_step");
  const double h1 = local_step(schedule, i);
  const double h2 = local_step(schedule, i + 1);
  const double h3 = local_step(schedule, i + 2);
  const BelmKCoeffs c = belm3_optimal(h1, h2, h3);
  const Vec e1 = eps.eval(x_i, i);
  const Vec e2 = eps.eval(x_ip1, i + 1);
  const double b1h1 = c.b[0] * h1;
  const double b2h2 = c.b[1] * h2;
  const double ai = schedule.alpha(i);
  const double aip1 = schedule.alpha(i + 1);
  Vec out(x_i.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = hist3(c.a[0], x_i[k] / ai, c.a[1], x_ip1[k] / aip1, b1h1, e1[k], b2h2, e2[k]);
    out[k] = schedule.alpha(i + 2) * ((x_im1[k] / schedule.alpha(i - 1) - t) / c.a[2]);
  }
  return out;
}

Trajectory sample(const Method& method, const NoisePredictor& eps, const NoiseSchedule& schedule,
                  const Vec& x_N, const SampleOptions& options) {
  const int N = schedule.N();
  const std::size_t d = x_N.size();
  if (d == 0) throw ConfigError("sample: empty state");
  if (method.kind == MethodKind::Obelm3 && N > kObelm3MaxSteps) {
    throw ConfigError("sample: OBELM3 is capped at N <= " + std::to_string(kObelm3MaxSteps) +
                      " steps (unstable inverse recursion), got N = " + std::to_string(N));
  }
  require_finite(x_N, "sample", N);

  Trajectory traj;
  traj.states.assign(static_cast<std::size_t>(N) + 1, Vec());
  traj.states[static_cast<std::size_t>(N)] = x_N;

  const auto set_state = [&](int level, Vec v) {
    require_finite(v, "sample", level);
    traj.states[static_cast<std::size_t>(level)] = std::move(v);
  };

  switch (method.kind) {
    case MethodKind::Ddim: {
      for (int i = N; i >= 1; --i) {
        set_state(i - 1, ddim_step(traj.x(i), i, eps, schedule));
      }
      break;
    }
    case MethodKind::Edict: {
      traj.aux.assign(static_cast<std::size_t>(N) + 1, Vec());
      Vec y = options.y_N ? *options.y_N : x_N;
      require_same_dim(y, d, "sample: y_N");
      traj.aux[static_cast<std::size_t>(N)] = y;
      for (int i = N; i >= 1; --i) {
        auto [xn, yn] = edict_step(traj.x(i), traj.y(i), i, method.p, eps, schedule);
        require_finite(yn, "sample", i - 1);
        traj.aux[static_cast<std::size_t>(i) - 1] = std::move(yn);
        set_state(i - 1, std::move(xn));
      }
      break;
    }
    case MethodKind::Bdia:
    case MethodKind::Obelm2: {
      if (N >= 1) {
        Vec first = options.x_Nm1 ? *options.x_Nm1 : ddim_step(x_N, N, eps, schedule);
        require_same_dim(first, d, "sample: x_Nm1");
        set_state(N - 1, std::move(first));
      }
      for (int i = N - 1; i >= 1; --i) {
        Vec next = method.kind == MethodKind::Bdia
                       ? bdia_step(traj.x(i + 1), traj.x(i), i, method.gamma, eps, schedule)
                       : obelm2_step(traj.x(i + 1), traj.x(i), i, eps, schedule);
        set_state(i - 1, std::move(next));
      }
      break;
    }
    case MethodKind::Obelm3: {
      if (N >= 1) {
        Vec first = options.x_Nm1 ? *options.x_Nm1 : ddim_step(x_N, N, eps, schedule);
        require_same_dim(first, d, "sample: x_Nm1");
        set_state(N - 1, std::move(first));
      }
      if (N >= 2) {
        Vec second =
            options.x_Nm2 ? *options.x_Nm2 : ddim_step(traj.x(N - 1), N - 1, eps, schedule);
        require_same_dim(second, d, "sample: x_Nm2");
        set_state(N - 2, std::move(second));
      }
      for (int i = N - 2; i >= 1; --i) {
        set_state(i - 1,
                  obelm3_step(traj.x(i + 2), traj.x(i + 1), traj.x(i), i, eps, schedule));
      }
      break;
    }
  }
  return traj;
}

Trajectory invert(const Method& method, const NoisePredictor& eps, const NoiseSchedule& schedule,
                  const InversionSeed& seed) {
  const int N = schedule.N();
  const std::size_t d = seed.x0.size();
  if (d == 0) throw ConfigError("invert: empty state");
  if (method.kind == MethodKind::Bdia && method.gamma == 0.0) {
    throw NotInvertibleError("invert: BDIA with gamma = 0 is DDIM, which has no exact inverse");
  }
  if (method.kind == MethodKind::Obelm3 && N > kObelm3MaxSteps) {
    throw ConfigError("invert: OBELM3 is capped at N <= " + std::to_string(kObelm3MaxSteps) +
                      " steps (unstable inverse recursion), got N = " + std::to_string(N));
  }
  require_finite(seed.x0, "invert", 0);

  Trajectory traj;
  traj.states.assign(static_cast<std::size_t>(N) + 1, Vec());
  traj.states[0] = seed.x0;

  const auto set_state = [&](int level, Vec v) {
    require_finite(v, "invert", level);
    traj.states[static_cast<std::size_t>(level)] = std::move(v);
  };

  switch (method.kind) {
    case MethodKind::Ddim: {
      for (int i = 1; i <= N; ++i) {
        set_state(i, ddim_invert_step(traj.x(i - 1), i, eps, schedule));
      }
      break;
    }
    case MethodKind::Edict: {
      traj.aux.assign(static_cast<std::size_t>(N) + 1, Vec());
      Vec y = seed.y0 ? *seed.y0 : seed.x0;
      require_same_dim(y, d, "invert: y0");
      traj.aux[0] = y;
      for (int i = 1; i <= N; ++i) {
        auto [xn, yn] = edict_invert_step(traj.x(i - 1), traj.y(i - 1), i, method.p, eps, schedule);
        require_finite(yn, "invert", i);
        traj.aux[static_cast<std::size_t>(i)] = std::move(yn);
        set_state(i, std::move(xn));
      }
      break;
    }
    case MethodKind::Bdia:
    case MethodKind::Obelm2: {
      if (N >= 1) {
        if (seed.x1) {
          require_same_dim(*seed.x1, d, "invert: x1");
          set_state(1, *seed.x1);
        } else {
          set_state(1, ddim_invert_step(seed.x0, 1, eps, schedule));
          traj.approximate_bootstrap = true;
        }
      }
      for (int i = 1; i <= N - 1; ++i) {
        Vec next =
            method.kind == MethodKind::Bdia
                ? bdia_invert_step(traj.x(i - 1), traj.x(i), i, method.gamma, eps, schedule)
                : obelm2_invert_step(traj.x(i - 1), traj.x(i), i, eps, schedule);
        set_state(i + 1, std::move(next));
      }
      break;
    }
    case MethodKind::Obelm3: {
      if (N >= 1) {
        if (seed.x1) {
          require_same_dim(*seed.x1, d, "invert: x1");
          set_state(1, *seed.x1);
        } else {
          set_state(1, ddim_invert_step(seed.x0, 1, eps, schedule));
          traj.approximate_bootstrap = true;
        }
      }
      if (N >= 2) {
        if (seed.x2) {
          require_same_dim(*seed.x2, d, "invert: x2");
          set_state(2, *seed.x2);
        } else {
          set_state(2, ddim_invert_step(traj.x(1), 2, eps, schedule));
          traj.approximate_bootstrap = true;
        }
      }
      for (int i = 1; i <= N - 2; ++i) {
        set_state(i + 2,
                  obelm3_invert_step(traj.x(i - 1), traj.x(i), traj.x(i + 1), i, eps, schedule));
      }
      break;
    }
  }
  return traj;
}

}  // namespace belm
