// belm_lab: command-line laboratory for bidirectional explicit linear
// multistep diffusion samplers. Wires schedules, noise predictors, methods,
// and empirical studies together and writes deterministic CSV/JSON artifacts.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "belm/analysis.hpp"
#include "belm/coeffs.hpp"
#include "belm/errors.hpp"
#include "belm/predictor.hpp"
#include "belm/rng.hpp"
#include "belm/samplers.hpp"
#include "belm/schedule.hpp"

using nlohmann::json;

namespace {

struct RunConfig {
  std::string config_path;
  std::string method = "obelm2";
  double gamma = 0.5;
  double p = 0.93;
  int steps = 50;
  int dim = 4;
  int trials = 10;
  std::uint64_t seed = 42;
  std::string problem = "gaussian";
  double s = 1.0;
  std::vector<double> poly_coeffs = {0.4, -0.3, 0.7};
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::string schedule_file;
  std::string out = "out.csv";
  std::string format = "csv";
  // study-specific knobs
  std::vector<int> Ns = {16, 32, 64, 128, 256};
  std::vector<double> hs;
  int k = 2;
  double sbar_base = -1.0;  // < 0 means per-problem default
};

int threads_cap() {
  const char* env = std::getenv("BELM_LAB_THREADS");
  if (env == nullptr || *env == '\0') return 0;  // unset: no cap requested
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) {
    throw belm::ConfigError("BELM_LAB_THREADS must be a positive integer, got '" +
                            std::string(env) + "'");
  }
  return static_cast<int>(v);
}

// The config file takes precedence over flags: any key present in the JSON
// replaces the flag (or default) value.
void apply_config_file(RunConfig& cfg) {
  if (cfg.config_path.empty()) return;
  std::ifstream in(cfg.config_path);
  if (!in) throw belm::ConfigError("cannot open config file " + cfg.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw belm::ConfigError("config file " + cfg.config_path + ": " + e.what());
  }
  try {
    if (j.contains("method")) cfg.method = j["method"].get<std::string>();
    if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
    if (j.contains("p")) cfg.p = j["p"].get<double>();
    if (j.contains("steps")) cfg.steps = j["steps"].get<int>();
    if (j.contains("dim")) cfg.dim = j["dim"].get<int>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("problem")) cfg.problem = j["problem"].get<std::string>();
    if (j.contains("s")) cfg.s = j["s"].get<double>();
    if (j.contains("poly_coeffs")) cfg.poly_coeffs = j["poly_coeffs"].get<std::vector<double>>();
    if (j.contains("beta_start")) cfg.beta_start = j["beta_start"].get<double>();
    if (j.contains("beta_end")) cfg.beta_end = j["beta_end"].get<double>();
    if (j.contains("schedule_file")) cfg.schedule_file = j["schedule_file"].get<std::string>();
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("format")) cfg.format = j["format"].get<std::string>();
    if (j.contains("Ns")) cfg.Ns = j["Ns"].get<std::vector<int>>();
    if (j.contains("hs")) cfg.hs = j["hs"].get<std::vector<double>>();
    if (j.contains("k")) cfg.k = j["k"].get<int>();
    if (j.contains("sbar_base")) cfg.sbar_base = j["sbar_base"].get<double>();
  } catch (const json::exception& e) {
    throw belm::ConfigError("config file " + cfg.config_path + ": " + e.what());
  }
}

json config_json(const RunConfig& cfg, const std::string& command) {
  json j;
  j["command"] = command;
  j["method"] = cfg.method;
  j["gamma"] = cfg.gamma;
  j["p"] = cfg.p;
  j["steps"] = cfg.steps;
  j["dim"] = cfg.dim;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["problem"] = cfg.problem;
  j["s"] = cfg.s;
  j["poly_coeffs"] = cfg.poly_coeffs;
  j["beta_start"] = cfg.beta_start;
  j["beta_end"] = cfg.beta_end;
  j["schedule_file"] = cfg.schedule_file;
  j["out"] = cfg.out;
  j["format"] = cfg.format;
  j["Ns"] = cfg.Ns;
  j["hs"] = cfg.hs;
  j["k"] = cfg.k;
  j["sbar_base"] = cfg.sbar_base;
  return j;
}

belm::NoiseSchedule make_schedule(const RunConfig& cfg) {
  if (!cfg.schedule_file.empty()) {
    std::ifstream in(cfg.schedule_file);
    if (!in) throw belm::ConfigError("cannot open schedule file " + cfg.schedule_file);
    std::vector<double> alphas, sigmas;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.rfind("alpha", 0) == 0) continue;  // header
      for (char& c : line) {
        if (c == ',') c = ' ';
      }
      std::istringstream row(line);
      double a = 0.0, s = 0.0;
      if (!(row >> a >> s)) {
        throw belm::ConfigError("schedule file " + cfg.schedule_file + ": bad row '" + line + "'");
      }
      alphas.push_back(a);
      sigmas.push_back(s);
    }
    return belm::from_tables(std::move(alphas), std::move(sigmas));
  }
  return belm::vp_linear_schedule(cfg.steps, cfg.beta_start, cfg.beta_end);
}

// Owns the schedule, the problem description, and the predictor together so
// the predictor's schedule pointer stays valid.
struct Bundle {
  belm::NoiseSchedule schedule;
  belm::GaussianProblem gaussian;
  belm::PolynomialProblem polynomial;
  std::unique_ptr<belm::NoisePredictor> eps;
};

std::unique_ptr<Bundle> make_bundle(const RunConfig& cfg) {
  auto bundle = std::make_unique<Bundle>();
  bundle->schedule = make_schedule(cfg);
  if (cfg.problem == "gaussian") {
    bundle->gaussian = belm::GaussianProblem{cfg.s, &bundle->schedule, cfg.dim};
    bundle->eps = std::make_unique<belm::GaussianPredictor>(bundle->gaussian);
  } else if (cfg.problem == "poly") {
    bundle->polynomial = belm::PolynomialProblem{cfg.poly_coeffs, &bundle->schedule};
    bundle->eps = std::make_unique<belm::PolynomialPredictor>(bundle->polynomial);
  } else if (cfg.problem == "synthetic") {
    bundle->eps = std::make_unique<belm::SyntheticPredictor>(cfg.seed, &bundle->schedule);
  } else {
    throw belm::ConfigError("unknown problem '" + cfg.problem +
                            "' (expected gaussian | poly | synthetic)");
  }
  return bundle;
}

std::vector<belm::Method> parse_methods(const RunConfig& cfg) {
  std::vector<belm::Method> out;
  std::istringstream ss(cfg.method);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) out.push_back(belm::method_from_name(name, cfg.p, cfg.gamma));
  }
  if (out.empty()) throw belm::ConfigError("no method named in --method");
  return out;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw belm::ConfigError("cannot open output file " + path);
  out << body;
}

void write_sidecar(const RunConfig& cfg, const std::string& command) {
  json meta;
  meta["config"] = config_json(cfg, command);
  const int cap = threads_cap();
  meta["threads"] = {{"cap", cap == 0 ? json(nullptr) : json(cap)}, {"used", 1}};
  meta["outputs"] = {{cfg.out, belm::fnv1a64_hex_of_file(cfg.out)}};
  write_text(cfg.out + ".meta.json", meta.dump(2) + "\n");
}

std::string opt_to_string(const std::optional<double>& v) {
  return v ? belm::format_g17(*v) : std::string("n/a");
}

json rows_json(const belm::ConvergenceReport& r) {
  json j;
  j["method"] = r.method;
  j["problem"] = r.problem;
  j["fitted_order"] = r.fitted_order ? json(*r.fitted_order) : json(nullptr);
  j["rows"] = json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"N", row.N},
                         {"h_max", row.h_max},
                         {"global_error", row.global_error},
                         {"max_grid_error", row.max_grid_error}});
  }
  return j;
}

json rows_json(const belm::LteReport& r) {
  json j;
  j["method"] = r.method;
  j["problem"] = r.problem;
  j["fitted_order"] = r.fitted_order ? json(*r.fitted_order) : json(nullptr);
  j["rows"] = json::array();
  for (const auto& row : r.rows) j["rows"].push_back({{"h", row.h}, {"error", row.error}});
  return j;
}

json rows_json(const belm::RoundtripReport& r) {
  json j;
  j["rows"] = json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"method", row.method},
                         {"N", row.N},
                         {"trials", row.trials},
                         {"reconstruction_max_rel", row.reconstruction_max_rel},
                         {"reconstruction_mse", row.reconstruction_mse},
                         {"forward_max_rel", row.forward_max_rel},
                         {"forward_mse", row.forward_mse},
                         {"skipped", row.skipped},
                         {"note", row.note}});
  }
  return j;
}

json trajectory_json(const belm::Trajectory& traj, const belm::NoiseSchedule& schedule) {
  json j;
  j["rows"] = json::array();
  for (int i = 0; i <= schedule.N(); ++i) {
    j["rows"].push_back({{"step_index", i}, {"sbar", schedule.sbar(i)}, {"x", traj.x(i)}});
  }
  return j;
}

// ---- subcommand bodies ------------------------------------------------------

int run_coeffs(const RunConfig& cfg) {
  if (cfg.k < 2) throw belm::ConfigError("coeffs: k must be >= 2");
  struct Row {
    int i;
    std::vector<double> hs, a, b;
    double residual;
  };
  std::vector<Row> rows;

  const auto residual_of = [&](const std::vector<double>& hs, const std::vector<double>& a,
                               const std::vector<double>& b) {
    const belm::DenseSystem sys = belm::belmk_system(hs);
    std::vector<double> c;
    c.insert(c.end(), a.begin(), a.end());
    c.insert(c.end(), b.begin(), b.end());
    // Extended-precision accumulation so the reported residual reflects the
    // coefficients, not rounding noise from ~1e6-sized terms on anisotropic
    // grids.
    double worst = 0.0;
    for (int r = 0; r < sys.n; ++r) {
      long double acc = 0.0L;
      for (int j = 0; j < sys.n; ++j) {
        acc += static_cast<long double>(
                   sys.matrix[static_cast<std::size_t>(r * sys.n + j)]) *
               static_cast<long double>(c[static_cast<std::size_t>(j)]);
      }
      acc -= static_cast<long double>(sys.rhs[static_cast<std::size_t>(r)]);
      worst = std::max(worst, static_cast<double>(fabsl(acc)));
    }
    return worst;
  };
  const auto solve_one = [&](int i, const std::vector<double>& hs) {
    const belm::BelmKCoeffs c = belm::belmk_optimal(hs);
    rows.push_back({i, hs, c.a, c.b, residual_of(hs, c.a, c.b)});
  };

  if (!cfg.hs.empty()) {
    if (static_cast<int>(cfg.hs.size()) != cfg.k) {
      throw belm::ConfigError("coeffs: --hs needs exactly k = " + std::to_string(cfg.k) +
                              " step sizes");
    }
    solve_one(1, cfg.hs);
  } else {
    const belm::NoiseSchedule schedule = make_schedule(cfg);
    const belm::Grid grid = belm::grid_of(schedule);
    const int N = schedule.N();
    if (N < cfg.k) throw belm::ConfigError("coeffs: schedule too short for k");
    for (int i = 1; i + cfg.k - 1 <= N; ++i) {
      std::vector<double> hs(static_cast<std::size_t>(cfg.k));
      for (int j = 0; j < cfg.k; ++j) hs[static_cast<std::size_t>(j)] = grid.step(i + j);
      solve_one(i, hs);
    }
  }

  double max_residual = 0.0;
  for (const Row& r : rows) max_residual = std::max(max_residual, r.residual);

  if (cfg.format == "json") {
    json j;
    j["k"] = cfg.k;
    j["rows"] = json::array();
    for (const Row& r : rows) {
      j["rows"].push_back({{"i", r.i}, {"hs", r.hs}, {"a", r.a}, {"b", r.b},
                           {"residual", r.residual}});
    }
    write_text(cfg.out, j.dump(2) + "\n");
  } else {
    std::ostringstream out;
    out << "i";
    for (int j = 0; j < cfg.k; ++j) out << ",h_i" << (j == 0 ? "" : "p" + std::to_string(j));
    for (int j = 1; j <= cfg.k; ++j) out << ",a" << j;
    for (int j = 1; j < cfg.k; ++j) out << ",b" << j;
    out << ",residual\n";
    for (const Row& r : rows) {
      out << r.i;
      for (double h : r.hs) out << ',' << belm::format_g17(h);
      for (double a : r.a) out << ',' << belm::format_g17(a);
      for (double b : r.b) out << ',' << belm::format_g17(b);
      out << ',' << belm::format_g17(r.residual) << '\n';
    }
    write_text(cfg.out, out.str());
  }
  write_sidecar(cfg, "coeffs");
  std::cout << "coeffs: k=" << cfg.k << " rows=" << rows.size()
            << " max_residual=" << belm::format_g17(max_residual) << " out=" << cfg.out << "\n";
  return 0;
}

int run_trajectory(const RunConfig& cfg, bool inverted) {
  const auto bundle = make_bundle(cfg);
  const belm::Method method = parse_methods(cfg).front();
  const belm::Vec start = belm::rng::normal_vector(cfg.seed, 0, cfg.dim);
  belm::Trajectory traj;
  if (inverted) {
    belm::InversionSeed seedv;
    seedv.x0 = start;
    traj = belm::invert(method, *bundle->eps, bundle->schedule, seedv);
  } else {
    traj = belm::sample(method, *bundle->eps, bundle->schedule, start);
  }
  if (cfg.format == "json") {
    write_text(cfg.out, trajectory_json(traj, bundle->schedule).dump(2) + "\n");
  } else {
    belm::write_trajectory_csv(traj, bundle->schedule, cfg.out);
  }
  const char* name = inverted ? "invert" : "sample";
  write_sidecar(cfg, name);
  std::cout << name << ": method=" << method.name() << " N=" << bundle->schedule.N()
            << " dim=" << cfg.dim << " out=" << cfg.out << "\n";
  return 0;
}

int run_roundtrip(const RunConfig& cfg) {
  const auto bundle = make_bundle(cfg);
  const std::vector<belm::Method> methods = parse_methods(cfg);
  const belm::RoundtripReport report =
      belm::roundtrip_study(methods, *bundle->eps, bundle->schedule, cfg.trials, cfg.dim,
                            cfg.seed);
  if (cfg.format == "json") {
    write_text(cfg.out, rows_json(report).dump(2) + "\n");
  } else {
    belm::write_roundtrip_csv(report, cfg.out);
  }
  write_sidecar(cfg, "roundtrip");
  double worst = 0.0;
  int skipped = 0;
  for (const auto& row : report.rows) {
    if (row.skipped) {
      ++skipped;
    } else {
      worst = std::max(worst, row.reconstruction_max_rel);
    }
  }
  std::cout << "roundtrip: N=" << bundle->schedule.N() << " trials=" << cfg.trials
            << " max_rel_error=" << belm::format_g17(worst);
  if (skipped > 0) std::cout << " skipped=" << skipped;
  std::cout << " out=" << cfg.out << "\n";
  return 0;
}

int run_convergence(const RunConfig& cfg) {
  if (cfg.problem != "gaussian") {
    throw belm::ConfigError("convergence: only the gaussian problem has the exact flow needed");
  }
  const belm::Method method = parse_methods(cfg).front();
  const belm::GaussianProblem prototype{cfg.s, nullptr, cfg.dim};
  const belm::ConvergenceReport report = belm::convergence_study(method, prototype, cfg.Ns);
  if (cfg.format == "json") {
    write_text(cfg.out, rows_json(report).dump(2) + "\n");
  } else {
    belm::write_convergence_csv(report, cfg.out);
  }
  write_sidecar(cfg, "convergence");
  std::cout << "convergence: method=" << method.name()
            << " fitted_order=" << opt_to_string(report.fitted_order) << " out=" << cfg.out
            << "\n";
  return 0;
}

int run_lte(const RunConfig& cfg) {
  const belm::Method method = parse_methods(cfg).front();
  std::vector<double> hs = cfg.hs;
  if (hs.empty()) {
    double h = 0.2;
    for (int i = 0; i < 6; ++i, h *= 0.5) hs.push_back(h);
  }
  belm::LteReport report;
  if (cfg.problem == "gaussian") {
    const belm::GaussianProblem prototype{cfg.s, nullptr, cfg.dim};
    report = belm::lte_study(method, prototype, hs, cfg.sbar_base < 0 ? 0.8 : cfg.sbar_base);
  } else if (cfg.problem == "poly") {
    const belm::PolynomialProblem prototype{cfg.poly_coeffs, nullptr};
    report = belm::lte_study(method, prototype, hs, cfg.sbar_base < 0 ? 0.5 : cfg.sbar_base);
  } else {
    throw belm::ConfigError("lte: problem must be gaussian or poly");
  }
  if (cfg.format == "json") {
    write_text(cfg.out, rows_json(report).dump(2) + "\n");
  } else {
    belm::write_lte_csv(report, cfg.out);
  }
  write_sidecar(cfg, "lte");
  std::cout << "lte: method=" << method.name() << " problem=" << report.problem
            << " fitted_order=" << opt_to_string(report.fitted_order) << " out=" << cfg.out
            << "\n";
  return 0;
}

int run_stability(const RunConfig& cfg) {
  belm::Grid grid;
  if (!cfg.hs.empty()) {
    grid.sbar.push_back(0.0);
    for (double h : cfg.hs) grid.sbar.push_back(grid.sbar.back() + h);
    grid.h = cfg.hs;
  } else {
    grid = belm::grid_of(make_schedule(cfg));
  }
  const belm::StabilityReport report = belm::stability_check(grid);
  double max_norm = 0.0;
  for (double n : report.norms) max_norm = std::max(max_norm, n);

  if (cfg.format == "json") {
    json j;
    j["eta"] = report.eta;
    j["norms"] = report.norms;
    j["passed"] = report.passed;
    j["reason"] = report.reason;
    write_text(cfg.out, j.dump(2) + "\n");
  } else {
    std::ostringstream out;
    out << "i,h_i,h_ip1,ratio,norm1\n";
    const int N = static_cast<int>(grid.h.size());
    for (int i = 1; i <= N - 1; ++i) {
      const double hi = grid.step(i), hip1 = grid.step(i + 1);
      out << i << ',' << belm::format_g17(hi) << ',' << belm::format_g17(hip1) << ','
          << belm::format_g17(hi * hi / (hip1 * hip1)) << ',';
      if (!report.norms.empty()) out << belm::format_g17(report.norms[static_cast<std::size_t>(i - 1)]);
      out << '\n';
    }
    write_text(cfg.out, out.str());
  }
  write_sidecar(cfg, "stability");
  std::cout << "stability: eta=" << belm::format_g17(report.eta)
            << " passed=" << (report.passed ? "true" : "false")
            << " max_norm=" << belm::format_g17(max_norm);
  if (!report.reason.empty()) std::cout << " reason=\"" << report.reason << "\"";
  std::cout << " out=" << cfg.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"belm_lab: bidirectional explicit linear multistep sampler laboratory"};
  app.require_subcommand(1);

  std::string active;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cfg.config_path,
                    "JSON config; values here take precedence over flags");
    sub->add_option("--method", cfg.method,
                    "method name(s), comma separated: ddim | edict | bdia | obelm2 | obelm3");
    sub->add_option("--gamma", cfg.gamma, "BDIA mixing weight in [0, 1]");
    sub->add_option("--p", cfg.p, "EDICT mixing weight in (0, 1)");
    sub->add_option("--steps", cfg.steps, "number of steps N for built-in schedules");
    sub->add_option("--dim", cfg.dim, "state dimension");
    sub->add_option("--trials", cfg.trials, "number of random trials");
    sub->add_option("--seed", cfg.seed, "64-bit seed for the counter-based generator");
    sub->add_option("--problem", cfg.problem, "gaussian | poly | synthetic");
    sub->add_option("--s", cfg.s, "gaussian problem width");
    sub->add_option("--poly-coeffs", cfg.poly_coeffs, "polynomial coefficients, low order first")
        ->delimiter(',');
    sub->add_option("--beta-start", cfg.beta_start, "variance-preserving linear start");
    sub->add_option("--beta-end", cfg.beta_end, "variance-preserving linear end");
    sub->add_option("--schedule-file", cfg.schedule_file,
                    "CSV schedule (header alpha,sigma; one row per level)");
    sub->add_option("--out", cfg.out, "output file path");
    sub->add_option("--format", cfg.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--Ns", cfg.Ns, "step counts for convergence studies")->delimiter(',');
    sub->add_option("--hs", cfg.hs, "explicit step sizes")->delimiter(',');
    sub->add_option("--k", cfg.k, "number of history levels for coeffs");
    sub->add_option("--sbar-base", cfg.sbar_base, "expansion point for local-error studies");
    sub->callback([&, sub] { active = sub->get_name(); });
  };
  for (const char* name : {"coeffs", "sample", "invert", "roundtrip", "convergence", "lte",
                           "stability"}) {
    add_common(app.add_subcommand(name));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    threads_cap();  // validate eagerly so a bad cap fails before any work
    apply_config_file(cfg);
    if (active == "coeffs") return run_coeffs(cfg);
    if (active == "sample") return run_trajectory(cfg, false);
    if (active == "invert") return run_trajectory(cfg, true);
    if (active == "roundtrip") return run_roundtrip(cfg);
    if (active == "convergence") return run_convergence(cfg);
    if (active == "lte") return run_lte(cfg);
    if (active == "stability") return run_stability(cfg);
    std::cerr << "belm_lab: no subcommand selected\n";
    return 2;
  } catch (const belm::ConfigError& e) {
    std::cerr << "belm_lab: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const belm::SingularError& e) {
    std::cerr << "belm_lab: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const belm::NumericalError& e) {
    std::cerr << "belm_lab: numerical failure: " << e.what() << "\n";
    return 3;
  }
}
