#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "belm/analysis.hpp"
#include "belm/errors.hpp"
#include "belm/predictor.hpp"
#include "belm/rng.hpp"
#include "belm/samplers.hpp"
#include "belm/schedule.hpp"

using namespace belm;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("output") {

TEST_CASE("format_g17 round-trips every double through decimal text") {
  const std::vector<double> values{0.0,       1.0,        -1.0,          0.1,
                                   1.0 / 3.0, 1e-300,     123456.789,    3.141592653589793,
                                   -2.5e17,   0.0009765625, 2.2250738585072014e-308};
  for (double v : values) {
    const std::string text = format_g17(v);
    char* end = nullptr;
    const double back = std::strtod(text.c_str(), &end);
    CHECK(*end == '\0');
    CHECK(back == v);
  }
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);

  const std::string path = temp_path("belm_fnv_probe.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "a";
  }
  CHECK(fnv1a64_hex_of_file(path) == "af63dc4c8601ec8c");
  std::remove(path.c_str());
}

TEST_CASE("splitmix64 and normal_vector are deterministic counter-based generators") {
  // Regression pins for the mixing finalizer. These are the generator's own
  // frozen outputs, not an external test vector: every seeded state in the
  // library derives from this function, so any change to it must be caught
  // here before it silently shifts the pinned study values elsewhere.
  CHECK(rng::splitmix64(0) == 0x9BB2636345FB74C6ULL);
  CHECK(rng::splitmix64(1) == 0x2F3D4A9AB722D5B3ULL);
  CHECK(rng::splitmix64(0xDEADBEEFULL) == 0x2E43F22D57013EE6ULL);
  CHECK(rng::u01(0) == 0.0);
  CHECK(rng::u01(~0ULL) < 1.0);

  const std::vector<double> a = rng::normal_vector(42, 7, 16);
  const std::vector<double> b = rng::normal_vector(42, 7, 16);
  CHECK(a == b);
  CHECK(rng::normal_vector(42, 8, 16) != a);
  CHECK(rng::normal_vector(43, 7, 16) != a);

  // prefix property: a shorter request is a prefix of a longer one
  const std::vector<double> longer = rng::normal_vector(42, 7, 32);
  for (std::size_t j = 0; j < a.size(); ++j) CHECK(longer[j] == a[j]);

  const int n = 100000;
  const std::vector<double> big = rng::normal_vector(1234, 0, n);
  double mean = 0.0, var = 0.0;
  for (double v : big) mean += v;
  mean /= n;
  for (double v : big) var += (v - mean) * (v - mean);
  var /= n - 1;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("convergence CSV: header, LF endings, fitted order only on the last row") {
  const GaussianProblem g{1.3, nullptr, 4};
  const ConvergenceReport rep = convergence_study(Method::obelm2(), g, {16, 32, 64});
  REQUIRE(rep.fitted_order.has_value());
  const std::string path = temp_path("belm_conv_probe.csv");
  write_convergence_csv(rep, path);
  const std::string text = slurp(path);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(!text.empty());
  CHECK(text.back() == '\n');

  const std::vector<std::string> lines = lines_of(text);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "method,problem,N,h_max,global_error,fitted_order,max_grid_error");
  // fitted_order column (index 5) is empty on all but the last data row
  for (std::size_t r = 1; r < lines.size(); ++r) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : lines[r]) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    REQUIRE(fields.size() == 7);
    if (r + 1 < lines.size()) {
      CHECK(fields[5].empty());
    } else {
      CHECK(!fields[5].empty());
      char* end = nullptr;
      const double fitted = std::strtod(fields[5].c_str(), &end);
      CHECK(fitted == *rep.fitted_order);
    }
  }

  // byte-identical reruns
  const std::string path2 = temp_path("belm_conv_probe2.csv");
  write_convergence_csv(rep, path2);
  CHECK(slurp(path2) == text);
  CHECK(fnv1a64_hex_of_file(path) == fnv1a64_hex_of_file(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("lte and perturbation CSV headers") {
  const GaussianProblem g{1.3, nullptr, 4};
  std::vector<double> hs;
  for (int k = 0; k < 6; ++k) hs.push_back(0.2 / std::pow(2.0, k));
  const LteReport lte = lte_study(Method::ddim(), g, hs);
  const std::string lte_path = temp_path("belm_lte_probe.csv");
  write_lte_csv(lte, lte_path);
  const std::vector<std::string> lte_lines = lines_of(slurp(lte_path));
  REQUIRE(lte_lines.size() == hs.size() + 1);
  CHECK(lte_lines[0] == "method,h,error,fitted_order");
  std::remove(lte_path.c_str());

  PerturbationReport pert;
  pert.method = "obelm2";
  pert.delta = 1e-6;
  pert.trials = 2;
  pert.k_hat = 2.5;
  pert.per_trial_k_hat = {2.5, 2.25};
  const std::string pert_path = temp_path("belm_pert_probe.csv");
  write_perturbation_csv(pert, pert_path);
  const std::vector<std::string> pert_lines = lines_of(slurp(pert_path));
  REQUIRE(pert_lines.size() == 2);
  CHECK(pert_lines[0] == "method,delta,K_hat");
  CHECK(pert_lines[1] == "obelm2," + format_g17(1e-6) + "," + format_g17(2.5));
  std::remove(pert_path.c_str());
}

TEST_CASE("roundtrip CSV drops skipped rows and reports the reconstruction error") {
  const NoiseSchedule s = vp_linear_schedule(10, 1e-4, 0.02);
  const SyntheticPredictor eps(7, &s);
  const RoundtripReport rep =
      roundtrip_study({Method::obelm2(), Method::bdia(0.0)}, eps, s, 10, 3, 42);
  REQUIRE(rep.rows.size() == 2);
  REQUIRE(rep.rows[1].skipped);

  const std::string path = temp_path("belm_rt_probe.csv");
  write_roundtrip_csv(rep, path);
  const std::vector<std::string> lines = lines_of(slurp(path));
  REQUIRE(lines.size() == 2);  // header + the one non-skipped method
  CHECK(lines[0] == "method,N,trials,max_rel_error");
  CHECK(lines[1].rfind("obelm2,10,10,", 0) == 0);
  const std::string err_field = lines[1].substr(std::string("obelm2,10,10,").size());
  char* end = nullptr;
  CHECK(std::strtod(err_field.c_str(), &end) == rep.rows[0].reconstruction_max_rel);
  std::remove(path.c_str());
}

TEST_CASE("trajectory CSV carries one row per level with sbar and state columns") {
  const NoiseSchedule s = vp_linear_schedule(5, 1e-4, 0.02);
  const SyntheticPredictor eps(3, &s);
  const Vec x_N = rng::normal_vector(1, 0, 2);
  const Trajectory t = sample(Method::obelm2(), eps, s, x_N);
  const std::string path = temp_path("belm_traj_probe.csv");
  write_trajectory_csv(t, s, path);
  const std::vector<std::string> lines = lines_of(slurp(path));
  REQUIRE(lines.size() == 7);  // header + levels 0..5
  CHECK(lines[0] == "step_index,sbar,x_0,x_1");
  CHECK(lines[1].rfind("0,", 0) == 0);
  // the last row is the noise-end state we started from
  std::vector<std::string> fields;
  std::string cur;
  for (char c : lines[6]) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  REQUIRE(fields.size() == 4);
  CHECK(fields[0] == "5");
  CHECK(fields[2] == format_g17(x_N[0]));
  CHECK(fields[3] == format_g17(x_N[1]));
  std::remove(path.c_str());
}

}  // TEST_SUITE
