#pragma once

#include <cstdint>
#include <limits>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmhd::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One requested norm of the sweep differences: besov (s, p, r),
// sobolev (s), lebesgue (p) or anisotropic (p horizontal, r vertical).
struct NormSpec {
  std::string space = "besov";
  double s = 0.0;
  double p = 2.0;
  double r = 2.0;
  std::string id() const;
};

struct DispersionNormSpec {
  std::string kind = "lebesgue";  // lebesgue | anisotropic
  double index = 2.0;
};

struct RunConfig {
  std::string experiment = "sweep";  // sweep | dispersion | besov-bench | single-run
  std::uint64_t seed = 1;

  int grid_n = 32;
  double grid_box = 6.283185307179586;

  double nu = 0.05;
  double nu_prime = 0.05;

  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  std::vector<NormSpec> norms{{"besov", 0.5, 2.0, 2.0}};
  double sweep_r = 2.0;               // L^r in the L^2_T L^r difference norms
  double sweep_time_exponent = 2.0;   // L^a_t for the requested norms
  double sweep_D0 = 0.0;              // 0: calibrate on calibration_seed
  std::uint64_t calibration_seed = 1001;

  std::string recipe = "shell";
  double gamma = 0.0;
  double delta = 0.1;
  double k0 = 3.0;
  bool strong_scaling = false;
  double C0 = 1.0;
  double K0 = 1.0;
  double planar_u_amp = 1.0;
  double planar_b_amp = 0.5;
  double bulk_v_amp = 0.1;
  double bulk_c_amp = 0.1;

  double T = 1.0;
  double dt = 0.01;
  int sample_every = 5;

  double run_eps = 0.0;  // single-run; 0 takes the first sweep eps
  int checkpoint_every = 0;

  double disp_T = 2.0;
  std::vector<double> disp_eps_list{0.1, 0.05623413251903491, 0.03162277660168379, 0.01778279410038923, 0.01};
  std::vector<DispersionNormSpec> disp_norms{{"lebesgue", 2.0}, {"lebesgue", std::numeric_limits<double>::infinity()}, {"anisotropic", std::numeric_limits<double>::infinity()}};
  double disp_nu = 0.0;
  double disp_per_oscillation = 4.0;
  bool disp_drop_largest = true;
  bool disp_check_convergence = true;

  int bench_n = 32;
  int bench_fields = 100;
  int bench_trajectories = 50;

  std::filesystem::path out_dir = "runs/out";
};

// key=value lines, '#' comments. Unknown keys, malformed values and
// missing required keys are errors.
// A non-empty `experiment` overrides the file's experiment key.
RunConfig parse_config(const std::string& text, const std::string& experiment = "");
RunConfig load_config(const std::filesystem::path& path, const std::string& experiment = "");
// Every key, sorted, one per line; parse(emit(c)) emits identically.
std::string emit_config(const RunConfig& c);
void validate(const RunConfig& c);

std::vector<std::string> config_keys();
std::vector<std::string> required_keys(const std::string& experiment);

// Shortest decimal that reads back to the same double; "inf" for infinity.
std::string format_number(double v);

}  // namespace rmhd::harness
