#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rmhd/harness/config.hpp"
#include "rmhd/mhd.hpp"

namespace rmhd::harness {

inline const char* kPass = "PASS";
inline const char* kFail = "FAIL";
inline const char* kTrend = "TREND";
inline const char* kInconclusive = "INCONCLUSIVE";

using Logger = std::function<void(const std::string&)>;

struct RequestedNorm {
  std::string quantity;  // u_diff or b_diff
  NormSpec spec;
  double value = 0.0;    // L^a over the samples
  double truncation_share = 0.0;
};

struct BudgetRow {
  std::string term;
  double s = 0.0;
  double value = 0.0;
};

// One eps of a sweep: the full system, the planar limit, the transported
// field and the wave part advanced in lockstep.
struct MemberResult {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  double v0_sq = 0.0;        // |v0|^2 in L2
  double u_diff = 0.0;       // |u - ext u~|_{L2_T L^r}
  double b_diff = 0.0;       // |b - ext b~ - c|_{L2_T L^r(central half-box)}
  double u_diff_half = 0.0;  // same norms on [0, T/2]
  double b_diff_half = 0.0;
  double d_energy = 0.0;     // |D|_{E0}
  double full_diff_sup = 0.0;  // |U - (u~, b~ + c)|_{L2_T L^inf}
  double f4 = 0.0;           // |P(W.grad W)|_{L2} at T
  std::vector<IndexRow> index;
  std::vector<RequestedNorm> norms;
  std::vector<BudgetRow> budget;
  SpectralField last_valid;  // set when the run diverged
  double last_valid_t = 0.0;
};

MemberResult run_member(const RunConfig& c, double eps, std::uint64_t seed);

struct NormSeries {
  std::string id;
  std::vector<double> values;  // one per eps, in sweep order
  double predicted = 0.0;      // NaN when no rate is claimed
  double slope = 0.0;          // NaN when not fitted
  bool dropped_largest = false;
  std::string verdict;
};

struct SweepReport {
  std::string run_hash;
  std::vector<MemberResult> members;
  std::vector<NormSeries> series;
  double D0 = 0.0;
  std::string D0_source;  // frozen | calibrated | none
  std::vector<double> calibration_ratios;
  int exit_code = 0;
};

// Strictly decreasing as eps decreases.
bool strictly_decreasing(const std::vector<double>& values);
// log-log OLS slope; drops the first (largest eps) point when there are >= 5.
double fitted_slope(const std::vector<double>& eps, const std::vector<double>& values, bool& dropped);

SweepReport run_sweep(const RunConfig& c, int jobs, const Logger& log = {});
void write_sweep(const RunConfig& c, const SweepReport& r);

struct DispersionOutcome {
  int exit_code = 0;
  std::vector<std::string> verdicts;  // "kind:index: VERDICT"
};
DispersionOutcome run_dispersion(const RunConfig& c, const Logger& log = {});

struct BenchCheck {
  std::string check;
  int n = 0;
  double value = 0.0;
  double reference = 0.0;
  std::string verdict;
};
struct BenchOutcome {
  int exit_code = 0;
  std::vector<BenchCheck> checks;
};
BenchOutcome run_besov_bench(const RunConfig& c, const Logger& log = {});

int run_single(const RunConfig& c, const Logger& log = {});

// Prints verdict counts of every report.csv and fit.json under dir.
int summarize_reports(const std::filesystem::path& dir, std::string& text);

}  // namespace rmhd::harness
