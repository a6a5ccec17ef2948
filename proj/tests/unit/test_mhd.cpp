#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rmhd/limit.hpp"
#include "rmhd/mhd.hpp"
#include "rmhd/ops.hpp"
#include "rmhd/random.hpp"

using namespace rmhd;

namespace {

constexpr double kPi = std::numbers::pi;

MhdState random_state(const Grid& g, double eps, double nu, double nu_b, std::uint64_t seed, double amp = 1.0) {
  MhdState s;
  s.u = random_field(g, 3, shell_spectrum(2.5, 1.0), amp, seed);
  s.b = random_field(g, 3, shell_spectrum(2.5, 1.0), 0.7 * amp, seed + 1);
  s.eps = eps;
  s.nu = nu;
  s.nu_prime = nu_b;
  return s;
}

double max_abs(const SpectralField& f) {
  double m = 0.0;
  for (int c = 0; c < f.ncomp(); ++c)
    for (const auto& v : f[c]) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

TEST(RotatingMhd, ZeroDataStaysZero) {
  MhdState s;
  auto g = Grid::cube(8, 2 * kPi);
  s.u = SpectralField(g, 3);
  s.b = SpectralField(g, 3);
  s.eps = 0.01;
  s.nu = s.nu_prime = 0.1;
  for (int i = 0; i < 5; ++i) s = step_mhd_eps(s, 0.01);
  EXPECT_EQ(max_abs(s.u), 0.0);
  EXPECT_EQ(max_abs(s.b), 0.0);
}

TEST(RotatingMhd, WithoutMagneticFieldMatchesFluidPath) {
  auto g = Grid::cube(16, 2 * kPi);
  auto s = random_state(g, 0.05, 0.02, 0.02, 3);
  s.b = SpectralField(g, 3);
  SpectralField fluid = s.u;
  for (int i = 0; i < 5; ++i) {
    s = step_mhd_eps(s, 5e-3);
    fluid = step_rotating_ns(fluid, 0.05, 0.02, 5e-3);
    EXPECT_LT(relative_l2_gap(s.u, fluid), 1e-12);
    EXPECT_EQ(max_abs(s.b), 0.0);
  }
}

TEST(RotatingMhd, PlanarDataFollowsLimitSystem) {
  const int n = 16;
  auto g2 = Grid::planar(n, n, 2 * kPi, 2 * kPi);
  auto g3 = Grid(n, n, 8, 2 * kPi, 2 * kPi, 2 * kPi);
  auto u0 = random_field(g2, 3, shell_spectrum(2.5, 1.0), 1.0, 5);
  auto b0 = random_field(g2, 3, shell_spectrum(2.5, 1.0), 0.6, 6);
  const double T = 0.3, dt = 5e-3;
  auto limit = solve_2dmhd3(u0, b0, 0.03, 0.02, T, dt);
  for (double eps : {1.0, 0.1, 0.01}) {
    MhdState s{extend_in_x3(u0, g3), extend_in_x3(b0, g3), eps, 0.03, 0.02, 0.0};
    auto run = run_mhd(s, T, dt);
    ASSERT_EQ(run.traj.size(), limit.traj.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < run.traj.size(); ++i)
      worst = std::max(worst, relative_l2_gap(run.traj.states[i], extend_in_x3(limit.traj.states[i], g3)));
    EXPECT_LT(worst, 1e-8) << "eps = " << eps;
  }
}

TEST(RotatingMhd, DiscreteEnergyBalance) {
  auto g = Grid::cube(16, 2 * kPi);
  auto s = random_state(g, 0.1, 0.05, 0.03, 8);
  auto run = run_mhd(s, 0.2, 1e-3, 0);
  EXPECT_LT(run.energy_residual, 1e-6);
}

TEST(RotatingMhd, InviscidEnergyConserved) {
  auto g = Grid::cube(16, 2 * kPi);
  auto s = random_state(g, 0.01, 0.0, 0.0, 9);
  auto run = run_mhd(s, 10 * 1e-4, 1e-4, 1);
  ASSERT_EQ(run.index.size(), 11u);
  double e0 = run.index.front().energy;
  for (const auto& r : run.index) EXPECT_LT(std::abs(r.energy - e0) / e0, 1e-8);
}

TEST(RotatingMhd, DivergencePreservedOverManySteps) {
  auto g = Grid::cube(16, 2 * kPi);
  auto s = random_state(g, 0.05, 0.02, 0.02, 10);
  auto run = run_mhd(s, 100 * 2e-3, 2e-3, 0);
  EXPECT_LT(run.max_div_residual, 1e-10);
}

TEST(RotatingMhd, PeakEnergyIndependentOfRotation) {
  auto g = Grid::cube(16, 2 * kPi);
  std::vector<double> peaks;
  for (double eps : {1.0, 0.1, 0.01}) {
    auto s = random_state(g, eps, 0.05, 0.05, 12);
    double peak = 0.0;
    run_mhd(s, 0.1, 2e-3, 0, [&](const MhdState& st) {
      double eu = l2_norm(st.u), eb = l2_norm(st.b);
      peak = std::max(peak, eu * eu + eb * eb);
    });
    peaks.push_back(peak);
  }
  for (double p : peaks) EXPECT_LT(std::abs(p - peaks.front()) / peaks.front(), 1e-10);
}

TEST(RotatingMhd, ReportsCflBoundAndDivergence) {
  auto g = Grid::cube(16, 2 * kPi);
  auto s = random_state(g, 0.1, 0.01, 0.01, 2, 20.0);
  try {
    step_mhd_eps(s, 0.5);
    FAIL();
  } catch (const CflViolation& e) {
    EXPECT_LT(e.admissible, 0.5);
  }
  auto bad = random_state(g, 0.1, 0.01, 0.01, 2);
  bad.u[0][1] = std::numeric_limits<double>::quiet_NaN();
  try {
    step_mhd_eps(bad, 1e-3);
    FAIL();
  } catch (const Diverged& e) {
    EXPECT_EQ(e.last_valid.ncomp(), 6);
  }
}

TEST(WaveSystem, UnforcedMatchesExactPropagator) {
  auto g = Grid::cube(16, 2 * kPi);
  SpectralField v0(g, 3);
  // single solenoidal mode k = (1, 0, 2) with amplitude along e2
  std::size_t idx = g.index(1, 0, 2), mirror = g.index(15, 0, 14);
  v0[1][idx] = cplx(0.3, 0.1);
  v0[1][mirror] = std::conj(v0[1][idx]);
  v0.set_divergence_free(true);
  const double eps = 0.02, nu = 0.05, T = 0.5, dt = 0.01;
  StateTrajectory zero;
  for (int n = 0; n <= 50; ++n) zero.push(n * dt, SpectralField(g, 3));
  auto w = solve_wave_system(v0, zero, eps, nu, T, dt);
  EXPECT_LT(relative_l2_gap(w.states.back(), coriolis_heat_propagate(v0, T, eps, nu)), 1e-12);
}

TEST(WaveSystem, NoRotationIsForcedHeatFlow) {
  auto g = Grid::cube(16, 2 * kPi);
  auto v0 = random_field(g, 3, shell_spectrum(2.5, 1.0), 0.5, 1);
  const double nu = 0.05, dt = 0.01;
  StateTrajectory f;
  for (int n = 0; n <= 20; ++n) f.push(n * dt, random_field(g, 3, shell_spectrum(3.0, 1.0), 1.0, 100 + n, false));
  auto w = solve_wave_system(v0, f, kNoRotation, nu, 0.2, dt);
  SpectralField h = v0;
  for (int n = 1; n <= 20; ++n) {
    SpectralField next = heat_propagate(h + (0.5 * dt) * leray_project(f.states[n - 1]), dt, nu);
    next += (0.5 * dt) * leray_project(f.states[n]);
    h = next;
  }
  EXPECT_LT(relative_l2_gap(w.states.back(), h), 1e-13);
}

TEST(WaveSystem, L2BoundedByDataPlusForcingIntegral) {
  auto g = Grid::cube(16, 2 * kPi);
  auto v0 = random_field(g, 3, shell_spectrum(2.5, 1.0), 0.5, 1);
  const double dt = 0.01;
  StateTrajectory f;
  std::vector<double> fn;
  for (int n = 0; n <= 30; ++n) {
    f.push(n * dt, random_field(g, 3, shell_spectrum(3.0, 1.0), 1.0 + 0.1 * n, 200 + n, false));
    fn.push_back(l2_norm(f.states.back()));
  }
  auto w = solve_wave_system(v0, f, 0.05, 0.01, 0.3, dt);
  double integral = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    if (n > 0) integral += 0.5 * dt * (fn[n - 1] + fn[n]);
    EXPECT_LE(l2_norm(w.states[n]), l2_norm(v0) + integral + 1e-12);
  }
}

TEST(WaveSystem, RejectsMisalignedForcing) {
  auto g = Grid::cube(8, 2 * kPi);
  SpectralField v0(g, 3);
  StateTrajectory f;
  for (int n = 0; n <= 5; ++n) f.push(n * 0.02, SpectralField(g, 3));
  EXPECT_THROW(solve_wave_system(v0, f, 0.1, 0.1, 0.1, 0.01), ForcingMismatch);
  EXPECT_THROW(solve_wave_system(v0, f, 0.1, 0.1, 0.05, 0.01), ForcingMismatch);
}

namespace {

BudgetInputs random_budget(const Grid& g3, const Grid& g2, std::uint64_t seed) {
  auto shape = shell_spectrum(2.5, 1.0);
  BudgetInputs in;
  in.u = random_field(g3, 3, shape, 1.0, seed);
  in.b = random_field(g3, 3, shape, 0.8, seed + 1);
  in.u_tilde = random_field(g2, 3, shape, 0.9, seed + 2);
  in.b_tilde = random_field(g2, 3, shape, 0.5, seed + 3);
  in.c = random_field(g3, 3, shape, 0.3, seed + 4);
  in.w = random_field(g3, 3, shape, 0.2, seed + 5);
  return in;
}

}  // namespace

TEST(Budget, ZeroInputsGiveZeroTerms) {
  auto g3 = Grid::cube(8, 2 * kPi);
  auto g2 = Grid::planar(8, 8, 2 * kPi, 2 * kPi);
  BudgetInputs in{0.0, SpectralField(g3, 3), SpectralField(g3, 3), SpectralField(g2, 3), SpectralField(g2, 3),
                  SpectralField(g3, 3), SpectralField(g3, 3)};
  auto b = perturbation_budget(in);
  ASSERT_EQ(b.names.size(), 27u);
  for (const auto& n : b.norms) {
    EXPECT_EQ(n[0], 0.0);
    EXPECT_EQ(n[1], 0.0);
  }
}

TEST(Budget, TermsResumToAssembledRightHandSides) {
  auto g3 = Grid::cube(16, 2 * kPi);
  auto g2 = Grid::planar(16, 16, 2 * kPi, 2 * kPi);
  auto b = perturbation_budget(random_budget(g3, g2, 40));
  EXPECT_LT(b.momentum_consistency, 1e-12);
  EXPECT_LT(b.induction_consistency, 1e-12);
  EXPECT_EQ(b.names.front(), "F1");
  EXPECT_EQ(b.names.back(), "G14");
  EXPECT_EQ(b.largest_induction_term.front(), 'G');
  EXPECT_GT(b.norm("F4", 1), 0.0);
}

TEST(Budget, IsolatedWavePartFeedsOnlyItsTerms) {
  // With u = ext(u~) + W and b = ext(b~) + c the remainders vanish, so only
  // the terms free of delta and d survive.
  auto g3 = Grid::cube(16, 2 * kPi);
  auto g2 = Grid::planar(16, 16, 2 * kPi, 2 * kPi);
  auto in = random_budget(g3, g2, 50);
  in.u = extend_in_x3(in.u_tilde, g3) + in.w;
  in.b = extend_in_x3(in.b_tilde, g3) + in.c;
  auto b = perturbation_budget(in);
  for (std::size_t i = 0; i < b.names.size(); ++i) {
    const auto& nm = b.names[i];
    bool survives = nm == "F4" || nm == "F6" || nm == "F8" || nm == "G9" || nm == "G10" || nm == "G13" || nm == "G14";
    if (survives)
      EXPECT_GT(b.norms[i][0], 1e-6) << nm;
    else
      EXPECT_LT(b.norms[i][0], 1e-13) << nm;
  }
}

TEST(Budget, MissingSamplesAreReported) {
  auto g3 = Grid::cube(8, 2 * kPi);
  StateTrajectory full, limit, c, w;
  full.push(0.0, SpectralField(g3, 6));
  EXPECT_THROW(perturbation_budget(full, limit, c, w, 0.0), MissingComponent);
}

namespace {

InitialData small_data() {
  RecipeParams p;
  p.n = 16;
  p.k0 = 2.5;
  return make_initial_data(p);
}

}  // namespace

TEST(InitialDataTest, ComposesPlanarAndBulkParts) {
  auto d = small_data();
  auto s = assemble_ill_prepared(d, 0.1, 0.01, 0.01);
  const auto& g = d.bulk_v0.grid();
  EXPECT_LT(relative_l2_gap(s.u, extend_in_x3(d.planar_u0, g) + d.bulk_v0), 1e-15);
  EXPECT_LT(relative_l2_gap(s.b, extend_in_x3(d.planar_b0, g) + d.bulk_c0), 1e-15);
  EXPECT_LT(divergence_residual(s.u), 1e-12);
}

TEST(InitialDataTest, StrongScalingAmplitudes) {
  auto d = small_data();
  d.strong_scaling = true;
  d.delta = 1.0 / 6.0;
  d.gamma = 0.0;
  const auto& g = d.bulk_v0.grid();
  auto bulk = [&](const MhdState& s) { return s.u - extend_in_x3(d.planar_u0, g); };
  auto a = assemble_ill_prepared(d, 0.1, 0.01, 0.01);
  auto b = assemble_ill_prepared(d, 0.01, 0.01, 0.01);
  EXPECT_LT(relative_l2_gap(bulk(a), bulk(b)), 1e-14);

  d.gamma = 5.0 / 72.0;
  d.C0 = 2.0;
  auto c = assemble_ill_prepared(d, 0.01, 0.01, 0.01);
  EXPECT_NEAR(sobolev_norm(bulk(c), 0.5 + d.delta), 2.0 * std::pow(0.01, -d.gamma), 1e-12);

  d.gamma = d.delta / 2.0;
  EXPECT_THROW(assemble_ill_prepared(d, 0.01, 0.01, 0.01), InvalidInitialData);

  d.gamma = 0.0;
  d.K0 = 1.0;
  auto e = assemble_ill_prepared(d, std::exp(-1.0), 0.01, 0.01);
  auto c0 = e.b - extend_in_x3(d.planar_b0, g);
  EXPECT_NEAR(inhomogeneous_sobolev_norm(c0, 0.5 + d.delta), 1.0, 1e-13);
}

TEST(InitialDataTest, RejectsCompressiblePieces) {
  auto d = small_data();
  d.bulk_v0 = random_field(d.bulk_v0.grid(), 3, shell_spectrum(2.5, 1.0), 1.0, 3, false);
  EXPECT_THROW(assemble_ill_prepared(d, 0.1, 0.01, 0.01), InvalidInitialData);
  RecipeParams p;
  p.recipe = "vortex";
  EXPECT_THROW(make_initial_data(p), InvalidInitialData);
}
