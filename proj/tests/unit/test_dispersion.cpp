#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "rmhd/dispersion.hpp"
#include "rmhd/fft.hpp"

using namespace rmhd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat3 product(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

double gap(const Mat3& a, const Mat3& b) {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  return m;
}

double magnitude(const CVec3& v) { return std::sqrt(std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2])); }

// Cylindrical components at (R, 0, z) are the Cartesian (x, y, z) ones.
double gap(const Vec3& a, const CVec3& b) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(a[c] - b[c]));
  return m;
}

}  // namespace

TEST(RateExponentsTest, WorkedValues) {
  auto e3 = rate_exponents(3.0);
  EXPECT_NEAR(e3.m, 1.0 / 14.0, 1e-15);
  EXPECT_NEAR(e3.delta, 5.0 / 28.0, 1e-15);
  EXPECT_NEAR(e3.alpha, 12.0 / 5.0, 1e-14);
  EXPECT_NEAR(e3.beta, 1.5, 1e-14);
  EXPECT_EQ(e3.theta, 1.0);
  auto e4 = rate_exponents(4.0);
  EXPECT_NEAR(e4.m, 1.0 / 28.0, 1e-15);
  EXPECT_NEAR(e4.delta, 5.0 / 56.0, 1e-15);
  EXPECT_NEAR(e4.alpha, 2.0, 1e-15);
  EXPECT_NEAR(e4.theta, 0.5, 1e-15);
  EXPECT_NEAR(rate_exponents(2.5).beta, 2.0, 1e-14);
}

TEST(RateExponentsTest, ContinuousAtBreakpoints) {
  auto fields = [](const RateExponents& e) {
    return std::array<double, 6>{e.theta, e.theta_prime, e.alpha, e.beta, e.delta, e.m};
  };
  for (double r : {2.5, 10.0 / 3.0, 5.0}) {
    auto lo = fields(rate_exponents(r - 1e-9)), hi = fields(rate_exponents(r + 1e-9));
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(lo[i], hi[i], 1e-7) << "r = " << r << " field " << i;
  }
  // away from r = 2, where alpha blows up, neighbours on a 1000-point grid stay close
  auto prev = fields(rate_exponents(2.2));
  for (int i = 1; i < 1000; ++i) {
    double r = 2.2 + i * 3.8 / 1000;
    auto e = rate_exponents(r);
    EXPECT_GT(e.m, 0.0);
    EXPECT_GE(e.delta, 0.0);
    auto cur = fields(e);
    for (int j = 0; j < 6; ++j) EXPECT_LT(std::abs(cur[j] - prev[j]), 0.05 * std::max(1.0, std::abs(cur[j]))) << "r = " << r << " field " << j;
    prev = cur;
  }
  EXPECT_LT(rate_exponents(2.0 + 1e-9).m, 1e-9);
  EXPECT_LT(rate_exponents(6.0 - 1e-9).m, 1e-9);
  EXPECT_THROW(rate_exponents(2.0), std::invalid_argument);
  EXPECT_THROW(rate_exponents(6.5), std::invalid_argument);
}

TEST(Eigenprojectors, CompleteIdempotentOrthogonal) {
  for (Vec3 xi : {Vec3{1.0, 0.0, 0.0}, Vec3{0.3, -1.2, 0.7}, Vec3{0.0, 0.0, 2.0}, Vec3{-0.5, 0.25, -3.0}}) {
    auto e = eigenprojectors(xi);
    Mat3 sum{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) sum[i][j] = e.plus[i][j] + e.minus[i][j];
    EXPECT_LT(gap(sum, e.leray), 1e-12);
    EXPECT_LT(gap(product(e.plus, e.plus), e.plus), 1e-12);
    EXPECT_LT(gap(product(e.minus, e.minus), e.minus), 1e-12);
    EXPECT_LT(gap(product(e.plus, e.minus), Mat3{}), 1e-12);
  }
  EXPECT_THROW(eigenprojectors({0.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(DispersionOracle, InitialDataMatchesFourierSeries) {
  FrequencyProfile p;
  const int n = 64;
  const double L = 48.0;
  auto g = Grid::cube(n, L);
  auto phys = to_physical(sample_profile(p, g));
  const double h = L / n;
  double worst = 0.0, scale = 0.0;
  for (auto [i, j, k] : {std::array<int, 3>{0, 0, 0}, {2, 0, 1}, {1, 3, 62}, {60, 5, 4}, {3, 3, 3}}) {
    Vec3 x{(i > n / 2 ? i - n : i) * h, (j > n / 2 ? j - n : j) * h, (k > n / 2 ? k - n : k) * h};
    auto oracle = semigroup_point_eval(p, 0.0, 1.0, 0.0, x);
    std::size_t idx = g.index(i, j, k);
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(phys.comp[c][idx] - oracle[c].real()));
    scale = std::max(scale, magnitude(oracle));
  }
  EXPECT_GT(scale, 1e-3);
  EXPECT_LT(worst / scale, 1e-4);
}

TEST(DispersionOracle, HeatFactorBound) {
  FrequencyProfile p;
  const double bound = p.l1_frequency_norm();
  for (double nu : {0.0, 0.1})
    for (Vec3 x : {Vec3{0.0, 0.0, 0.5}, Vec3{1.0, 2.0, -1.0}})
      for (double t : {0.0, 0.5, 2.0}) {
        auto u = semigroup_point_eval(p, t, 0.1, nu, x);
        EXPECT_LE(magnitude(u), std::exp(-nu * t * p.r1 * p.r1) * bound * (1.0 + 1e-12));
      }
}

TEST(DispersionOracle, RefusesTooFewNodes) {
  FrequencyProfile p;
  Vec3 x{2.0, 1.0, 3.0};
  auto need = required_nodes(p, 1.0, 0.05, x);
  SphericalNodes few = need;
  few.polar /= 2;
  try {
    semigroup_point_eval(p, 1.0, 0.05, 0.0, x, few);
    FAIL();
  } catch (const UnderResolved& e) {
    EXPECT_EQ(e.required.polar, need.polar);
  }
  EXPECT_NO_THROW(semigroup_point_eval(p, 1.0, 0.05, 0.0, x, need));
}

TEST(DispersionOracle, CylindricalSamplerMatchesSphericalRule) {
  FrequencyProfile p;
  const double eps = 0.1;
  for (double lambda : {0.0, 3.0, 12.0}) {
    ToroidalSample s(p, lambda, 0.0);
    for (auto [R, z] : {std::pair{0.0, 1.0}, std::pair{1.0, 0.5}, std::pair{3.0, -2.0}, std::pair{6.0, 4.0}}) {
      auto a = s.point(R, z);
      auto b = semigroup_point_eval(p, lambda * eps, eps, 0.0, {R, 0.0, z});
      EXPECT_LT(gap(a, b), 1e-7 * p.l1_frequency_norm()) << lambda << " " << R << " " << z;
    }
  }
}

TEST(DispersionOracle, SamplerConservesEnergy) {
  FrequencyProfile p;
  const double exact = std::sqrt(p.l2_norm_sq());
  for (double lambda : {0.0, 5.0, 40.0}) {
    ToroidalSample s(p, lambda, 0.0);
    EXPECT_NEAR(std::sqrt(s.l2_total_sq()), exact, 1e-7 * exact);
    EXPECT_NEAR(s.lebesgue(2.0), exact, 1e-4 * exact);
    EXPECT_LT(s.tail(2.0, false), 1e-2 * exact);
  }
  ToroidalSample damped(p, 5.0, 0.05);
  EXPECT_NEAR(damped.l2_total_sq(), p.l2_norm_sq(0.05), 1e-7 * p.l2_norm_sq());
}

TEST(DispersionOracle, SupDecaysWithPhase) {
  FrequencyProfile p;
  double prev = kInf;
  for (double lambda : {10.0, 20.0, 40.0, 80.0}) {
    double v = ToroidalSample(p, lambda, 0.0).lebesgue(kInf);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(DispersionOracle, PeriodicBoxAgreesAtShortTimes) {
  FrequencyProfile p;
  auto c = box_consistency(p, 2.0, 0.1, Grid::cube(64, 48.0));
  EXPECT_GT(c.oracle_sup, 0.0);
  EXPECT_LT(c.relative_gap, 0.01);
}

TEST(DecayFitTest, LineFit) {
  auto ls = fit_line({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
  EXPECT_NEAR(ls.slope, 2.0, 1e-14);
  EXPECT_NEAR(ls.intercept, 1.0, 1e-14);
  EXPECT_NEAR(ls.r_squared, 1.0, 1e-14);
  auto noisy = fit_line({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 0.0, 1.0});
  EXPECT_LT(noisy.r_squared, 0.95);
  EXPECT_THROW(fit_line({1.0}, {1.0}), std::invalid_argument);
}

TEST(DecayFitTest, ExponentsAndTolerances) {
  NormRequest sup{DispersionNorm::Lebesgue, kInf}, aniso{DispersionNorm::Anisotropic, kInf},
      energy{DispersionNorm::Lebesgue, 2.0};
  EXPECT_EQ(predicted_exponent(sup), 0.5);
  EXPECT_EQ(predicted_exponent(aniso), 0.25);
  EXPECT_EQ(predicted_exponent(energy), 0.0);
  EXPECT_EQ(time_exponent(sup), 2.0);
  EXPECT_EQ(time_exponent(aniso), 4.0);
  EXPECT_TRUE(std::isinf(time_exponent(energy)));
  EXPECT_EQ(default_tolerance(sup), 0.1);
  EXPECT_EQ(default_tolerance(aniso), 0.07);
  EXPECT_EQ(default_tolerance(energy), 0.02);
}

TEST(DecayFitTest, RejectsDegenerateSetups) {
  FrequencyProfile p;
  NormRequest sup;
  EXPECT_THROW(measure_decay_exponent(p, 1.0, {0.1, 0.05, 0.02}, sup), InvalidDecaySetup);
  EXPECT_THROW(measure_decay_exponent(p, 1.0, {0.1, 0.08, 0.05, 0.02}, sup), InvalidDecaySetup);
  DecayOptions heavy;
  heavy.nu = 1.0;
  EXPECT_THROW(measure_decay_exponent(p, 1.0, {0.1, 0.05, 0.02, 0.01}, sup, heavy), InvalidDecaySetup);
  EXPECT_THROW(measure_decay_exponent(p, 1.0, {0.1, 0.05, 0.02, 0.01}, {DispersionNorm::Lebesgue, 1.5}),
               InvalidDecaySetup);
}

TEST(DecayFitTest, EnergyNormIsFlat) {
  FrequencyProfile p;
  DecayOptions opt;
  opt.check_convergence = false;
  auto fit = measure_decay_exponent(p, 0.5, {0.1, 0.05, 0.02, 0.01}, {DispersionNorm::Lebesgue, 2.0}, opt);
  ASSERT_EQ(fit.rows.size(), 4u);
  EXPECT_NEAR(fit.slope, 0.0, 0.02);
  EXPECT_EQ(fit.verdict, "PASS");
  EXPECT_GT(fit.rows.front().eps, fit.rows.back().eps);
}

TEST(DecayFitTest, SupNormDecaysAtPredictedRate) {
  FrequencyProfile p;
  DecayOptions opt;
  opt.check_convergence = false;
  auto fits = measure_decay_exponents(p, 1.0, {0.1, 0.05, 0.02, 0.01},
                                      {{DispersionNorm::Lebesgue, kInf}, {DispersionNorm::Anisotropic, kInf}}, opt);
  for (const auto& f : fits) {
    EXPECT_EQ(f.verdict, "PASS") << norm_type_name(f.norm.kind) << " slope " << f.slope;
    EXPECT_GT(f.r_squared, 0.99);
    for (const auto& r : f.rows) EXPECT_LT(r.tail_bound, 0.1 * r.value);
  }
}
