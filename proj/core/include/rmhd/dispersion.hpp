#pragma once

#include <array>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmhd/field.hpp"

namespace rmhd {

struct RateExponents {
  double theta = 0.0;
  double theta_prime = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  double m = 0.0;
};

// Closed-form convergence-rate exponents for r in (2, 6].
RateExponents rate_exponents(double r);

using Vec3 = std::array<double, 3>;
using CVec3 = std::array<cplx, 3>;
using Mat3 = std::array<std::array<cplx, 3>, 3>;

// Eigenprojectors of v -> P(v x e3) on divergence-free fields at frequency
// xi: P_pm = (Pi -/+ i K) / 2 with Pi the Leray projector and K v = xi x v / |xi|.
// The free rotating flow is sum_pm exp(+/- i t xi3 / (eps |xi|)) P_pm.
struct Eigenprojectors {
  Mat3 plus;
  Mat3 minus;
  Mat3 leray;
};
Eigenprojectors eigenprojectors(const Vec3& xi);

// Axisymmetric toroidal data  v0(xi) = phi(|xi|) g(|xi3|/|xi|) i (e3 x xi)/|xi|
// with phi the dyadic block profile on [3/4, 8/3] and g a smooth bump that
// removes the non-dispersive directions near xi3 = 0.
struct FrequencyProfile {
  double r1 = 0.75;
  double r2 = 8.0 / 3.0;
  bool modulated = true;
  double mu_lo = 0.15;
  double mu_hi = 1.0;

  double radial(double rho) const;
  double angular(double mu) const;  // 1 when unmodulated
  double amplitude(double rho, double mu) const { return radial(rho) * angular(mu); }
  CVec3 data(const Vec3& xi) const;
  // (2 pi)^-3 int |v0|^2 e^{-2 heat |xi|^2}, the squared L2 norm in space.
  double l2_norm_sq(double heat = 0.0) const;
  // (2 pi)^-3 int |v0|, an upper bound for the field amplitude.
  double l1_frequency_norm() const;
};

struct SphericalNodes {
  int radial = 0;
  int polar = 0;
  int azimuthal = 0;
};

struct UnderResolved : std::runtime_error {
  UnderResolved(const std::string& what, SphericalNodes need) : std::runtime_error(what), required(need) {}
  SphericalNodes required;
};

// Node counts giving at least `per_oscillation` nodes per oscillation of the
// combined phase x.xi + t xi3 / (eps |xi|).
SphericalNodes required_nodes(const FrequencyProfile& p, double t, double eps, const Vec3& x,
                              double per_oscillation = 10.0);

// (2 pi)^-3 int e^{i x.xi} e^{-nu t |xi|^2} sum_pm e^{+/- i t xi3/(eps|xi|)} P_pm v0 dxi
// by a tensor Gauss rule in (|xi|, xi3/|xi|) and the trapezoid rule in azimuth.
// Explicit node counts below required_nodes() are refused.
CVec3 semigroup_point_eval(const FrequencyProfile& p, double t, double eps, double nu, const Vec3& x,
                           std::optional<SphericalNodes> nodes = std::nullopt);

struct SamplerOptions {
  double per_oscillation = 4.0;
  double dx = 0.3;
  double margin = 20.0;
  bool refine_max = true;
};

// The evolved field at phase lambda = t/eps and heat = nu t, sampled on a
// cylindrical (R, z) grid covering the wave envelope |x| <= 2 (4/3) lambda + margin.
class ToroidalSample {
 public:
  ToroidalSample(const FrequencyProfile& p, double lambda, double heat, const SamplerOptions& opt = {});

  double lambda() const { return lambda_; }
  int nodes_k() const { return static_cast<int>(k_.size()); }
  int nodes_q() const { return static_cast<int>(q_.size()); }
  int nodes() const { return nodes_k() * nodes_q(); }

  // (u_R, u_psi, u_z) at cylindrical radius R and height z.
  Vec3 point(double R, double z) const;

  // L^r over space, r in [2, inf]; r = inf is refined off-grid.
  double lebesgue(double r) const;
  // L^m over the horizontal plane of L^2 along x3, m in [2, inf].
  double anisotropic(double m) const;
  // Exact squared L2 norm from the frequency side.
  double l2_total_sq() const { return l2_total_sq_; }
  // Mass outside the sampled box (L2), or the largest value in the outer
  // tenth of the box (sup norms).
  double tail(double index, bool anisotropic) const;

 private:
  double lambda_, heat_;
  SamplerOptions opt_;
  std::vector<double> k_, q_, wq_;
  std::vector<double> R_, z_;
  // per-component coefficient matrices over (k, q), row-major
  std::array<std::vector<double>, 3> coef_;
  std::vector<double> mag2_;       // |u|^2 on the (R, z) grid, row-major in R
  std::vector<double> column_sq_;  // int |u(R, z)|^2 dz per R
  double l2_total_sq_ = 0.0;
  double grid_max_ = 0.0;
  std::size_t argmax_ = 0;
};

enum class DispersionNorm { Lebesgue, Anisotropic };

struct NormRequest {
  DispersionNorm kind = DispersionNorm::Lebesgue;
  double index = std::numeric_limits<double>::infinity();  // r or m
};

std::string norm_type_name(DispersionNorm k);
// (1/2)(1 - 2/r) or (1/4)(1 - 2/m)
double predicted_exponent(const NormRequest& n);
// Endpoint time exponent 2/(1 - 2/r) or 4/(1 - 2/m); infinite at index 2.
double time_exponent(const NormRequest& n);
double default_tolerance(const NormRequest& n);

struct DecayOptions {
  SamplerOptions sampler;
  double lambda_min = 0.05;
  int nodes_per_octave = 3;
  double nu = 0.0;
  double tolerance = -1.0;         // < 0: default_tolerance()
  double min_r_squared = 0.95;
  double convergence_tol = 1e-4;
  bool check_convergence = true;
  bool drop_largest_eps = true;    // fit without the largest eps when >= 5 points
};

struct DecayRow {
  double eps = 0.0;
  double t = 0.0;
  double value = 0.0;
  double tail_bound = 0.0;
  int nodes = 0;
};

struct DecayFit {
  NormRequest norm;
  double predicted = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  double tolerance = 0.0;
  double convergence_change = 0.0;  // largest relative change under node doubling
  std::string verdict;              // PASS, FAIL or INCONCLUSIVE
  std::vector<DecayRow> rows;
};

struct InvalidDecaySetup : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Space-time norm ||e^{tL} v0||_{L^p([0,T]; X)} of the free rotating flow
// against eps, fitted in log-log at fixed T.
DecayFit measure_decay_exponent(const FrequencyProfile& p, double T, const std::vector<double>& eps_list,
                                const NormRequest& norm, const DecayOptions& opt = {});
// Several norms from the same samples.
std::vector<DecayFit> measure_decay_exponents(const FrequencyProfile& p, double T, const std::vector<double>& eps_list,
                                              const std::vector<NormRequest>& norms, const DecayOptions& opt = {});

struct LeastSquares {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LeastSquares fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Fourier-series coefficients of the profile on a periodic box (which must
// resolve the annulus); the box field approximates the whole-space one.
SpectralField sample_profile(const FrequencyProfile& p, const Grid& g);

// Largest pointwise magnitude of a 3-component field, refined off-grid by
// evaluating the Fourier series.
double refined_sup(const SpectralField& f);

struct BoxComparison {
  double box_sup = 0.0;
  double oracle_sup = 0.0;
  double relative_gap = 0.0;
};

// Periodic-box rotating flow of the sampled profile versus the whole-space
// sampler at the same t/eps.
BoxComparison box_consistency(const FrequencyProfile& p, double lambda, double eps, const Grid& g);

}  // namespace rmhd
