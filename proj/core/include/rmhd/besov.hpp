#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rmhd/field.hpp"

namespace rmhd {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct UnresolvedSpectrum : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smooth radial cutoff: 1 on [0, 3/4], 0 on [4/3, inf), exp(-1/x) glue.
double lp_chi(double r);
// lp_chi(r/2) - lp_chi(r), supported in [3/4, 8/3].
double lp_phi(double r);

// Homogeneous dyadic blocks realized on a grid. On a planar grid the blocks
// are the horizontal ones.
class DyadicLadder {
 public:
  explicit DyadicLadder(const Grid& g);

  const Grid& grid() const { return grid_; }
  int jmin() const { return jmin_; }
  int jmax() const { return jmax_; }
  // Block whose annulus 2^j [3/4, 8/3] leaves the resolved frequency ball.
  bool truncated(int j) const;

  double weight(int j, double r) const;      // phi(2^-j r)
  double low_weight(int j, double r) const;  // chi(2^-j r), the S_j multiplier

  SpectralField block(const SpectralField& f, int j) const;
  SpectralField low(const SpectralField& f, int j) const;

 private:
  Grid grid_;
  int jmin_ = 0;
  int jmax_ = 0;
};

struct NormValue {
  double value = 0.0;
  double truncation_share = 0.0;
};

// Pointwise-Euclidean L^p norm over the box, p in [1, inf].
double lebesgue_norm(const SpectralField& f, double p);

// l^r over j of 2^{js} ||Delta_j f||_{L^p}. Throws UnresolvedSpectrum when
// more than max_truncated_share of the spectral energy sits in truncated blocks.
NormValue besov_norm(const SpectralField& f, double s, double p, double r, double max_truncated_share = 0.1);

// (sum_{k != 0} |k|^{2s} |f(k)|^2)^{1/2} with the box Parseval factor.
double sobolev_norm(const SpectralField& f, double s);
// (sum_k (1 + |k|^2)^s |f(k)|^2)^{1/2} with the box Parseval factor.
double inhomogeneous_sobolev_norm(const SpectralField& f, double s);

struct StateTrajectory {
  std::vector<double> times;
  std::vector<SpectralField> states;

  void push(double t, SpectralField f);
  bool empty() const { return states.empty(); }
  std::size_t size() const { return states.size(); }
  void validate() const;
};

// Trapezoid-rule L^a norm of samples on the given time grid (a = inf: max).
double time_lebesgue_norm(const std::vector<double>& times, const std::vector<double>& values, double a);

// l^c_j of 2^{js} || ||Delta_j u||_{L^b_x} ||_{L^a_t}.
double chemin_lerner_norm(const StateTrajectory& traj, double a, double s, double b, double c);
// || ||u(t)||_{B^s_{b,c}} ||_{L^a_t}, the plain time-space norm.
double time_besov_norm(const StateTrajectory& traj, double a, double s, double b, double c);

// L^b over x3 inside, L^a over the horizontal variables outside.
double anisotropic_norm(const SpectralField& f, double a, double b);

struct Paraproduct {
  SpectralField low_c_high_b;  // T_c grad b
  SpectralField high_c_low_b;  // T_{grad b} c
  SpectralField remainder;     // R(c, grad b)
  std::vector<int> q_values;
  // per-q pieces, same order as q_values
  std::vector<SpectralField> low_c_high_b_q;
  std::vector<SpectralField> high_c_low_b_q;
  std::vector<SpectralField> remainder_q;
};

// Paraproduct split of c.grad(btilde) for a 3D field c and a planar field
// btilde (horizontal axes matching). Requires j0 >= 4.
Paraproduct paraproduct_2d3d(const SpectralField& c, const SpectralField& btilde, int j0);
// Same split without the j0 guard, for probing the support lemma.
Paraproduct paraproduct_2d3d_unchecked(const SpectralField& c, const SpectralField& btilde, int j0);

// Share of spectral energy of f with |k| outside [r_lo, r_hi].
double annulus_leakage(const SpectralField& f, double r_lo, double r_hi);

enum class ProductMode { Isotropic, Planar3D };

// ||uv||_{H^{s+t-d/2}} / (||u||_{H^s} ||v||_{H^t}) on the first components.
// For Planar3D, u lives on the planar grid and the target index is s+t-1.
// nullopt when either factor vanishes.
std::optional<double> product_law_ratio(const SpectralField& u, const SpectralField& v, double s, double t,
                                        ProductMode mode);

}  // namespace rmhd
