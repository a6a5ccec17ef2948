#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmhd/besov.hpp"
#include "rmhd/field.hpp"
#include "rmhd/stepper.hpp"

namespace rmhd {

// x3-independent velocity, magnetic field and the limit pressure, all on a
// planar grid.
struct PlanarState {
  SpectralField u;
  SpectralField b;
  Coeffs q0;
};

// Unpacks a stacked 6-component planar state and recomputes the pressure.
PlanarState planar_state(const SpectralField& ub);

struct PlanarRun {
  StateTrajectory traj;  // stacked (u, b), every stored step
  std::vector<IndexRow> index;
  // max over stored t of |E(t) + 2 int D - E(0)| / E(0) with
  // E = |u|^2 + |b|^2 and D the dissipation rate; 0 for zero data.
  double energy_residual = 0.0;
  double max_div_residual = 0.0;
};

// Two-dimensional three-component MHD: the horizontal MHD block and the
// linear pair (u3, b3) advanced together by an integrating-factor Heun step.
// save_every = k stores every k-th step (the final step is always stored).
PlanarRun solve_2dmhd3(const SpectralField& u0, const SpectralField& b0, double nu, double nu_prime, double T,
                       double dt, int save_every = 1);

// Right-hand side used by solve_2dmhd3 (without diffusion), on a stacked
// planar state.
SpectralField planar_mhd_rhs(const SpectralField& ub);

// One step of solve_2dmhd3, without the CFL check.
class PlanarMhdStepper {
 public:
  PlanarMhdStepper(const Grid& g, double nu, double nu_prime, double dt);
  SpectralField step(const SpectralField& ub, double t) const;
  double dt() const { return E_.dt(); }

 private:
  LinearPropagator E_;
};

struct TrajectoryGap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear transport/stretching of a 3D field c by a planar velocity:
//   dc/dt - nu' Lap c + u.grad c - c.grad u = 0.
// velocity.states hold either 3 or 6 (stacked u, b) planar components; each
// step needs samples at t_n and t_n + dt.
StateTrajectory solve_transported_magnetic(const SpectralField& c0, const StateTrajectory& velocity,
                                           double nu_prime, double T, double dt, int save_every = 1);

// One step of the transported system given the planar velocity (3 or 6
// components) at both ends of the step.
class TransportStepper {
 public:
  TransportStepper(const Grid& g3, double nu_prime, double dt);
  SpectralField step(const SpectralField& c, double t, const SpectralField& u_now,
                     const SpectralField& u_next) const;
  double dt() const { return E_.dt(); }

 private:
  Grid grid_;
  LinearPropagator E_;
};

// Terms of the growth bound for |c|_{H^s} along a transported run.
struct TransportMonitor {
  double s = 0.0;
  double initial = 0.0;             // |c0|^2_{H^s}
  std::vector<double> t;
  std::vector<double> lhs;          // |c(t)|^2_{H^s} + nu' int |grad c|^2_{H^s}
  std::vector<double> growth;       // int (1 + |u|^2 / nu'^2) |grad_h u|^2
  // Smallest C with lhs <= initial * exp(C / nu' * growth) at every t.
  double required_constant = 0.0;
  bool holds(double constant) const;
};

TransportMonitor transport_monitor(const StateTrajectory& c, const StateTrajectory& velocity, double s,
                                   double nu_prime);

struct InadmissibleExponents : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Message naming the violated bound, or nullopt when (sigma, p) is in the
// admissible set for delta.
std::optional<std::string> integrability_violation(double sigma, double p, double delta);

struct IntegrabilitySample {
  double value = 0.0;         // |c|_{L^p([0,T]; H^sigma)}
  double initial_norm = 0.0;  // |c0|_{H^{1/2+delta}}, inhomogeneous
  double ratio = 0.0;
};

IntegrabilitySample sample_ce_integrability(const StateTrajectory& c, double sigma, double p, double delta);

}  // namespace rmhd
