#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmhd/besov.hpp"
#include "rmhd/field.hpp"
#include "rmhd/stepper.hpp"

namespace rmhd {

struct MhdState {
  SpectralField u;
  SpectralField b;
  double eps = 1.0;
  double nu = 0.0;
  double nu_prime = 0.0;
  double t = 0.0;
};

// Nonlinear part of the rotating MHD system on a stacked (u, b) field:
// (-P div(u u - b b), curl(u x b)).
SpectralField mhd_rhs(const SpectralField& ub);

// Fixed-step solver: exact Coriolis+heat factor around a Heun step for the
// quadratic terms.
class MhdStepper {
 public:
  MhdStepper(const Grid& g, double eps, double nu, double nu_prime, double dt);
  // Stacked (u, b) in and out; no CFL check.
  SpectralField step(const SpectralField& ub, double t) const;
  double dt() const { return E_.dt(); }

 private:
  LinearPropagator E_;
};

// One checked step. Throws CflViolation or Diverged (with the input state as
// last valid state).
MhdState step_mhd_eps(const MhdState& s, double dt);

// The same scheme for the rotating Navier-Stokes system with no magnetic
// field, written without any magnetic terms.
SpectralField step_rotating_ns(const SpectralField& u, double eps, double nu, double dt);

IndexRow mhd_index(const MhdState& s);

struct MhdRun {
  StateTrajectory traj;  // stacked (u, b)
  std::vector<IndexRow> index;
  double energy_residual = 0.0;
  double max_div_residual = 0.0;
};

using StateObserver = std::function<void(const MhdState&)>;

// Runs to T, storing every save_every-th state (0 = initial and final only).
// The observer sees every step including t = 0.
MhdRun run_mhd(const MhdState& s0, double T, double dt, int save_every = 1, const StateObserver& observe = {});

struct ForcingMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Linear rotating system driven by a forcing sampled on the step grid:
//   dW/dt - nu Lap W + (1/eps) P(W x e3) = P f,   W(0) = v0.
class WaveStepper {
 public:
  WaveStepper(const Grid& g, double eps, double nu, double dt);
  // Trapezoid Duhamel step with the forcing at both ends.
  SpectralField step(const SpectralField& w, const SpectralField& f_now, const SpectralField& f_next) const;
  double dt() const { return E_.dt(); }

 private:
  LinearPropagator E_;
};

StateTrajectory solve_wave_system(const SpectralField& v0, const StateTrajectory& forcing, double eps, double nu,
                                  double T, double dt);

// b.grad c + c.grad b + c.grad c for a planar b and a 3D c.
SpectralField wave_forcing(const SpectralField& btilde_planar, const SpectralField& c);

constexpr int kMomentumTerms = 13;
constexpr int kInductionTerms = 14;

struct BudgetInputs {
  double t = 0.0;
  SpectralField u, b;              // full rotating solution, 3D
  SpectralField u_tilde, b_tilde;  // limit solution, planar
  SpectralField c;                 // transported field, 3D
  SpectralField w;                 // wave part, 3D
};

struct TermBudget {
  double t = 0.0;
  std::vector<std::string> names;               // F1..F13 then G1..G14
  std::vector<std::array<double, 2>> norms;     // H^0 and H^{1/2} per term
  double momentum_consistency = 0.0;            // |sum F - assembled| / |assembled|
  double induction_consistency = 0.0;
  std::string largest_induction_term;           // by H^0 norm
  double norm(const std::string& name, int which = 0) const;
};

constexpr std::array<double, 2> kBudgetIndices{0.0, 0.5};

TermBudget perturbation_budget(const BudgetInputs& in);

struct MissingComponent : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Picks the sample at time t from stored trajectories: full (stacked u, b),
// limit (stacked planar u, b), transported c, and wave W.
TermBudget perturbation_budget(const StateTrajectory& full, const StateTrajectory& limit,
                               const StateTrajectory& transported, const StateTrajectory& wave, double t);

struct InitialData {
  SpectralField planar_u0;
  SpectralField planar_b0;
  SpectralField bulk_v0;
  SpectralField bulk_c0;
  double gamma = 0.0;
  double delta = 0.1;
  bool strong_scaling = false;
  double C0 = 1.0;
  double K0 = 1.0;
};

struct InvalidInitialData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Largest admissible amplitude exponent gamma for the strong scaling.
inline double max_gamma(double delta) { return 5.0 * delta / 12.0; }

// u0 = ext(planar_u0) + v0, b0 = ext(planar_b0) + c0 on the bulk grid; with
// strong scaling on, |v0|_{H^{1/2+delta}} = C0 eps^-gamma (homogeneous) and
// |c0|_{H^{1/2+delta}} = (K0 |ln eps|)^{1/4} (inhomogeneous).
MhdState assemble_ill_prepared(const InitialData& d, double eps, double nu, double nu_prime);

struct RecipeParams {
  std::string recipe = "shell";  // shell | cellular
  int n = 32;
  double box = 6.283185307179586;
  double k0 = 3.0;
  double planar_u_amp = 1.0;
  double planar_b_amp = 0.5;
  double bulk_v_amp = 0.1;
  double bulk_c_amp = 0.1;
  std::uint64_t seed = 1;
};

// Deterministic initial data from a named recipe. "shell" draws every piece
// from a Gaussian shell at k0; "cellular" uses a strain cell for the planar
// velocity plus a small random perturbation, and shells for the rest. The
// bulk velocity carries no k3 = 0 modes.
InitialData make_initial_data(const RecipeParams& p);

}  // namespace rmhd
