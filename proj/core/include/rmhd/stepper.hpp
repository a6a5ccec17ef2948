#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rmhd/field.hpp"
#include "rmhd/ops.hpp"

namespace rmhd {

struct CflViolation : std::runtime_error {
  CflViolation(double dt, double admissible)
      : std::runtime_error("time step " + std::to_string(dt) + " exceeds the CFL bound " + std::to_string(admissible)),
        dt(dt),
        admissible(admissible) {}
  double dt;
  double admissible;
};

// Non-finite state. Carries the last finite state and its time when known.
struct Diverged : std::runtime_error {
  explicit Diverged(const std::string& what, double t = 0.0, SpectralField last = {})
      : std::runtime_error(what), t(t), last_valid(std::move(last)) {}
  double t;
  SpectralField last_valid;
};

// One diagnostics line per stored instant.
struct IndexRow {
  double t = 0.0;
  double energy = 0.0;       // (|u|^2 + |b|^2) / 2
  double dissipation = 0.0;  // nu |grad u|^2 + nu' |grad b|^2
  double div_residual = 0.0;
};

// Running check of E(t) + 2 int_0^t D = E(0), E = |u|^2 + |b|^2, D the
// dissipation rate, with trapezoid quadrature between consecutive rows.
class EnergyLedger {
 public:
  void add(const IndexRow& row);
  double max_residual() const { return max_residual_; }

 private:
  bool started_ = false;
  double e0_ = 0.0, last_t_ = 0.0, last_d_ = 0.0, dissipated_ = 0.0, max_residual_ = 0.0;
};

constexpr double kCflSafety = 0.5;

// safety * dx_min / max_x(|u| + |b|); b may be null. Infinite for zero fields.
double cfl_bound(const SpectralField& u, const SpectralField* b, double safety = kCflSafety);

bool all_finite(const SpectralField& f);

// Exact per-mode linear operator for a fixed step: Coriolis rotation plus
// heat decay on components [0,3), heat decay with nu_b on [3,6) when present.
class LinearPropagator {
 public:
  LinearPropagator(const Grid& g, double dt, double eps, double nu, double nu_b = 0.0);
  SpectralField apply(const SpectralField& f) const;
  double dt() const { return dt_; }

 private:
  Grid grid_;
  double dt_;
  bool rotating_;
  std::vector<double> decay_u_, decay_b_, cos_, sin_;
  std::vector<double> h1_, h2_, h3_;
};

using NonlinearTerm = std::function<SpectralField(const SpectralField&, double)>;

// Integrating-factor Heun step:
//   k1 = N(v, t),  v* = E(v + dt k1),  k2 = N(v*, t + dt),
//   v' = E(v + dt/2 k1) + dt/2 k2.
SpectralField if_rk2_step(const SpectralField& v, double t, const LinearPropagator& E, const NonlinearTerm& N);

}  // namespace rmhd
