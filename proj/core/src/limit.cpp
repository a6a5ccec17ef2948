#include "rmhd/limit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "detail.hpp"
#include "rmhd/ops.hpp"

namespace rmhd {

using detail::I;

namespace {

void require_planar(const SpectralField& f, const char* what) {
  if (f.grid().dim() != 2 || f.ncomp() != 3)
    throw std::invalid_argument(std::string(what) + ": expected a 3-component field on a planar grid");
}

double horizontal_div_residual(const SpectralField& f, int first) {
  const Grid& g = f.grid();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto k = g.kd_vec(i);
    cplx dot = k[0] * f[first][i] + k[1] * f[first + 1][i];
    double amp = std::sqrt(std::norm(f[first][i]) + std::norm(f[first + 1][i]));
    num = std::max(num, std::abs(dot));
    den = std::max(den, std::hypot(k[0], k[1]) * amp);
  }
  return den == 0.0 ? 0.0 : num / den;
}

IndexRow planar_index(double t, const SpectralField& ub, double nu, double nu_prime) {
  auto u = ub.slice(0), b = ub.slice(3);
  double eu = l2_norm(u), eb = l2_norm(b);
  return {t, 0.5 * (eu * eu + eb * eb), nu * gradient_norm_sq(u) + nu_prime * gradient_norm_sq(b),
          std::max(horizontal_div_residual(ub, 0), horizontal_div_residual(ub, 3))};
}

}  // namespace

PlanarState planar_state(const SpectralField& ub) {
  if (ub.ncomp() != 6) throw std::invalid_argument("planar state needs 6 components");
  PlanarState s{ub.slice(0), ub.slice(3), {}};
  s.q0 = pressure_split(s.u, s.b, 1.0).p0;
  return s;
}

SpectralField planar_mhd_rhs(const SpectralField& ub) {
  const Grid& g = ub.grid();
  const std::size_t n = g.size();
  Coeffs scratch;
  std::vector<std::vector<double>> x(6);
  for (int c = 0; c < 6; ++c) detail::physical_masked(ub[c], g, scratch, x[c]);
  const auto &u1 = x[0], &u2 = x[1], &u3 = x[2], &b1 = x[3], &b2 = x[4], &b3 = x[5];

  // Horizontal stresses, cross product a = u1 b2 - u2 b1, and the fluxes of
  // the third components.
  std::vector<std::vector<double>> p(8, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    p[0][i] = u1[i] * u1[i] - b1[i] * b1[i];
    p[1][i] = u1[i] * u2[i] - b1[i] * b2[i];
    p[2][i] = u2[i] * u2[i] - b2[i] * b2[i];
    p[3][i] = u1[i] * b2[i] - u2[i] * b1[i];
    p[4][i] = u1[i] * u3[i] - b1[i] * b3[i];
    p[5][i] = u2[i] * u3[i] - b2[i] * b3[i];
    p[6][i] = u1[i] * b3[i] - b1[i] * u3[i];
    p[7][i] = u2[i] * b3[i] - b2[i] * u3[i];
  }
  std::vector<Coeffs> h(8);
  for (int c = 0; c < 8; ++c) detail::spectral_masked(p[c], g, h[c]);

  SpectralField out(g, 6);
  const auto& k1 = g.kd(0);
  const auto& k2 = g.kd(1);
  for (int i1 = 0; i1 < g.n(0); ++i1)
    for (int i2 = 0; i2 < g.n(1); ++i2) {
      std::size_t i = g.index(i1, i2, 0);
      double a = k1[i1], b = k2[i2], kk = a * a + b * b;
      cplx r1 = -I * (a * h[0][i] + b * h[1][i]);
      cplx r2 = -I * (a * h[1][i] + b * h[2][i]);
      if (kk > 0.0) {
        cplx s = (a * r1 + b * r2) / kk;
        r1 -= a * s;
        r2 -= b * s;
      }
      out[0][i] = r1;
      out[1][i] = r2;
      out[2][i] = -I * (a * h[4][i] + b * h[5][i]);
      out[3][i] = I * b * h[3][i];
      out[4][i] = -I * a * h[3][i];
      out[5][i] = -I * (a * h[6][i] + b * h[7][i]);
    }
  return out;
}

PlanarRun solve_2dmhd3(const SpectralField& u0, const SpectralField& b0, double nu, double nu_prime, double T,
                       double dt, int save_every) {
  require_planar(u0, "solve_2dmhd3 velocity");
  require_planar(b0, "solve_2dmhd3 magnetic field");
  require_same_grid(u0.grid(), b0.grid(), "solve_2dmhd3");
  if (!(T >= 0.0)) throw std::invalid_argument("final time must be non-negative");
  if (save_every < 1) throw std::invalid_argument("save_every must be at least 1");
  for (int first : {0, 3}) {
    const auto& f = first == 0 ? u0 : b0;
    if (horizontal_div_residual(f, 0) > 1e-10)
      throw NotDivergenceFree("solve_2dmhd3: horizontal part of the initial data is not divergence-free");
  }
  double bound = cfl_bound(u0, &b0);
  if (dt > bound) throw CflViolation(dt, bound);

  PlanarMhdStepper stepper(u0.grid(), nu, nu_prime, dt);
  PlanarRun run;
  SpectralField v = stack(u0, b0);
  const int steps = static_cast<int>(std::llround(T / dt));
  EnergyLedger ledger;
  auto record = [&](double t, bool store) {
    IndexRow row = planar_index(t, v, nu, nu_prime);
    ledger.add(row);
    run.max_div_residual = std::max(run.max_div_residual, row.div_residual);
    if (store) {
      run.traj.push(t, v);
      run.index.push_back(row);
    }
  };
  record(0.0, true);
  for (int n = 1; n <= steps; ++n) {
    SpectralField next = stepper.step(v, (n - 1) * dt);
    if (!all_finite(next))
      throw Diverged("solve_2dmhd3: non-finite state at step " + std::to_string(n), (n - 1) * dt, v);
    v = std::move(next);
    record(n * dt, n % save_every == 0 || n == steps);
  }
  run.energy_residual = ledger.max_residual();
  return run;
}

PlanarMhdStepper::PlanarMhdStepper(const Grid& g, double nu, double nu_prime, double dt)
    : E_(g, dt, kNoRotation, nu, nu_prime) {}

SpectralField PlanarMhdStepper::step(const SpectralField& ub, double t) const {
  return if_rk2_step(ub, t, E_, [](const SpectralField& v, double) { return planar_mhd_rhs(v); });
}

namespace {

const SpectralField& velocity_at(const StateTrajectory& traj, double t, double dt) {
  const double tol = 1e-9 * std::max(1.0, dt);
  auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t - tol);
  if (it == traj.times.end() || std::abs(*it - t) > tol) {
    std::ostringstream os;
    os << "trajectory gap: no velocity sample at t = " << t;
    throw TrajectoryGap(os.str());
  }
  return traj.states[static_cast<std::size_t>(it - traj.times.begin())];
}

}  // namespace

StateTrajectory solve_transported_magnetic(const SpectralField& c0, const StateTrajectory& velocity,
                                           double nu_prime, double T, double dt, int save_every) {
  if (save_every < 1) throw std::invalid_argument("save_every must be at least 1");
  if (c0.ncomp() != 3 || c0.grid().dim() != 3)
    throw std::invalid_argument("transported field must be a 3-component 3D field");
  if (velocity.empty()) throw TrajectoryGap("trajectory gap: empty velocity trajectory");
  if (divergence_residual(c0) > 1e-10) throw NotDivergenceFree("transported field must be divergence-free");
  const Grid& g3 = c0.grid();
  const int steps = static_cast<int>(std::llround(T / dt));
  if (steps > 0 && velocity.times.back() < steps * dt - 1e-9 * std::max(1.0, dt))
    throw TrajectoryGap("trajectory gap: velocity ends at t = " + std::to_string(velocity.times.back()) +
                        " before T = " + std::to_string(T));

  auto extended = [&](double t) {
    const auto& s = velocity_at(velocity, t, dt);
    if (s.grid().dim() != 2) throw std::invalid_argument("driving velocity must live on a planar grid");
    return extend_in_x3(s.slice(0), g3);
  };

  StateTrajectory out;
  SpectralField c = c0;
  c.set_divergence_free(true);
  out.push(0.0, c);
  if (steps == 0) return out;

  double bound = cfl_bound(extended(0.0), nullptr);
  if (dt > bound) throw CflViolation(dt, bound);
  TransportStepper stepper(g3, nu_prime, dt);
  for (int n = 1; n <= steps; ++n) {
    double t = (n - 1) * dt;
    SpectralField next = stepper.step(c, t, velocity_at(velocity, t, dt), velocity_at(velocity, t + dt, dt));
    if (!all_finite(next))
      throw Diverged("transported field: non-finite state at step " + std::to_string(n), t, c);
    c = std::move(next);
    if (n % save_every == 0 || n == steps) out.push(n * dt, c);
  }
  return out;
}

TransportStepper::TransportStepper(const Grid& g3, double nu_prime, double dt)
    : grid_(g3), E_(g3, dt, kNoRotation, nu_prime) {}

SpectralField TransportStepper::step(const SpectralField& c, double t, const SpectralField& u_now,
                                     const SpectralField& u_next) const {
  auto now = extend_in_x3(u_now.slice(0), grid_);
  auto next = extend_in_x3(u_next.slice(0), grid_);
  const double t_next = t + E_.dt();
  return if_rk2_step(c, t, E_, [&](const SpectralField& f, double s) {
    return curl_of_cross(std::abs(s - t_next) < std::abs(s - t) ? next : now, f);
  });
}

bool TransportMonitor::holds(double constant) const {
  for (std::size_t i = 0; i < t.size(); ++i) {
    double rhs = initial * std::exp(constant * growth[i]);
    if (lhs[i] > rhs * (1.0 + 1e-12)) return false;
  }
  return true;
}

TransportMonitor transport_monitor(const StateTrajectory& c, const StateTrajectory& velocity, double s,
                                   double nu_prime) {
  c.validate();
  if (c.empty()) throw std::invalid_argument("empty transported trajectory");
  if (!(nu_prime > 0.0)) throw std::invalid_argument("transport monitor needs a positive diffusivity");
  TransportMonitor m;
  m.s = s;
  double c0 = sobolev_norm(c.states.front(), s);
  m.initial = c0 * c0;
  double diss = 0.0, grow = 0.0;
  double prev_diss = 0.0, prev_grow = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double t = c.times[i];
    double h = i == 0 ? 0.0 : t - c.times[i - 1];
    double cs = sobolev_norm(c.states[i], s);
    double d = sobolev_norm(c.states[i], s + 1.0);
    const auto& v = velocity_at(velocity, t, h > 0.0 ? h : 1.0);
    auto u = v.slice(0);
    double ul2 = l2_norm(u);
    double gr = (1.0 + ul2 * ul2 / (nu_prime * nu_prime)) * gradient_norm_sq(u);
    if (i > 0) {
      diss += 0.5 * h * (prev_diss + d * d);
      grow += 0.5 * h * (prev_grow + gr);
    }
    prev_diss = d * d;
    prev_grow = gr;
    m.t.push_back(t);
    m.lhs.push_back(cs * cs + nu_prime * diss);
    m.growth.push_back(grow / nu_prime);
    if (m.initial > 0.0 && m.lhs.back() > m.initial && grow > 0.0)
      m.required_constant = std::max(m.required_constant, std::log(m.lhs.back() / m.initial) / m.growth.back());
  }
  return m;
}

std::optional<std::string> integrability_violation(double sigma, double p, double delta) {
  std::ostringstream os;
  if (!(delta > 0.0)) return std::string("delta must be positive");
  if (!(p >= 1.0)) return std::string("time exponent p must be at least 1");
  const double half = 0.5 + delta;
  if (sigma < 0.0) {
    os << "sigma = " << sigma << " is below the lower bound 0";
    return os.str();
  }
  if (sigma > half + 1.0) {
    os << "sigma = " << sigma << " exceeds the upper bound 3/2 + delta = " << half + 1.0;
    return os.str();
  }
  double lo = sigma <= 1.0 ? (sigma == 0.0 ? kInf : 2.0 / sigma) : 2.0;
  double hi = sigma <= half ? kInf : 2.0 / (sigma - half);
  if (p < lo) {
    os << "p = " << p << " is below the lower bound " << (sigma <= 1.0 ? "2/sigma = " : "2 = ") << lo;
    return os.str();
  }
  if (p > hi) {
    os << "p = " << p << " exceeds the upper bound 2/(sigma - 1/2 - delta) = " << hi;
    return os.str();
  }
  return std::nullopt;
}

IntegrabilitySample sample_ce_integrability(const StateTrajectory& c, double sigma, double p, double delta) {
  if (auto why = integrability_violation(sigma, p, delta)) throw InadmissibleExponents(*why);
  c.validate();
  if (c.empty()) throw std::invalid_argument("empty transported trajectory");
  std::vector<double> vals;
  vals.reserve(c.size());
  for (const auto& s : c.states) vals.push_back(sobolev_norm(s, sigma));
  IntegrabilitySample r;
  r.value = time_lebesgue_norm(c.times, vals, p);
  r.initial_norm = inhomogeneous_sobolev_norm(c.states.front(), 0.5 + delta);
  r.ratio = r.initial_norm > 0.0 ? r.value / r.initial_norm : 0.0;
  return r;
}

}  // namespace rmhd
