#include "rmhd/mhd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "detail.hpp"
#include "rmhd/ops.hpp"
#include "rmhd/random.hpp"

namespace rmhd {

using detail::I;

SpectralField mhd_rhs(const SpectralField& ub) {
  if (ub.ncomp() != 6) throw std::invalid_argument("mhd_rhs expects a stacked (u, b) field");
  const Grid& g = ub.grid();
  const std::size_t n = g.size();
  Coeffs scratch;
  std::vector<std::vector<double>> x(6);
  for (int c = 0; c < 6; ++c) detail::physical_masked(ub[c], g, scratch, x[c]);

  SpectralField mom(g, 3);
  SpectralField cross(g, 3);
  std::vector<double> prod(n);
  Coeffs t;
  for (int a = 0; a < 3; ++a)
    for (int c = a; c < 3; ++c) {
      for (std::size_t i = 0; i < n; ++i) prod[i] = x[a][i] * x[c][i] - x[3 + a][i] * x[3 + c][i];
      detail::spectral_masked(prod, g, t);
      for (std::size_t i = 0; i < n; ++i) {
        auto k = g.kd_vec(i);
        mom[a][i] -= I * k[c] * t[i];
        if (c != a) mom[c][i] -= I * k[a] * t[i];
      }
    }
  for (int c = 0; c < 3; ++c) {
    int a = (c + 1) % 3, b = (c + 2) % 3;
    for (std::size_t i = 0; i < n; ++i) prod[i] = x[a][i] * x[3 + b][i] - x[b][i] * x[3 + a][i];
    detail::spectral_masked(prod, g, cross[c]);
  }
  SpectralField out = stack(leray_project(mom), curl(cross));
  out.set_divergence_free(true);
  return out;
}

MhdStepper::MhdStepper(const Grid& g, double eps, double nu, double nu_prime, double dt)
    : E_(g, dt, eps, nu, nu_prime) {}

SpectralField MhdStepper::step(const SpectralField& ub, double t) const {
  return if_rk2_step(ub, t, E_, [](const SpectralField& v, double) { return mhd_rhs(v); });
}

namespace {

void check_state(const MhdState& s) {
  if (s.u.ncomp() != 3 || s.b.ncomp() != 3) throw std::invalid_argument("MHD state needs 3-component u and b");
  require_same_grid(s.u.grid(), s.b.grid(), "MHD state");
}

}  // namespace

MhdState step_mhd_eps(const MhdState& s, double dt) {
  check_state(s);
  double bound = cfl_bound(s.u, &s.b);
  if (dt > bound) throw CflViolation(dt, bound);
  MhdStepper stepper(s.u.grid(), s.eps, s.nu, s.nu_prime, dt);
  SpectralField next = stepper.step(stack(s.u, s.b), s.t);
  if (!all_finite(next)) throw Diverged("rotating MHD: non-finite state", s.t, stack(s.u, s.b));
  MhdState out = s;
  out.u = next.slice(0);
  out.b = next.slice(3);
  out.u.set_divergence_free(true);
  out.b.set_divergence_free(true);
  out.t = s.t + dt;
  return out;
}

SpectralField step_rotating_ns(const SpectralField& u, double eps, double nu, double dt) {
  LinearPropagator E(u.grid(), dt, eps, nu);
  return if_rk2_step(u, 0.0, E, [](const SpectralField& v, double) { return lorentz_momentum(v, nullptr); });
}

IndexRow mhd_index(const MhdState& s) {
  double eu = l2_norm(s.u), eb = l2_norm(s.b);
  return {s.t, 0.5 * (eu * eu + eb * eb), s.nu * gradient_norm_sq(s.u) + s.nu_prime * gradient_norm_sq(s.b),
          std::max(divergence_residual(s.u), divergence_residual(s.b))};
}

MhdRun run_mhd(const MhdState& s0, double T, double dt, int save_every, const StateObserver& observe) {
  check_state(s0);
  if (save_every < 0) throw std::invalid_argument("save_every must be non-negative");
  double bound = cfl_bound(s0.u, &s0.b);
  if (dt > bound) throw CflViolation(dt, bound);
  const int steps = static_cast<int>(std::llround(T / dt));
  MhdStepper stepper(s0.u.grid(), s0.eps, s0.nu, s0.nu_prime, dt);
  MhdRun run;
  EnergyLedger ledger;
  MhdState s = s0;
  SpectralField v = stack(s.u, s.b);
  auto record = [&](bool store) {
    IndexRow row = mhd_index(s);
    ledger.add(row);
    run.max_div_residual = std::max(run.max_div_residual, row.div_residual);
    if (store) {
      run.traj.push(s.t, v);
      run.index.push_back(row);
    }
    if (observe) observe(s);
  };
  record(true);
  for (int n = 1; n <= steps; ++n) {
    SpectralField next = stepper.step(v, s.t);
    if (!all_finite(next))
      throw Diverged("rotating MHD: non-finite state at step " + std::to_string(n), s.t, v);
    v = std::move(next);
    s.u = v.slice(0);
    s.b = v.slice(3);
    s.t = s0.t + n * dt;
    record(n == steps || (save_every > 0 && n % save_every == 0));
  }
  run.energy_residual = ledger.max_residual();
  return run;
}

WaveStepper::WaveStepper(const Grid& g, double eps, double nu, double dt) : E_(g, dt, eps, nu) {}

SpectralField WaveStepper::step(const SpectralField& w, const SpectralField& f_now,
                                const SpectralField& f_next) const {
  SpectralField a = leray_project(f_now);
  SpectralField next = w;
  next.axpy(0.5 * E_.dt(), a);
  next = E_.apply(next);
  next.axpy(0.5 * E_.dt(), leray_project(f_next));
  next.set_divergence_free(true);
  return next;
}

StateTrajectory solve_wave_system(const SpectralField& v0, const StateTrajectory& forcing, double eps, double nu,
                                  double T, double dt) {
  if (v0.ncomp() != 3) throw std::invalid_argument("wave system needs a 3-component initial field");
  if (divergence_residual(v0) > 1e-10) throw NotDivergenceFree("wave system initial data must be divergence-free");
  const int steps = static_cast<int>(std::llround(T / dt));
  if (forcing.size() != static_cast<std::size_t>(steps) + 1)
    throw ForcingMismatch("forcing has " + std::to_string(forcing.size()) + " samples, the run needs " +
                          std::to_string(steps + 1));
  for (int n = 0; n <= steps; ++n)
    if (std::abs(forcing.times[n] - n * dt) > 1e-9 * std::max(1.0, dt)) {
      std::ostringstream os;
      os << "forcing sample " << n << " sits at t = " << forcing.times[n] << ", expected " << n * dt;
      throw ForcingMismatch(os.str());
    }
  WaveStepper stepper(v0.grid(), eps, nu, dt);
  StateTrajectory out;
  SpectralField w = v0;
  w.set_divergence_free(true);
  out.push(0.0, w);
  for (int n = 1; n <= steps; ++n) {
    w = stepper.step(w, forcing.states[n - 1], forcing.states[n]);
    out.push(n * dt, w);
  }
  return out;
}

SpectralField wave_forcing(const SpectralField& btilde_planar, const SpectralField& c) {
  auto bt = extend_in_x3(btilde_planar.slice(0), c.grid());
  SpectralField f = advect(bt, c);
  f += advect(c, bt);
  f += advect(c, c);
  return f;
}

double TermBudget::norm(const std::string& name, int which) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return norms[i][which];
  throw std::out_of_range("no budget term named " + name);
}

TermBudget perturbation_budget(const BudgetInputs& in) {
  for (const auto* f : {&in.u, &in.b, &in.c, &in.w})
    if (f->ncomp() != 3) throw MissingComponent("budget needs 3-component u, b, c and W");
  if (in.u_tilde.ncomp() != 3 || in.b_tilde.ncomp() != 3)
    throw MissingComponent("budget needs 3-component planar u and b");
  const Grid& g = in.u.grid();
  for (const auto* f : {&in.b, &in.c, &in.w}) require_same_grid(g, f->grid(), "perturbation budget");
  const auto ut = extend_in_x3(in.u_tilde, g);
  const auto bt = extend_in_x3(in.b_tilde, g);
  const auto& c = in.c;
  const auto& W = in.w;
  const auto delta = in.u - ut - W;
  const auto d = in.b - bt - c;
  auto P = [](const SpectralField& f) { return leray_project(f); };

  std::vector<SpectralField> F{
      -1.0 * P(advect(delta, delta)), -1.0 * P(advect(delta, W)), -1.0 * P(advect(W, delta)),
      -1.0 * P(advect(W, W)),         -1.0 * P(advect(delta, ut)), -1.0 * P(advect(W, ut)),
      -1.0 * P(advect(ut, delta)),    -1.0 * P(advect(ut, W)),     P(advect(d, d)),
      P(advect(d, bt)),               P(advect(d, c)),             P(advect(bt, d)),
      P(advect(c, d))};
  std::vector<SpectralField> G{
      -1.0 * advect(delta, d), -1.0 * advect(W, d),     advect(d, delta),        advect(d, W),
      -1.0 * advect(ut, d),    advect(d, ut),           -1.0 * advect(delta, bt), -1.0 * advect(delta, c),
      -1.0 * advect(W, bt),    -1.0 * advect(W, c),     advect(bt, delta),       advect(c, delta),
      advect(bt, W),           advect(c, W)};

  TermBudget out;
  out.t = in.t;
  auto add = [&](const std::string& prefix, const std::vector<SpectralField>& terms) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      out.names.push_back(prefix + std::to_string(i + 1));
      out.norms.push_back({sobolev_norm(terms[i], kBudgetIndices[0]), sobolev_norm(terms[i], kBudgetIndices[1])});
    }
  };
  add("F", F);
  add("G", G);

  SpectralField mom = -1.0 * P(advect(in.u, in.u) - advect(in.b, in.b));
  mom += P(advect(ut, ut) - advect(bt, bt));
  mom -= P(wave_forcing(in.b_tilde, c));
  SpectralField ind = advect(in.b, in.u) - advect(in.u, in.b);
  ind += advect(ut, bt) - advect(bt, ut);
  ind += advect(ut, c) - advect(c, ut);

  auto gap = [](const std::vector<SpectralField>& terms, const SpectralField& total) {
    SpectralField sum = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) sum += terms[i];
    double ref = l2_norm(total);
    double diff = l2_norm(sum - total);
    return ref > 0.0 ? diff / ref : diff;
  };
  out.momentum_consistency = gap(F, mom);
  out.induction_consistency = gap(G, ind);

  std::size_t best = kMomentumTerms;
  for (std::size_t i = kMomentumTerms; i < out.names.size(); ++i)
    if (out.norms[i][0] > out.norms[best][0]) best = i;
  out.largest_induction_term = out.names[best];
  return out;
}

namespace {

const SpectralField& sample_at(const StateTrajectory& traj, double t, const char* what) {
  if (traj.empty()) throw MissingComponent(std::string("budget: empty ") + what + " trajectory");
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (std::abs(traj.times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return traj.states[i];
  std::ostringstream os;
  os << "budget: " << what << " trajectory has no sample at t = " << t;
  throw MissingComponent(os.str());
}

}  // namespace

TermBudget perturbation_budget(const StateTrajectory& full, const StateTrajectory& limit,
                               const StateTrajectory& transported, const StateTrajectory& wave, double t) {
  const auto& ub = sample_at(full, t, "full");
  const auto& lim = sample_at(limit, t, "limit");
  if (ub.ncomp() != 6 || lim.ncomp() != 6) throw MissingComponent("budget: full and limit samples need (u, b)");
  BudgetInputs in;
  in.t = t;
  in.u = ub.slice(0);
  in.b = ub.slice(3);
  in.u_tilde = lim.slice(0);
  in.b_tilde = lim.slice(3);
  in.c = sample_at(transported, t, "transported");
  in.w = sample_at(wave, t, "wave");
  return perturbation_budget(in);
}

namespace {

void require_solenoidal(const SpectralField& f, const char* what) {
  if (f.ncomp() != 3) throw InvalidInitialData(std::string(what) + " must have 3 components");
  if (divergence_residual(f) > 1e-10) throw InvalidInitialData(std::string(what) + " is not divergence-free");
}

}  // namespace

MhdState assemble_ill_prepared(const InitialData& d, double eps, double nu, double nu_prime) {
  require_solenoidal(d.planar_u0, "planar velocity");
  require_solenoidal(d.planar_b0, "planar magnetic field");
  require_solenoidal(d.bulk_v0, "bulk velocity");
  require_solenoidal(d.bulk_c0, "bulk magnetic field");
  if (d.planar_u0.grid().dim() != 2 || d.planar_b0.grid().dim() != 2)
    throw InvalidInitialData("planar pieces must live on a planar grid");
  if (!(eps > 0.0)) throw InvalidInitialData("Rossby number must be positive");
  const Grid& g = d.bulk_v0.grid();
  require_same_grid(g, d.bulk_c0.grid(), "initial data");

  SpectralField v0 = d.bulk_v0, c0 = d.bulk_c0;
  if (d.strong_scaling) {
    if (!(d.delta > 0.0 && d.delta <= 1.0 / 6.0 + 1e-15)) {
      std::ostringstream os;
      os << "delta = " << d.delta << " outside (0, 1/6]";
      throw InvalidInitialData(os.str());
    }
    if (d.gamma < 0.0 || d.gamma > max_gamma(d.delta) * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "gamma = " << d.gamma << " outside [0, 5 delta/12] = [0, " << max_gamma(d.delta) << "]";
      throw InvalidInitialData(os.str());
    }
    const double s = 0.5 + d.delta;
    double nv = sobolev_norm(v0, s);
    if (nv > 0.0) v0 *= d.C0 * std::pow(eps, -d.gamma) / nv;
    double nc = inhomogeneous_sobolev_norm(c0, s);
    if (nc > 0.0) c0 *= std::pow(d.K0 * std::abs(std::log(eps)), 0.25) / nc;
  }
  MhdState st;
  st.u = extend_in_x3(d.planar_u0, g) + v0;
  st.b = extend_in_x3(d.planar_b0, g) + c0;
  st.u.set_divergence_free(true);
  st.b.set_divergence_free(true);
  st.eps = eps;
  st.nu = nu;
  st.nu_prime = nu_prime;
  return st;
}

InitialData make_initial_data(const RecipeParams& p) {
  const Grid g2 = Grid::planar(p.n, p.n, p.box, p.box, p.box);
  const Grid g3 = Grid::cube(p.n, p.box);
  const double kunit = 2.0 * std::acos(-1.0) / p.box;
  auto shape = shell_spectrum(p.k0 * kunit, std::max(1.0, 0.4 * p.k0) * kunit);
  InitialData d;
  if (p.recipe == "shell") {
    d.planar_u0 = random_field(g2, 3, shape, p.planar_u_amp, p.seed);
  } else if (p.recipe == "cellular") {
    // Strain cell u = (sin kx cos ky, -cos kx sin ky, 0) plus a random part.
    PhysicalField cell{g2, std::vector<std::vector<double>>(3, std::vector<double>(g2.size(), 0.0))};
    for (int i = 0; i < p.n; ++i)
      for (int j = 0; j < p.n; ++j) {
        double x = i * g2.spacing(0) * kunit, y = j * g2.spacing(1) * kunit;
        cell.comp[0][g2.index(i, j, 0)] = std::sin(x) * std::cos(y);
        cell.comp[1][g2.index(i, j, 0)] = -std::cos(x) * std::sin(y);
      }
    SpectralField u = to_spectral(cell);
    u *= 0.9 * p.planar_u_amp / l2_norm(u);
    u += random_field(g2, 3, shape, 0.3 * p.planar_u_amp, p.seed);
    d.planar_u0 = leray_project(u);
  } else {
    throw InvalidInitialData("unknown recipe '" + p.recipe + "' (expected shell or cellular)");
  }
  d.planar_b0 = random_field(g2, 3, shape, p.planar_b_amp, p.seed + 1);
  // The bulk velocity has no x3-independent modes; those belong to the planar part.
  d.bulk_v0 = random_field(g3, 3, shape, p.bulk_v_amp, p.seed + 2);
  for (std::size_t i = 0; i < g3.size(); ++i)
    if (g3.unravel(i)[2] == 0)
      for (int c = 0; c < 3; ++c) d.bulk_v0[c][i] = 0.0;
  if (double n = l2_norm(d.bulk_v0); n > 0.0) d.bulk_v0 *= p.bulk_v_amp / n;
  d.bulk_c0 = random_field(g3, 3, shape, p.bulk_c_amp, p.seed + 3);
  return d;
}

}  // namespace rmhd
