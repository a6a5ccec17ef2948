#include "rmhd/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rmhd/fft.hpp"

namespace rmhd {

double cfl_bound(const SpectralField& u, const SpectralField* b, double safety) {
  auto pu = to_physical(dealias(u.slice(0, 3)));
  std::vector<double> speed(u.size(), 0.0);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < speed.size(); ++i) speed[i] += pu.comp[c][i] * pu.comp[c][i];
  for (auto& s : speed) s = std::sqrt(s);
  if (b) {
    auto pb = to_physical(dealias(b->slice(0, 3)));
    for (std::size_t i = 0; i < speed.size(); ++i) {
      double m = 0.0;
      for (int c = 0; c < 3; ++c) m += pb.comp[c][i] * pb.comp[c][i];
      speed[i] += std::sqrt(m);
    }
  }
  double vmax = *std::max_element(speed.begin(), speed.end());
  if (vmax == 0.0) return std::numeric_limits<double>::infinity();
  return safety * u.grid().min_spacing() / vmax;
}

void EnergyLedger::add(const IndexRow& row) {
  if (!started_) {
    started_ = true;
    e0_ = 2.0 * row.energy;
  } else {
    dissipated_ += (row.t - last_t_) * (last_d_ + row.dissipation);
  }
  last_t_ = row.t;
  last_d_ = row.dissipation;
  if (e0_ > 0.0) max_residual_ = std::max(max_residual_, std::abs(2.0 * row.energy + dissipated_ - e0_) / e0_);
}

bool all_finite(const SpectralField& f) {
  for (int c = 0; c < f.ncomp(); ++c)
    for (const auto& v : f[c])
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

LinearPropagator::LinearPropagator(const Grid& g, double dt, double eps, double nu, double nu_b)
    : grid_(g), dt_(dt), rotating_(std::isfinite(eps)) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("Rossby number must be positive");
  const std::size_t n = g.size();
  decay_u_.resize(n);
  decay_b_.resize(n);
  cos_.assign(n, 1.0);
  sin_.assign(n, 0.0);
  h1_.assign(n, 0.0);
  h2_.assign(n, 0.0);
  h3_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    decay_u_[i] = nu > 0.0 ? std::exp(-nu * dt * g.k2(i)) : 1.0;
    decay_b_[i] = nu_b > 0.0 ? std::exp(-nu_b * dt * g.k2(i)) : 1.0;
    auto k = g.kd_vec(i);
    double kn = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    if (!rotating_ || kn == 0.0 || k[2] == 0.0) continue;
    h1_[i] = k[0] / kn;
    h2_[i] = k[1] / kn;
    h3_[i] = k[2] / kn;
    double w = h3_[i] / eps * dt;
    cos_[i] = std::cos(w);
    sin_[i] = std::sin(w);
  }
}

SpectralField LinearPropagator::apply(const SpectralField& f) const {
  require_same_grid(grid_, f.grid(), "linear propagator");
  if (f.ncomp() != 3 && f.ncomp() != 6) throw std::invalid_argument("propagator expects 3 or 6 components");
  SpectralField out(grid_, f.ncomp());
  const std::size_t n = grid_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx u1 = f[0][i], u2 = f[1][i], u3 = f[2][i];
    const double d = decay_u_[i], c = cos_[i], s = sin_[i];
    if (s == 0.0) {
      out[0][i] = d * c * u1;
      out[1][i] = d * c * u2;
      out[2][i] = d * c * u3;
    } else {
      const double h1 = h1_[i], h2 = h2_[i], h3 = h3_[i];
      out[0][i] = d * (c * u1 + s * (h2 * u3 - h3 * u2));
      out[1][i] = d * (c * u2 + s * (h3 * u1 - h1 * u3));
      out[2][i] = d * (c * u3 + s * (h1 * u2 - h2 * u1));
    }
  }
  if (f.ncomp() == 6)
    for (int cc = 3; cc < 6; ++cc)
      for (std::size_t i = 0; i < n; ++i) out[cc][i] = decay_b_[i] * f[cc][i];
  out.set_divergence_free(f.divergence_free());
  return out;
}

SpectralField if_rk2_step(const SpectralField& v, double t, const LinearPropagator& E, const NonlinearTerm& N) {
  const double dt = E.dt();
  SpectralField k1 = N(v, t);
  SpectralField stage = v;
  stage.axpy(dt, k1);
  stage = E.apply(stage);
  SpectralField k2 = N(stage, t + dt);
  SpectralField next = v;
  next.axpy(0.5 * dt, k1);
  next = E.apply(next);
  next.axpy(0.5 * dt, k2);
  next.set_divergence_free(v.divergence_free());
  return next;
}

}  // namespace rmhd
