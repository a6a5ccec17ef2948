#include "rmhd/besov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rmhd/fft.hpp"
#include "rmhd/ops.hpp"

namespace rmhd {

namespace {

double glue(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

double corner_radius(const Grid& g) {
  double acc = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (g.n(a) == 1) continue;
    double k = std::numbers::pi * g.n(a) / g.length(a);
    acc += k * k;
  }
  return std::sqrt(acc);
}

// Pointwise Euclidean magnitude of a vector field in real space.
std::vector<double> magnitude(const SpectralField& f) {
  auto p = to_physical(f);
  std::vector<double> m(f.size(), 0.0);
  for (const auto& comp : p.comp)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += comp[i] * comp[i];
  for (auto& v : m) v = std::sqrt(v);
  return m;
}

double lp_of_samples(const std::vector<double>& m, double cell, double p) {
  if (std::isinf(p)) return m.empty() ? 0.0 : *std::max_element(m.begin(), m.end());
  double acc = 0.0;
  for (double v : m) acc += std::pow(v, p);
  return std::pow(cell * acc, 1.0 / p);
}

double lr_sum(const std::vector<double>& a, double r) {
  if (std::isinf(r)) return a.empty() ? 0.0 : *std::max_element(a.begin(), a.end());
  double acc = 0.0;
  for (double v : a) acc += std::pow(v, r);
  return std::pow(acc, 1.0 / r);
}

void check_index(double v, const char* name) {
  if (!(v >= 1.0)) throw std::invalid_argument(std::string("Lebesgue index ") + name + " must lie in [1, inf]");
}

}  // namespace

double lp_chi(double r) {
  constexpr double a = 0.75, b = 4.0 / 3.0;
  if (r <= a) return 1.0;
  if (r >= b) return 0.0;
  double y = (r - a) / (b - a);
  double g1 = glue(1.0 - y), g0 = glue(y);
  return g1 / (g1 + g0);
}

double lp_phi(double r) { return lp_chi(0.5 * r) - lp_chi(r); }

DyadicLadder::DyadicLadder(const Grid& g) : grid_(g) {
  jmin_ = static_cast<int>(std::floor(std::log2(0.75 * g.kmin())));
  jmax_ = static_cast<int>(std::ceil(std::log2(corner_radius(g) * 4.0 / 3.0))) - 1;
}

bool DyadicLadder::truncated(int j) const { return std::ldexp(8.0 / 3.0, j) > grid_.resolved_radius(); }

double DyadicLadder::weight(int j, double r) const { return lp_phi(std::ldexp(r, -j)); }

double DyadicLadder::low_weight(int j, double r) const { return lp_chi(std::ldexp(r, -j)); }

SpectralField DyadicLadder::block(const SpectralField& f, int j) const {
  require_same_grid(grid_, f.grid(), "dyadic block");
  SpectralField out = f;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double w = weight(j, std::sqrt(grid_.k2(i)));
    for (int c = 0; c < f.ncomp(); ++c) out[c][i] *= w;
  }
  return out;
}

SpectralField DyadicLadder::low(const SpectralField& f, int j) const {
  require_same_grid(grid_, f.grid(), "dyadic low-pass");
  SpectralField out = f;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double w = low_weight(j, std::sqrt(grid_.k2(i)));
    for (int c = 0; c < f.ncomp(); ++c) out[c][i] *= w;
  }
  return out;
}

double lebesgue_norm(const SpectralField& f, double p) {
  check_index(p, "p");
  const Grid& g = f.grid();
  return lp_of_samples(magnitude(f), g.volume() / g.size(), p);
}

NormValue besov_norm(const SpectralField& f, double s, double p, double r, double max_truncated_share) {
  check_index(p, "p");
  check_index(r, "r");
  DyadicLadder lad(f.grid());
  const Grid& g = f.grid();
  double e_total = 0.0, e_trunc = 0.0;
  std::vector<double> terms, flagged;
  for (int j = lad.jmin(); j <= lad.jmax(); ++j) {
    SpectralField b = lad.block(f, j);
    double e = 0.0;
    for (int c = 0; c < b.ncomp(); ++c)
      for (const auto& v : b[c]) e += std::norm(v);
    e_total += e;
    double a = e == 0.0 ? 0.0 : std::pow(2.0, j * s) * lp_of_samples(magnitude(b), g.volume() / g.size(), p);
    terms.push_back(a);
    if (lad.truncated(j)) {
      e_trunc += e;
      flagged.push_back(a);
    }
  }
  if (e_total > 0.0 && e_trunc > max_truncated_share * e_total)
    throw UnresolvedSpectrum("more than " + std::to_string(static_cast<int>(100 * max_truncated_share)) +
                             "% of the spectrum lies in truncated dyadic blocks (" +
                             std::to_string(e_trunc / e_total) + ")");
  NormValue out;
  out.value = lr_sum(terms, r);
  if (out.value > 0.0) {
    if (std::isinf(r))
      out.truncation_share = flagged.empty() ? 0.0 : *std::max_element(flagged.begin(), flagged.end()) / out.value;
    else
      out.truncation_share = std::pow(lr_sum(flagged, r) / out.value, r);
  }
  return out;
}

double sobolev_norm(const SpectralField& f, double s) {
  const Grid& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double k2 = g.k2(i);
    if (k2 == 0.0) continue;
    double a = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) a += std::norm(f[c][i]);
    acc += std::pow(k2, s) * a;
  }
  return std::sqrt(g.volume() * acc);
}

double inhomogeneous_sobolev_norm(const SpectralField& f, double s) {
  const Grid& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) a += std::norm(f[c][i]);
    acc += std::pow(1.0 + g.k2(i), s) * a;
  }
  return std::sqrt(g.volume() * acc);
}

void StateTrajectory::push(double t, SpectralField f) {
  if (!times.empty() && !(t > times.back())) throw std::invalid_argument("trajectory times must increase");
  if (!states.empty()) require_same_grid(states.front().grid(), f.grid(), "trajectory");
  times.push_back(t);
  states.push_back(std::move(f));
}

void StateTrajectory::validate() const {
  if (states.empty()) throw std::invalid_argument("empty trajectory");
  if (times.size() != states.size()) throw std::invalid_argument("trajectory time/state count mismatch");
}

double time_lebesgue_norm(const std::vector<double>& times, const std::vector<double>& values, double a) {
  check_index(a, "a");
  if (values.empty()) throw std::invalid_argument("empty time series");
  if (std::isinf(a)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  if (values.size() == 1) return 0.0;
  double acc = 0.0;
  for (std::size_t n = 0; n + 1 < values.size(); ++n)
    acc += 0.5 * (times[n + 1] - times[n]) * (std::pow(std::abs(values[n]), a) + std::pow(std::abs(values[n + 1]), a));
  return std::pow(acc, 1.0 / a);
}

double chemin_lerner_norm(const StateTrajectory& traj, double a, double s, double b, double c) {
  traj.validate();
  check_index(b, "b");
  check_index(c, "c");
  const Grid& g = traj.states.front().grid();
  DyadicLadder lad(g);
  std::vector<double> per_j;
  std::vector<double> series(traj.size());
  for (int j = lad.jmin(); j <= lad.jmax(); ++j) {
    for (std::size_t n = 0; n < traj.size(); ++n)
      series[n] = lp_of_samples(magnitude(lad.block(traj.states[n], j)), g.volume() / g.size(), b);
    per_j.push_back(std::pow(2.0, j * s) * time_lebesgue_norm(traj.times, series, a));
  }
  return lr_sum(per_j, c);
}

double time_besov_norm(const StateTrajectory& traj, double a, double s, double b, double c) {
  traj.validate();
  std::vector<double> series(traj.size());
  for (std::size_t n = 0; n < traj.size(); ++n) series[n] = besov_norm(traj.states[n], s, b, c).value;
  return time_lebesgue_norm(traj.times, series, a);
}

double anisotropic_norm(const SpectralField& f, double a, double b) {
  check_index(a, "a");
  check_index(b, "b");
  const Grid& g = f.grid();
  auto m = magnitude(f);
  const int n3 = g.n(2);
  const double dz = g.spacing(2);
  std::vector<double> columns(static_cast<std::size_t>(g.n(0)) * g.n(1));
  for (std::size_t col = 0; col < columns.size(); ++col) {
    std::vector<double> line(m.begin() + static_cast<std::ptrdiff_t>(col * n3),
                             m.begin() + static_cast<std::ptrdiff_t>((col + 1) * n3));
    columns[col] = lp_of_samples(line, dz, b);
  }
  return lp_of_samples(columns, g.spacing(0) * g.spacing(1), a);
}

Paraproduct paraproduct_2d3d(const SpectralField& c, const SpectralField& btilde, int j0) {
  if (j0 < 4) throw std::invalid_argument("paraproduct support lemma needs j0 >= 4, got " + std::to_string(j0));
  return paraproduct_2d3d_unchecked(c, btilde, j0);
}

Paraproduct paraproduct_2d3d_unchecked(const SpectralField& c, const SpectralField& btilde, int j0) {
  const Grid& g3 = c.grid();
  const Grid& g2 = btilde.grid();
  if (g2.n(2) != 1) throw GridError("paraproduct expects a planar second factor");
  if (g3.n(0) != g2.n(0) || g3.n(1) != g2.n(1) || g3.length(0) != g2.length(0) || g3.length(1) != g2.length(1))
    throw GridError("paraproduct factors have incompatible horizontal grids");
  DyadicLadder lc(g3), lb(g2);
  const int qlo = std::min(lc.jmin(), lb.jmin()), qhi = std::max(lc.jmax(), lb.jmax());

  Paraproduct out{SpectralField(g3, 3), SpectralField(g3, 3), SpectralField(g3, 3), {}, {}, {}, {}};
  for (int q = qlo; q <= qhi; ++q) {
    SpectralField cq = lc.block(c, q);
    SpectralField bq = extend_in_x3(lb.block(btilde, q), g3);
    SpectralField clow = lc.low(c, q - j0);
    SpectralField blow = extend_in_x3(lb.low(btilde, q - j0), g3);
    SpectralField bnear(g2, 3);
    for (int a = -j0; a <= j0; ++a) bnear += lb.block(btilde, q + a);
    SpectralField bn3 = extend_in_x3(bnear, g3);

    SpectralField t1 = advect(clow, bq);
    SpectralField t2 = advect(cq, blow);
    SpectralField t3 = advect(cq, bn3);
    if (l2_norm(t1) == 0.0 && l2_norm(t2) == 0.0 && l2_norm(t3) == 0.0) continue;
    out.low_c_high_b += t1;
    out.high_c_low_b += t2;
    out.remainder += t3;
    out.q_values.push_back(q);
    out.low_c_high_b_q.push_back(std::move(t1));
    out.high_c_low_b_q.push_back(std::move(t2));
    out.remainder_q.push_back(std::move(t3));
  }
  return out;
}

double annulus_leakage(const SpectralField& f, double r_lo, double r_hi) {
  const Grid& g = f.grid();
  double in = 0.0, out = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double r = std::sqrt(g.k2(i));
    double e = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) e += std::norm(f[c][i]);
    (r < r_lo || r > r_hi ? out : in) += e;
  }
  double tot = in + out;
  return tot == 0.0 ? 0.0 : out / tot;
}

std::optional<double> product_law_ratio(const SpectralField& u, const SpectralField& v, double s, double t,
                                        ProductMode mode) {
  if (s + t <= 0.0) throw std::invalid_argument("product law needs s + t > 0");
  SpectralField us = u.slice(0, 1), vs = v.slice(0, 1);
  double target;
  if (mode == ProductMode::Isotropic) {
    if (s >= 1.5 || t >= 1.5) throw std::invalid_argument("isotropic product law needs s, t < 3/2");
    require_same_grid(u.grid(), v.grid(), "product_law_ratio");
    target = s + t - 1.5;
  } else {
    if (s >= 1.0 || t >= 1.0) throw std::invalid_argument("2D x 3D product law needs s, t < 1");
    target = s + t - 1.0;
  }
  double nu = sobolev_norm(us, s), nv = sobolev_norm(vs, t);
  if (nu == 0.0 || nv == 0.0) return std::nullopt;
  SpectralField u3 = mode == ProductMode::Planar3D ? extend_in_x3(us, v.grid()) : us;

  const Grid& g = v.grid();
  auto pu = to_physical(dealias(u3)), pv = to_physical(dealias(vs));
  PhysicalField prod{g, {std::vector<double>(g.size())}};
  for (std::size_t i = 0; i < g.size(); ++i) prod.comp[0][i] = pu.comp[0][i] * pv.comp[0][i];
  SpectralField uv = dealias(to_spectral(prod));
  return sobolev_norm(uv, target) / (nu * nv);
}

}  // namespace rmhd
