#include "rmhd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detail.hpp"
#include "rmhd/fft.hpp"

namespace rmhd {

namespace {

using detail::I;
using detail::physical_masked;
using detail::spectral_masked;

constexpr double kDivTol = 1e-10;

void check_blocks(const SpectralField& f) {
  if (f.ncomp() % 3 != 0) throw std::invalid_argument("vector field needs a multiple of 3 components");
}

}  // namespace

SpectralField leray_project(const SpectralField& f) {
  check_blocks(f);
  SpectralField g = f;
  const Grid& gr = f.grid();
  for (int b = 0; b < f.ncomp(); b += 3) {
    for (std::size_t i = 0; i < gr.size(); ++i) {
      auto k = gr.kd_vec(i);
      double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
      if (kk == 0.0) continue;
      cplx dot = k[0] * f[b][i] + k[1] * f[b + 1][i] + k[2] * f[b + 2][i];
      cplx s = dot / kk;
      g[b][i] -= k[0] * s;
      g[b + 1][i] -= k[1] * s;
      g[b + 2][i] -= k[2] * s;
    }
  }
  g.set_divergence_free(true);
  return g;
}

Coeffs divergence(const SpectralField& f, int first) {
  const Grid& gr = f.grid();
  Coeffs d(gr.size());
  for (std::size_t i = 0; i < gr.size(); ++i) {
    auto k = gr.kd_vec(i);
    d[i] = I * (k[0] * f[first][i] + k[1] * f[first + 1][i] + k[2] * f[first + 2][i]);
  }
  return d;
}

double divergence_residual(const SpectralField& f, int first) {
  const Grid& gr = f.grid();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < gr.size(); ++i) {
    auto k = gr.kd_vec(i);
    cplx dot = k[0] * f[first][i] + k[1] * f[first + 1][i] + k[2] * f[first + 2][i];
    double amp = std::sqrt(std::norm(f[first][i]) + std::norm(f[first + 1][i]) + std::norm(f[first + 2][i]));
    num = std::max(num, std::abs(dot));
    den = std::max(den, std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * amp);
  }
  return den == 0.0 ? 0.0 : num / den;
}

namespace {

void rotate_block(const SpectralField& in, SpectralField& out, int b, double t, double eps, double nu) {
  const Grid& gr = in.grid();
  const bool rot = std::isfinite(eps);
  for (std::size_t i = 0; i < gr.size(); ++i) {
    const double decay = nu > 0.0 ? std::exp(-nu * t * gr.k2(i)) : 1.0;
    auto k = gr.kd_vec(i);
    double kn = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
    cplx u1 = in[b][i], u2 = in[b + 1][i], u3 = in[b + 2][i];
    if (!rot || kn == 0.0 || k[2] == 0.0) {
      out[b][i] = decay * u1;
      out[b + 1][i] = decay * u2;
      out[b + 2][i] = decay * u3;
      continue;
    }
    double h1 = k[0] / kn, h2 = k[1] / kn, h3 = k[2] / kn;
    double w = h3 / eps * t;
    double c = std::cos(w), s = std::sin(w);
    // khat x u
    cplx x1 = h2 * u3 - h3 * u2;
    cplx x2 = h3 * u1 - h1 * u3;
    cplx x3 = h1 * u2 - h2 * u1;
    out[b][i] = decay * (c * u1 + s * x1);
    out[b + 1][i] = decay * (c * u2 + s * x2);
    out[b + 2][i] = decay * (c * u3 + s * x3);
  }
}

void require_div_free(const SpectralField& f, int first) {
  if (f.divergence_free()) return;
  double r = divergence_residual(f, first);
  if (r > kDivTol)
    throw NotDivergenceFree("propagator input is not divergence-free (residual " + std::to_string(r) + ")");
}

}  // namespace

SpectralField coriolis_heat_propagate(const SpectralField& f, double t, double eps, double nu) {
  if (f.ncomp() != 3) throw std::invalid_argument("coriolis_heat_propagate expects a 3-component field");
  if (t < 0.0) throw std::invalid_argument("negative propagation time");
  if (!(eps > 0.0)) throw std::invalid_argument("Rossby number must be positive");
  if (nu < 0.0) throw std::invalid_argument("negative viscosity");
  require_div_free(f, 0);
  SpectralField out(f.grid(), 3);
  rotate_block(f, out, 0, t, eps, nu);
  out.set_divergence_free(true);
  return out;
}

SpectralField heat_propagate(const SpectralField& f, double t, double nu) {
  SpectralField out = f;
  if (nu == 0.0 || t == 0.0) return out;
  const Grid& gr = f.grid();
  for (std::size_t i = 0; i < gr.size(); ++i) {
    const double decay = std::exp(-nu * t * gr.k2(i));
    for (int c = 0; c < f.ncomp(); ++c) out[c][i] *= decay;
  }
  return out;
}

SpectralField mhd_linear_propagate(const SpectralField& ub, double t, double eps, double nu, double nu_b) {
  if (ub.ncomp() != 6) throw std::invalid_argument("mhd_linear_propagate expects a 6-component state");
  require_div_free(ub, 0);
  SpectralField out(ub.grid(), 6);
  rotate_block(ub, out, 0, t, eps, nu);
  const Grid& gr = ub.grid();
  for (std::size_t i = 0; i < gr.size(); ++i) {
    const double decay = nu_b > 0.0 ? std::exp(-nu_b * t * gr.k2(i)) : 1.0;
    for (int c = 3; c < 6; ++c) out[c][i] = decay * ub[c][i];
  }
  out.set_divergence_free(ub.divergence_free());
  return out;
}

Coeffs PressurePair::total() const {
  Coeffs p(p0.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = p0[i] + p1[i] / eps;
  return p;
}

PressurePair pressure_split(const SpectralField& u, const SpectralField& b, double eps) {
  require_same_grid(u.grid(), b.grid(), "pressure_split");
  if (!(eps > 0.0)) throw std::invalid_argument("Rossby number must be positive");
  const Grid& g = u.grid();
  const std::size_t n = g.size();
  std::vector<std::vector<double>> pu(3), pb(3);
  Coeffs scratch;
  for (int c = 0; c < 3; ++c) {
    physical_masked(u[c], g, scratch, pu[c]);
    physical_masked(b[c], g, scratch, pb[c]);
  }
  PressurePair out{g, Coeffs(n), Coeffs(n), eps};
  std::vector<double> prod(n);
  Coeffs t;
  for (int a = 0; a < 3; ++a)
    for (int c = a; c < 3; ++c) {
      for (std::size_t i = 0; i < n; ++i) prod[i] = pu[a][i] * pu[c][i] - pb[a][i] * pb[c][i];
      spectral_masked(prod, g, t);
      const double w = a == c ? 1.0 : 2.0;
      for (std::size_t i = 0; i < n; ++i) {
        auto k = g.kd_vec(i);
        out.p0[i] -= w * k[a] * k[c] * t[i];
      }
    }
  for (std::size_t i = 0; i < n; ++i) {
    auto k = g.kd_vec(i);
    double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if (kk == 0.0) {
      out.p0[i] = 0.0;
      continue;
    }
    out.p0[i] /= kk;
    out.p1[i] = -I * (k[1] * u[0][i] - k[0] * u[1][i]) / kk;
  }
  return out;
}

SpectralField dealias(const SpectralField& f) {
  SpectralField out = f;
  const auto& m = f.grid().mask();
  for (int c = 0; c < f.ncomp(); ++c)
    for (std::size_t i = 0; i < f.size(); ++i)
      if (!m[i]) out[c][i] = 0.0;
  return out;
}

SpectralField advect(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f.grid(), g.grid(), "advect");
  if (f.ncomp() != 3) throw std::invalid_argument("advecting field must have 3 components");
  const Grid& gr = f.grid();
  const std::size_t n = gr.size();
  std::vector<std::vector<double>> pf(3);
  Coeffs scratch;
  for (int c = 0; c < 3; ++c) physical_masked(f[c], gr, scratch, pf[c]);
  SpectralField out(gr, g.ncomp());
  std::vector<double> acc(n), d;
  const int naxes = gr.dim();
  for (int c = 0; c < g.ncomp(); ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int a = 0; a < naxes; ++a) {
      Coeffs da = derivative(g[c], gr, a);
      physical_masked(da, gr, scratch, d);
      for (std::size_t i = 0; i < n; ++i) acc[i] += pf[a][i] * d[i];
    }
    spectral_masked(acc, gr, out[c]);
  }
  return out;
}

SpectralField curl_of_cross(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f.grid(), g.grid(), "curl_of_cross");
  const Grid& gr = f.grid();
  const std::size_t n = gr.size();
  std::vector<std::vector<double>> pf(3), pg(3);
  Coeffs scratch;
  for (int c = 0; c < 3; ++c) {
    physical_masked(f[c], gr, scratch, pf[c]);
    physical_masked(g[c], gr, scratch, pg[c]);
  }
  SpectralField cr(gr, 3);
  std::vector<double> prod(n);
  for (int c = 0; c < 3; ++c) {
    int a = (c + 1) % 3, b = (c + 2) % 3;
    for (std::size_t i = 0; i < n; ++i) prod[i] = pf[a][i] * pg[b][i] - pf[b][i] * pg[a][i];
    spectral_masked(prod, gr, cr[c]);
  }
  SpectralField out = curl(cr);
  out.set_divergence_free(true);
  return out;
}

SpectralField lorentz_momentum(const SpectralField& u, const SpectralField* b) {
  const Grid& g = u.grid();
  if (b) require_same_grid(g, b->grid(), "lorentz_momentum");
  const std::size_t n = g.size();
  std::vector<std::vector<double>> pu(3), pb;
  Coeffs scratch;
  for (int c = 0; c < 3; ++c) physical_masked(u[c], g, scratch, pu[c]);
  if (b) {
    pb.resize(3);
    for (int c = 0; c < 3; ++c) physical_masked((*b)[c], g, scratch, pb[c]);
  }
  SpectralField out(g, 3);
  std::vector<double> prod(n);
  Coeffs t;
  for (int a = 0; a < 3; ++a)
    for (int c = a; c < 3; ++c) {
      for (std::size_t i = 0; i < n; ++i) prod[i] = pu[a][i] * pu[c][i];
      if (b)
        for (std::size_t i = 0; i < n; ++i) prod[i] -= pb[a][i] * pb[c][i];
      spectral_masked(prod, g, t);
      // row a picks up d_c T_ac, row c picks up d_a T_ca
      for (std::size_t i = 0; i < n; ++i) {
        auto k = g.kd_vec(i);
        out[a][i] -= I * k[c] * t[i];
        if (c != a) out[c][i] -= I * k[a] * t[i];
      }
    }
  return leray_project(out);
}

SpectralField curl(const SpectralField& f) {
  const Grid& g = f.grid();
  SpectralField out(g, 3);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto k = g.kd_vec(i);
    out[0][i] = I * (k[1] * f[2][i] - k[2] * f[1][i]);
    out[1][i] = I * (k[2] * f[0][i] - k[0] * f[2][i]);
    out[2][i] = I * (k[0] * f[1][i] - k[1] * f[0][i]);
  }
  out.set_divergence_free(true);
  return out;
}

Coeffs derivative(const Coeffs& s, const Grid& g, int axis) {
  Coeffs out(s.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = I * g.kd_vec(i)[axis] * s[i];
  return out;
}

SpectralField gradient(const Coeffs& s, const Grid& g) {
  SpectralField out(g, 3);
  for (int a = 0; a < 3; ++a) out[a] = derivative(s, g, a);
  return out;
}

Coeffs inverse_laplacian(const Coeffs& s, const Grid& g) {
  Coeffs out(s.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto k = g.kd_vec(i);
    double kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    out[i] = kk == 0.0 ? cplx(0.0, 0.0) : -s[i] / kk;
  }
  return out;
}

double l2_norm(const Coeffs& s, const Grid& g) {
  double acc = 0.0;
  for (const auto& v : s) acc += std::norm(v);
  return std::sqrt(g.volume() * acc);
}

double l2_norm(const SpectralField& f) {
  double acc = 0.0;
  for (int c = 0; c < f.ncomp(); ++c)
    for (const auto& v : f[c]) acc += std::norm(v);
  return std::sqrt(f.grid().volume() * acc);
}

double inner(const SpectralField& f, const SpectralField& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  double acc = 0.0;
  for (int c = 0; c < f.ncomp(); ++c)
    for (std::size_t i = 0; i < f.size(); ++i) acc += (f[c][i] * std::conj(g[c][i])).real();
  return f.grid().volume() * acc;
}

double gradient_norm_sq(const SpectralField& f) {
  const Grid& g = f.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double k2 = g.k2(i);
    if (k2 == 0.0) continue;
    double a = 0.0;
    for (int c = 0; c < f.ncomp(); ++c) a += std::norm(f[c][i]);
    acc += k2 * a;
  }
  return g.volume() * acc;
}

double relative_l2_gap(const SpectralField& a, const SpectralField& b) {
  double na = l2_norm(a), nb = l2_norm(b);
  double d = l2_norm(a - b);
  double den = std::max(na, nb);
  return den == 0.0 ? d : d / den;
}

SpectralField extend_in_x3(const SpectralField& planar, const Grid& g3) {
  const Grid& g2 = planar.grid();
  if (g2.n(2) != 1 || g3.n(0) != g2.n(0) || g3.n(1) != g2.n(1) || g3.length(0) != g2.length(0) ||
      g3.length(1) != g2.length(1))
    throw GridError("extend_in_x3 needs a planar grid matching the horizontal axes");
  SpectralField out(g3, planar.ncomp());
  for (int i1 = 0; i1 < g2.n(0); ++i1)
    for (int i2 = 0; i2 < g2.n(1); ++i2)
      for (int c = 0; c < planar.ncomp(); ++c) out[c][g3.index(i1, i2, 0)] = planar[c][g2.index(i1, i2, 0)];
  out.set_divergence_free(planar.divergence_free());
  return out;
}

SpectralField restrict_to_plane(const SpectralField& f, const Grid& g2) {
  const Grid& g3 = f.grid();
  if (g2.n(2) != 1 || g3.n(0) != g2.n(0) || g3.n(1) != g2.n(1))
    throw GridError("restrict_to_plane needs a planar grid matching the horizontal axes");
  SpectralField out(g2, f.ncomp());
  for (int i1 = 0; i1 < g2.n(0); ++i1)
    for (int i2 = 0; i2 < g2.n(1); ++i2)
      for (int c = 0; c < f.ncomp(); ++c) out[c][g2.index(i1, i2, 0)] = f[c][g3.index(i1, i2, 0)];
  out.set_divergence_free(f.divergence_free());
  return out;
}

SpectralField embed_modes(const SpectralField& f, const Grid& fine) {
  const Grid& g = f.grid();
  for (int a = 0; a < 3; ++a)
    if (fine.n(a) < g.n(a) || fine.length(a) != g.length(a))
      throw GridError("embed_modes needs a finer grid over the same box");
  SpectralField out(fine, f.ncomp());
  auto target = [&](int axis, int i) {
    int m = g.mode(axis, i);
    return m < 0 ? fine.n(axis) + m : m;
  };
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto [i1, i2, i3] = g.unravel(idx);
    if (g.is_nyquist(0, i1) || g.is_nyquist(1, i2) || g.is_nyquist(2, i3)) continue;
    std::size_t j = fine.index(target(0, i1), target(1, i2), target(2, i3));
    for (int c = 0; c < f.ncomp(); ++c) out[c][j] = f[c][idx];
  }
  out.set_divergence_free(f.divergence_free());
  return out;
}

}  // namespace rmhd
