#pragma once

#include <limits>
#include <stdexcept>

#include "rmhd/field.hpp"

namespace rmhd {

struct NotDivergenceFree : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

constexpr double kNoRotation = std::numeric_limits<double>::infinity();

// Orthogonal projection onto divergence-free fields, applied to every
// 3-component block of f. The k = 0 coefficient is left untouched.
SpectralField leray_project(const SpectralField& f);

// div of components [first, first+3).
Coeffs divergence(const SpectralField& f, int first = 0);

// max_k |k.f(k)| / max_k |k||f(k)| over the 3-component block at `first`;
// zero for the zero field.
double divergence_residual(const SpectralField& f, int first = 0);

// Exact solution operator of  dW/dt - nu Lap W + (1/eps) P(W x e3) = 0.
// eps = kNoRotation gives the heat semigroup. Rejects fields that are
// neither flagged nor measured divergence-free.
SpectralField coriolis_heat_propagate(const SpectralField& f, double t, double eps, double nu);

// Heat semigroup exp(nu t Lap) on every component.
SpectralField heat_propagate(const SpectralField& f, double t, double nu);

// Applies the Coriolis+heat operator to components [0,3) and heat with
// nu_b to components [3,6) of a 6-component (u, b) state.
SpectralField mhd_linear_propagate(const SpectralField& ub, double t, double eps, double nu,
                                   double nu_b);

struct PressurePair {
  Grid grid;
  Coeffs p0;
  Coeffs p1;
  double eps = 1.0;
  Coeffs total() const;  // p0 + p1 / eps
};

// Lap p0 = -sum d_i d_j (u^i u^j - b^i b^j),  Lap p1 = d_2 u^1 - d_1 u^2.
PressurePair pressure_split(const SpectralField& u, const SpectralField& b, double eps);

// Zero all coefficients outside the 2/3-rule mask.
SpectralField dealias(const SpectralField& f);

// (f.grad) g, pseudo-spectral with 2/3-rule dealiasing of inputs and output.
SpectralField advect(const SpectralField& f, const SpectralField& g);

// curl(f x g), dealiased; divergence-free by construction.
SpectralField curl_of_cross(const SpectralField& f, const SpectralField& g);

// -P div(u (x) u - b (x) b), dealiased. Pass an empty b for the pure fluid case.
SpectralField lorentz_momentum(const SpectralField& u, const SpectralField* b);

SpectralField curl(const SpectralField& f);
SpectralField gradient(const Coeffs& s, const Grid& g);
// d_axis of one coefficient array
Coeffs derivative(const Coeffs& s, const Grid& g, int axis);
// Lap^{-1} with zero mean
Coeffs inverse_laplacian(const Coeffs& s, const Grid& g);

// L2 norm over the box including the mean mode: sqrt(|box| sum |f(k)|^2).
double l2_norm(const SpectralField& f);
double l2_norm(const Coeffs& s, const Grid& g);
// Real L2 inner product over the box.
double inner(const SpectralField& f, const SpectralField& g);
// ||grad f||^2 summed over components
double gradient_norm_sq(const SpectralField& f);
// Largest coefficient-wise difference relative to the larger field norm.
double relative_l2_gap(const SpectralField& a, const SpectralField& b);

// Embed a planar field (n3 == 1) into a 3D grid, constant along x3.
SpectralField extend_in_x3(const SpectralField& planar, const Grid& g3);
// k3 = 0 plane of a 3D field as a planar field; target is the planar grid.
SpectralField restrict_to_plane(const SpectralField& f, const Grid& g2);
// Same Fourier modes on a finer grid with equal box lengths; Nyquist modes
// are dropped.
SpectralField embed_modes(const SpectralField& f, const Grid& fine);

}  // namespace rmhd
