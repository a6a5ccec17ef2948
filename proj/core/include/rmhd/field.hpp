#pragma once

#include <cstddef>
#include <vector>

#include "rmhd/grid.hpp"

namespace rmhd {

using Coeffs = std::vector<cplx>;

// Fourier-series coefficients f(x) = sum_k fhat(k) exp(i k.x), one array per
// component. Velocity-only fields have 3 components, (u, b) pairs have 6.
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(const Grid& g, int ncomp);

  const Grid& grid() const { return grid_; }
  int ncomp() const { return static_cast<int>(c_.size()); }
  std::size_t size() const { return grid_.size(); }

  Coeffs& operator[](int c) { return c_[c]; }
  const Coeffs& operator[](int c) const { return c_[c]; }

  bool divergence_free() const { return div_free_; }
  void set_divergence_free(bool v) { div_free_ = v; }

  // Components [first, first + 3) as a new field.
  SpectralField slice(int first, int count = 3) const;
  void assign_slice(int first, const SpectralField& part);

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double a);
  // this += a * o
  void axpy(double a, const SpectralField& o);
  void set_zero();

 private:
  Grid grid_;
  std::vector<Coeffs> c_;
  bool div_free_ = false;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

// Join two 3-component fields into one 6-component field.
SpectralField stack(const SpectralField& u, const SpectralField& b);

// Real-space samples, one real array per component.
struct PhysicalField {
  Grid grid;
  std::vector<std::vector<double>> comp;
};

}  // namespace rmhd
