#include "rmhd/field.hpp"

#include <stdexcept>

namespace rmhd {

SpectralField::SpectralField(const Grid& g, int ncomp) : grid_(g), c_(ncomp, Coeffs(g.size())) {}

SpectralField SpectralField::slice(int first, int count) const {
  if (first < 0 || first + count > ncomp()) throw std::out_of_range("component slice out of range");
  SpectralField out(grid_, 0);
  out.c_.assign(c_.begin() + first, c_.begin() + first + count);
  out.div_free_ = div_free_;
  return out;
}

void SpectralField::assign_slice(int first, const SpectralField& part) {
  require_same_grid(grid_, part.grid_, "assign_slice");
  if (first < 0 || first + part.ncomp() > ncomp()) throw std::out_of_range("component slice out of range");
  for (int c = 0; c < part.ncomp(); ++c) c_[first + c] = part.c_[c];
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  axpy(1.0, o);
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  axpy(-1.0, o);
  return *this;
}

SpectralField& SpectralField::operator*=(double a) {
  for (auto& comp : c_)
    for (auto& v : comp) v *= a;
  return *this;
}

void SpectralField::axpy(double a, const SpectralField& o) {
  require_same_grid(grid_, o.grid_, "field arithmetic");
  if (o.ncomp() != ncomp()) throw std::invalid_argument("component count mismatch");
  for (int c = 0; c < ncomp(); ++c) {
    auto* d = c_[c].data();
    const auto* s = o.c_[c].data();
    const std::size_t n = c_[c].size();
    for (std::size_t i = 0; i < n; ++i) d[i] += a * s[i];
  }
  div_free_ = div_free_ && o.div_free_;
}

void SpectralField::set_zero() {
  for (auto& comp : c_) std::fill(comp.begin(), comp.end(), cplx(0.0, 0.0));
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

SpectralField stack(const SpectralField& u, const SpectralField& b) {
  require_same_grid(u.grid(), b.grid(), "stack");
  SpectralField out(u.grid(), u.ncomp() + b.ncomp());
  out.assign_slice(0, u);
  out.assign_slice(u.ncomp(), b);
  out.set_divergence_free(u.divergence_free() && b.divergence_free());
  return out;
}

}  // namespace rmhd
