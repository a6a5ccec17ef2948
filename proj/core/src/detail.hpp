#pragma once

#include <vector>

#include "rmhd/fft.hpp"
#include "rmhd/grid.hpp"

namespace rmhd::detail {

constexpr cplx I(0.0, 1.0);

// Dealiased real-space samples of one coefficient array.
inline void physical_masked(const Coeffs& in, const Grid& g, Coeffs& scratch, std::vector<double>& out) {
  scratch.resize(g.size());
  const auto& m = g.mask();
  for (std::size_t i = 0; i < g.size(); ++i) scratch[i] = m[i] ? in[i] : cplx(0.0, 0.0);
  transform_for(g).to_physical(scratch, out);
}

inline void spectral_masked(const std::vector<double>& in, const Grid& g, Coeffs& out) {
  transform_for(g).to_spectral(in, out);
  const auto& m = g.mask();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!m[i]) out[i] = 0.0;
}

}  // namespace rmhd::detail
