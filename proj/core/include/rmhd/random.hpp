#pragma once

#include <cstdint>
#include <functional>

#include "rmhd/field.hpp"

namespace rmhd {

// Radial amplitude profile |k| -> weight applied to white noise.
using SpectrumShape = std::function<double(double)>;

// Gaussian shell centred on k0 with the given width.
SpectrumShape shell_spectrum(double k0, double width);

// Real random field with `ncomp` components: Gaussian noise filtered by the
// shape and the 2/3 mask, then scaled to the requested L2 norm. Solenoidal
// fields are Leray-projected before scaling. Deterministic in `seed`.
SpectralField random_field(const Grid& g, int ncomp, const SpectrumShape& shape, double l2, std::uint64_t seed,
                           bool solenoidal = true);

// Like random_field but with the stricter band |m_i| < n_i/4, so that
// pairwise products are alias-free without truncation.
SpectralField random_band_field(const Grid& g, int ncomp, const SpectrumShape& shape, double l2,
                                std::uint64_t seed, bool solenoidal = true);

}  // namespace rmhd
