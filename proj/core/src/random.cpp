#include "rmhd/random.hpp"

#include <cmath>
#include <random>

#include "rmhd/fft.hpp"
#include "rmhd/ops.hpp"

namespace rmhd {

SpectrumShape shell_spectrum(double k0, double width) {
  return [k0, width](double k) {
    double x = (k - k0) / width;
    return std::exp(-0.5 * x * x);
  };
}

namespace {

SpectralField make(const Grid& g, int ncomp, const SpectrumShape& shape, double l2, std::uint64_t seed,
                   bool solenoidal, int band_div) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PhysicalField p{g, std::vector<std::vector<double>>(ncomp, std::vector<double>(g.size()))};
  for (auto& comp : p.comp)
    for (auto& v : comp) v = gauss(rng);
  SpectralField f = to_spectral(p);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto [i1, i2, i3] = g.unravel(i);
    const int ii[3] = {i1, i2, i3};
    bool keep = true;
    for (int a = 0; a < 3; ++a)
      if (g.n(a) > 1 && (band_div * std::abs(g.mode(a, ii[a])) >= g.n(a) || g.is_nyquist(a, ii[a]))) keep = false;
    double k2 = g.k2(i);
    double w = (keep && k2 > 0.0) ? shape(std::sqrt(k2)) : 0.0;
    for (int c = 0; c < ncomp; ++c) f[c][i] *= w;
  }
  if (solenoidal) f = leray_project(f);
  double n = l2_norm(f);
  if (n > 0.0) f *= l2 / n;
  return f;
}

}  // namespace

SpectralField random_field(const Grid& g, int ncomp, const SpectrumShape& shape, double l2, std::uint64_t seed,
                           bool solenoidal) {
  return make(g, ncomp, shape, l2, seed, solenoidal, 3);
}

SpectralField random_band_field(const Grid& g, int ncomp, const SpectrumShape& shape, double l2,
                                std::uint64_t seed, bool solenoidal) {
  return make(g, ncomp, shape, l2, seed, solenoidal, 4);
}

}  // namespace rmhd
