#pragma once

#include <memory>
#include <vector>

#include "rmhd/field.hpp"

namespace rmhd {

// FFTW-backed transforms for one grid. Not thread-safe; use one instance per
// worker (transform_for() keeps a per-thread cache).
class Transform {
 public:
  explicit Transform(const Grid& g);
  ~Transform();
  Transform(const Transform&) = delete;
  Transform& operator=(const Transform&) = delete;

  const Grid& grid() const { return grid_; }

  // Coefficients to real samples (the imaginary remainder is discarded).
  void to_physical(const Coeffs& in, std::vector<double>& out);
  // Real samples to coefficients, normalized by 1/N.
  void to_spectral(const std::vector<double>& in, Coeffs& out);
  // Complex in-place variants on caller storage.
  void backward(const Coeffs& in, Coeffs& out);
  void forward(const Coeffs& in, Coeffs& out);

 private:
  struct Plans;
  Grid grid_;
  std::unique_ptr<Plans> p_;
};

Transform& transform_for(const Grid& g);

PhysicalField to_physical(const SpectralField& f);
SpectralField to_spectral(const PhysicalField& f);

}  // namespace rmhd
