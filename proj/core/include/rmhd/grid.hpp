#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rmhd {

using cplx = std::complex<double>;

struct GridError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Periodic box. A planar grid is stored with n[2] == 1; the third axis then
// carries only the k3 = 0 plane and all 3D operators act on it unchanged.
class Grid {
 public:
  Grid() = default;
  Grid(int n1, int n2, int n3, double l1, double l2, double l3);

  static Grid cube(int n, double l);
  static Grid planar(int n1, int n2, double l1, double l2, double l3 = 1.0);

  int n(int axis) const { return n_[axis]; }
  double length(int axis) const { return l_[axis]; }
  std::size_t size() const { return size_; }
  int dim() const { return n_[2] == 1 ? 2 : 3; }
  double volume() const { return l_[0] * l_[1] * l_[2]; }
  double spacing(int axis) const { return l_[axis] / n_[axis]; }
  double min_spacing() const;

  std::size_t index(int i1, int i2, int i3) const {
    return (static_cast<std::size_t>(i1) * n_[1] + i2) * n_[2] + i3;
  }
  std::array<int, 3> unravel(std::size_t idx) const;

  // Signed integer frequency along an axis; index n/2 maps to -n/2.
  int mode(int axis, int i) const;
  bool is_nyquist(int axis, int i) const { return n_[axis] > 1 && 2 * i == n_[axis]; }

  // Wavenumbers 2*pi*m/L. kd() zeroes the Nyquist entry and is what first
  // derivatives use; k() keeps it and feeds |k|^2.
  const std::vector<double>& k(int axis) const { return k_[axis]; }
  const std::vector<double>& kd(int axis) const { return kd_[axis]; }

  double k2(std::size_t idx) const;
  std::array<double, 3> kd_vec(std::size_t idx) const;

  // 2/3-rule mask, |m_i| < n_i/3 on every axis.
  bool keep(std::size_t idx) const { return mask_[idx] != 0; }
  const std::vector<unsigned char>& mask() const { return mask_; }

  // Radius of the largest frequency ball fully represented by the grid.
  double resolved_radius() const;
  double kmin() const;

  bool operator==(const Grid& o) const { return n_ == o.n_ && l_ == o.l_; }
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  std::array<int, 3> n_{0, 0, 0};
  std::array<double, 3> l_{0, 0, 0};
  std::size_t size_ = 0;
  std::array<std::vector<double>, 3> k_;
  std::array<std::vector<double>, 3> kd_;
  std::vector<unsigned char> mask_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace rmhd
