#include "rmhd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rmhd {

namespace {
bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }
}  // namespace

Grid::Grid(int n1, int n2, int n3, double l1, double l2, double l3)
    : n_{n1, n2, n3}, l_{l1, l2, l3} {
  for (int a = 0; a < 3; ++a) {
    if (!power_of_two(n_[a]))
      throw GridError("grid size along axis " + std::to_string(a) + " must be a power of two, got " +
                      std::to_string(n_[a]));
    if (!(l_[a] > 0.0)) throw GridError("box length must be positive");
  }
  if (n1 == 1 || n2 == 1) throw GridError("horizontal axes need at least two points");
  size_ = static_cast<std::size_t>(n1) * n2 * n3;
  for (int a = 0; a < 3; ++a) {
    k_[a].resize(n_[a]);
    kd_[a].resize(n_[a]);
    for (int i = 0; i < n_[a]; ++i) {
      double kk = 2.0 * std::numbers::pi * mode(a, i) / l_[a];
      k_[a][i] = kk;
      kd_[a][i] = is_nyquist(a, i) ? 0.0 : kk;
    }
  }
  mask_.resize(size_);
  for (std::size_t idx = 0; idx < size_; ++idx) {
    auto [i1, i2, i3] = unravel(idx);
    bool keep = true;
    const int ii[3] = {i1, i2, i3};
    for (int a = 0; a < 3; ++a)
      if (n_[a] > 1 && 3 * std::abs(mode(a, ii[a])) >= n_[a]) keep = false;
    mask_[idx] = keep ? 1 : 0;
  }
}

Grid Grid::cube(int n, double l) { return Grid(n, n, n, l, l, l); }

Grid Grid::planar(int n1, int n2, double l1, double l2, double l3) { return Grid(n1, n2, 1, l1, l2, l3); }

double Grid::min_spacing() const {
  double h = std::min(spacing(0), spacing(1));
  if (n_[2] > 1) h = std::min(h, spacing(2));
  return h;
}

std::array<int, 3> Grid::unravel(std::size_t idx) const {
  int i3 = static_cast<int>(idx % n_[2]);
  idx /= n_[2];
  int i2 = static_cast<int>(idx % n_[1]);
  int i1 = static_cast<int>(idx / n_[1]);
  return {i1, i2, i3};
}

int Grid::mode(int axis, int i) const {
  int n = n_[axis];
  return 2 * i >= n ? i - n : i;
}

double Grid::k2(std::size_t idx) const {
  auto [i1, i2, i3] = unravel(idx);
  return k_[0][i1] * k_[0][i1] + k_[1][i2] * k_[1][i2] + k_[2][i3] * k_[2][i3];
}

std::array<double, 3> Grid::kd_vec(std::size_t idx) const {
  auto [i1, i2, i3] = unravel(idx);
  return {kd_[0][i1], kd_[1][i2], kd_[2][i3]};
}

double Grid::resolved_radius() const {
  double r = std::min(std::numbers::pi * n_[0] / l_[0], std::numbers::pi * n_[1] / l_[1]);
  if (n_[2] > 1) r = std::min(r, std::numbers::pi * n_[2] / l_[2]);
  return r;
}

double Grid::kmin() const {
  double r = std::min(2 * std::numbers::pi / l_[0], 2 * std::numbers::pi / l_[1]);
  if (n_[2] > 1) r = std::min(r, 2 * std::numbers::pi / l_[2]);
  return r;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (a != b) throw GridError(std::string("grid mismatch in ") + what);
}

}  // namespace rmhd
