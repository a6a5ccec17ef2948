#include "rmhd/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

namespace rmhd {

namespace {
// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Transform::Plans {
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::size_t n = 0;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf) fftw_free(buf);
  }
};

Transform::Transform(const Grid& g) : grid_(g), p_(std::make_unique<Plans>()) {
  p_->n = g.size();
  std::lock_guard lock(planner_mutex());
  p_->buf = fftw_alloc_complex(p_->n);
  int dims[3] = {g.n(0), g.n(1), g.n(2)};
  int rank = g.n(2) == 1 ? 2 : 3;
  // FFTW_ESTIMATE keeps plans, and therefore round-off, identical across runs.
  p_->fwd = fftw_plan_dft(rank, dims, p_->buf, p_->buf, FFTW_FORWARD, FFTW_ESTIMATE);
  p_->bwd = fftw_plan_dft(rank, dims, p_->buf, p_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Transform::~Transform() = default;

void Transform::backward(const Coeffs& in, Coeffs& out) {
  auto* b = reinterpret_cast<cplx*>(p_->buf);
  std::copy(in.begin(), in.end(), b);
  fftw_execute(p_->bwd);
  out.assign(b, b + p_->n);
}

void Transform::forward(const Coeffs& in, Coeffs& out) {
  auto* b = reinterpret_cast<cplx*>(p_->buf);
  std::copy(in.begin(), in.end(), b);
  fftw_execute(p_->fwd);
  const double s = 1.0 / static_cast<double>(p_->n);
  out.resize(p_->n);
  for (std::size_t i = 0; i < p_->n; ++i) out[i] = b[i] * s;
}

void Transform::to_physical(const Coeffs& in, std::vector<double>& out) {
  auto* b = reinterpret_cast<cplx*>(p_->buf);
  std::copy(in.begin(), in.end(), b);
  fftw_execute(p_->bwd);
  out.resize(p_->n);
  for (std::size_t i = 0; i < p_->n; ++i) out[i] = b[i].real();
}

void Transform::to_spectral(const std::vector<double>& in, Coeffs& out) {
  auto* b = reinterpret_cast<cplx*>(p_->buf);
  for (std::size_t i = 0; i < p_->n; ++i) b[i] = cplx(in[i], 0.0);
  fftw_execute(p_->fwd);
  const double s = 1.0 / static_cast<double>(p_->n);
  out.resize(p_->n);
  for (std::size_t i = 0; i < p_->n; ++i) out[i] = b[i] * s;
}

Transform& transform_for(const Grid& g) {
  using Key = std::tuple<int, int, int, double, double, double>;
  thread_local std::map<Key, std::unique_ptr<Transform>> cache;
  Key key{g.n(0), g.n(1), g.n(2), g.length(0), g.length(1), g.length(2)};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<Transform>(g)).first;
  return *it->second;
}

PhysicalField to_physical(const SpectralField& f) {
  PhysicalField out{f.grid(), std::vector<std::vector<double>>(f.ncomp())};
  auto& tr = transform_for(f.grid());
  for (int c = 0; c < f.ncomp(); ++c) tr.to_physical(f[c], out.comp[c]);
  return out;
}

SpectralField to_spectral(const PhysicalField& f) {
  SpectralField out(f.grid, static_cast<int>(f.comp.size()));
  auto& tr = transform_for(f.grid);
  for (std::size_t c = 0; c < f.comp.size(); ++c) tr.to_spectral(f.comp[c], out[static_cast<int>(c)]);
  return out;
}

}  // namespace rmhd
