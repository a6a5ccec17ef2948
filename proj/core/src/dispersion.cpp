#include "rmhd/dispersion.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "rmhd/besov.hpp"
#include "rmhd/fft.hpp"
#include "rmhd/ops.hpp"

namespace rmhd {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx I(0.0, 1.0);

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// J0 and J1 together: Miller backward recurrence below x = 25, Hankel
// asymptotics above. Absolute error about 5e-13.
void bessel_j01(double x, double& j0, double& j1) {
  if (x < 25.0) {
    if (x < 1e-300) {
      j0 = 1.0;
      j1 = 0.0;
      return;
    }
    const int start = 2 * ((static_cast<int>(x) + 40) / 2);
    const double inv = 2.0 / x;
    double jp = 0.0, jc = 1e-300, norm = 0.0, a1 = 0.0;
    for (int k = start; k > 0; --k) {
      const double jm = k * inv * jc - jp;
      jp = jc;
      jc = jm;  // J_{k-1}
      if (k == 2) a1 = jc;
      if (k > 1 && (k - 1) % 2 == 0) norm += 2.0 * jc;
      if (std::abs(jc) > 1e200) {
        jc *= 1e-200;
        jp *= 1e-200;
        norm *= 1e-200;
        a1 *= 1e-200;
      }
    }
    norm += jc;
    j0 = jc / norm;
    j1 = a1 / norm;
    return;
  }
  const double y = 1.0 / (8.0 * x);
  double p0 = 1.0, q0 = 0.0, p1 = 1.0, q1 = 0.0, t0 = 1.0, t1 = 1.0;
  for (int k = 1; k <= 16; ++k) {
    const double m = (2.0 * k - 1.0) * (2.0 * k - 1.0);
    t0 *= -m * y / k;
    t1 *= (4.0 - m) * y / k;
    const double sg = (k / 2) % 2 == 0 ? 1.0 : -1.0;
    if (k % 2) {
      q0 += sg * t0;
      q1 += sg * t1;
    } else {
      p0 += sg * t0;
      p1 += sg * t1;
    }
  }
  const double c = std::cos(x - kPi / 4.0), s = std::sin(x - kPi / 4.0);
  const double f = std::sqrt(2.0 / (kPi * x));
  j0 = f * (p0 * c - q0 * s);
  j1 = f * (p1 * s + q1 * c);
}

struct Rule {
  std::vector<double> x, w;
};

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
Rule legendre_rule(int n) {
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

std::shared_ptr<const Rule> cached_rule(int n) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Rule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const Rule>(legendre_rule(n));
  return slot;
}

// Gauss rule mapped to [a, b], appended to (x, w).
void append_rule(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  auto r = cached_rule(n);
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    x.push_back(c + h * r->x[i]);
    w.push_back(h * r->w[i]);
  }
}

// Polar intervals carrying the angular support.
std::vector<std::pair<double, double>> polar_intervals(const FrequencyProfile& p) {
  if (!p.modulated) return {{-1.0, 1.0}};
  return {{-p.mu_hi, -p.mu_lo}, {p.mu_lo, p.mu_hi}};
}

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

RateExponents rate_exponents(double r) {
  if (!(r > 2.0 && r <= 6.0)) {
    std::ostringstream os;
    os << "rate exponents need r in (2, 6], got " << r;
    throw std::invalid_argument(os.str());
  }
  RateExponents e;
  e.theta = std::min(1.0, (6.0 - r) / (2.0 * (r - 2.0)));
  e.theta_prime = std::min(1.0, 3.0 / (r - 2.0));
  e.alpha = std::max(2.0, 4.0 / (5.0 * (1.0 - 2.0 / r)));
  e.beta = std::max(1.0, 2.0 / (3.0 - 5.0 / r));
  e.delta = std::max(10.0 - 3.0 * r, 5.0 / 7.0 * (6.0 - r)) / (4.0 * r);
  e.m = std::min(r - 2.0, (6.0 - r) / 7.0) / (2.0 * r);
  return e;
}

Eigenprojectors eigenprojectors(const Vec3& xi) {
  double n = norm3(xi);
  if (n == 0.0) throw std::invalid_argument("eigenprojectors undefined at xi = 0");
  Vec3 h{xi[0] / n, xi[1] / n, xi[2] / n};
  Mat3 K{};
  K[0] = {0.0, -h[2], h[1]};
  K[1] = {h[2], 0.0, -h[0]};
  K[2] = {-h[1], h[0], 0.0};
  Eigenprojectors e{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      e.leray[i][j] = (i == j ? 1.0 : 0.0) - h[i] * h[j];
      e.plus[i][j] = 0.5 * (e.leray[i][j] - I * K[i][j]);
      e.minus[i][j] = 0.5 * (e.leray[i][j] + I * K[i][j]);
    }
  return e;
}

double FrequencyProfile::radial(double rho) const { return lp_phi(rho); }

double FrequencyProfile::angular(double mu) const {
  if (!modulated) return 1.0;
  double t = (std::abs(mu) - mu_lo) / (mu_hi - mu_lo);
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return std::exp(4.0 - 1.0 / (t * (1.0 - t)));
}

CVec3 FrequencyProfile::data(const Vec3& xi) const {
  double rho = norm3(xi);
  if (rho == 0.0) return {};
  double a = amplitude(rho, xi[2] / rho) / rho;
  return {I * (-a * xi[1]), I * (a * xi[0]), cplx(0.0, 0.0)};
}

namespace {

// (2 pi)^-2 int int rho^2 f(rho, mu) dmu drho over the support
template <class F>
double shell_integral(const FrequencyProfile& p, F&& f) {
  std::vector<double> rx, rw, mx, mw;
  append_rule(200, p.r1, p.r2, rx, rw);
  for (auto [a, b] : polar_intervals(p)) append_rule(200, a, b, mx, mw);
  double s = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (std::size_t j = 0; j < mx.size(); ++j) s += rw[i] * mw[j] * rx[i] * rx[i] * f(rx[i], mx[j]);
  return s / (4.0 * kPi * kPi);
}

}  // namespace

double FrequencyProfile::l2_norm_sq(double heat) const {
  return shell_integral(*this, [&](double rho, double mu) {
    double a = amplitude(rho, mu);
    return a * a * (1.0 - mu * mu) * std::exp(-2.0 * heat * rho * rho);
  });
}

double FrequencyProfile::l1_frequency_norm() const {
  return shell_integral(*this, [&](double rho, double mu) { return amplitude(rho, mu) * std::sqrt(1.0 - mu * mu); });
}

SphericalNodes required_nodes(const FrequencyProfile& p, double t, double eps, const Vec3& x,
                              double per_oscillation) {
  const double lambda = t == 0.0 ? 0.0 : t / eps;
  const double xn = norm3(x), xh = std::hypot(x[0], x[1]);
  double mu_len = 0.0;
  for (auto [a, b] : polar_intervals(p)) mu_len += b - a;
  auto count = [&](double phase) { return static_cast<int>(std::ceil(per_oscillation * phase / (2.0 * kPi))) + 64; };
  SphericalNodes n;
  n.radial = count(xn * (p.r2 - p.r1));
  n.polar = count(lambda * mu_len + xn * p.r2 * kPi);
  n.azimuthal = count(4.0 * xh * p.r2);
  return n;
}

CVec3 semigroup_point_eval(const FrequencyProfile& p, double t, double eps, double nu, const Vec3& x,
                           std::optional<SphericalNodes> nodes) {
  if (!(eps > 0.0)) throw std::invalid_argument("Rossby number must be positive");
  SphericalNodes need = required_nodes(p, t, eps, x);
  SphericalNodes use = nodes.value_or(need);
  if (use.radial < need.radial || use.polar < need.polar || use.azimuthal < need.azimuthal) {
    std::ostringstream os;
    os << "under-resolved phase: need at least " << need.radial << " x " << need.polar << " x " << need.azimuthal
       << " nodes (radial x polar x azimuthal), got " << use.radial << " x " << use.polar << " x " << use.azimuthal;
    throw UnderResolved(os.str(), need);
  }
  std::vector<double> rx, rw, mx, mw;
  append_rule(use.radial, p.r1, p.r2, rx, rw);
  auto iv = polar_intervals(p);
  int per = (use.polar + static_cast<int>(iv.size()) - 1) / static_cast<int>(iv.size());
  for (auto [a, b] : iv) append_rule(per, a, b, mx, mw);
  const double lambda = t == 0.0 ? 0.0 : t / eps;
  const double dphi = 2.0 * kPi / use.azimuthal;

  CVec3 acc{};
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double rho = rx[i];
    const double heat = std::exp(-nu * t * rho * rho);
    for (std::size_t j = 0; j < mx.size(); ++j) {
      const double mu = mx[j];
      if (p.amplitude(rho, mu) == 0.0) continue;
      const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      const cplx ep = std::exp(I * (lambda * mu)), em = std::conj(ep);
      const double wij = rw[i] * mw[j] * rho * rho * dphi * heat;
      for (int l = 0; l < use.azimuthal; ++l) {
        const double ph = l * dphi;
        Vec3 xi{rho * s * std::cos(ph), rho * s * std::sin(ph), rho * mu};
        CVec3 v0 = p.data(xi);
        auto P = eigenprojectors(xi);
        const cplx wave = std::exp(I * (x[0] * xi[0] + x[1] * xi[1] + x[2] * xi[2])) * wij;
        for (int a = 0; a < 3; ++a) {
          cplx sp = 0.0, sm = 0.0;
          for (int b = 0; b < 3; ++b) {
            sp += P.plus[a][b] * v0[b];
            sm += P.minus[a][b] * v0[b];
          }
          acc[a] += wave * (ep * sp + em * sm);
        }
      }
    }
  }
  const double norm = std::pow(2.0 * kPi, -3.0);
  for (auto& a : acc) a *= norm;
  return acc;
}

ToroidalSample::ToroidalSample(const FrequencyProfile& p, double lambda, double heat, const SamplerOptions& opt)
    : lambda_(lambda), heat_(heat), opt_(opt) {
  if (!(lambda >= 0.0) || !(heat >= 0.0)) throw std::invalid_argument("sampler needs lambda, heat >= 0");
  const double xmax = 2.0 * lambda / p.r1 + opt.margin;
  const double reach = lambda / p.r1;
  const int nk = static_cast<int>(std::ceil(opt.per_oscillation * (xmax + reach) * p.r2 / (2.0 * kPi))) + 40;
  std::vector<double> wk;
  append_rule(nk, 0.0, p.r2, k_, wk);
  append_rule(nk, 0.0, p.r2, q_, wq_);
  const int nr = static_cast<int>(std::floor(xmax / opt.dx)) + 1;
  for (int i = 0; i < nr; ++i) {
    R_.push_back(i * opt.dx);
    z_.push_back(i * opt.dx);
  }
  const std::size_t K = k_.size(), Q = q_.size(), NR = R_.size(), NZ = z_.size();

  // Coefficients of u_R (sin, J1, cos qz), u_psi (cos, J1, cos qz), u_z (sin, J0, sin qz).
  for (auto& c : coef_) c.assign(K * Q, 0.0);
  const double pre = 2.0 / (4.0 * kPi * kPi);  // half-range doubling times (2 pi)^-2
  double total = 0.0;
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < Q; ++b) {
      const double k = k_[a], q = q_[b], rho = std::hypot(k, q);
      const double g = p.amplitude(rho, q / rho) * std::exp(-heat * rho * rho);
      if (g == 0.0) continue;
      const double w = wk[a] * wq_[b] * k * g;
      const double ph = lambda * q / rho;
      const double c = std::cos(ph), s = std::sin(ph);
      coef_[0][a * Q + b] = pre * w * s * q * k / (rho * rho);
      coef_[1][a * Q + b] = -pre * w * c * k / rho;
      coef_[2][a * Q + b] = -pre * w * s * k * k / (rho * rho);
      total += wk[a] * wq_[b] * k * g * g * k * k / (rho * rho);
    }
  l2_total_sq_ = 2.0 * total / (4.0 * kPi * kPi);

  RowMat J1(NR, K), J0(NR, K);
  for (std::size_t i = 0; i < NR; ++i)
    for (std::size_t a = 0; a < K; ++a) bessel_j01(k_[a] * R_[i], J0(i, a), J1(i, a));
  RowMat trig(Q, NZ);
  mag2_.assign(NR * NZ, 0.0);
  column_sq_.assign(NR, 0.0);
  Eigen::Map<RowMat> mag(mag2_.data(), NR, NZ);
  for (int comp = 0; comp < 3; ++comp) {
    if (comp != 1)
      for (std::size_t b = 0; b < Q; ++b)
        for (std::size_t j = 0; j < NZ; ++j) trig(b, j) = comp == 2 ? std::sin(q_[b] * z_[j]) : std::cos(q_[b] * z_[j]);
    Eigen::Map<const RowMat> C(coef_[comp].data(), K, Q);
    RowMat A = (comp == 2 ? J0 : J1) * C;
    for (std::size_t i = 0; i < NR; ++i) {
      double s = 0.0;
      for (std::size_t b = 0; b < Q; ++b) s += A(i, b) * A(i, b) / wq_[b];
      column_sq_[i] += kPi * s;
    }
    RowMat U = A * trig;
    mag.array() += U.array().square();
  }
  for (std::size_t i = 0; i < mag2_.size(); ++i)
    if (mag2_[i] > grid_max_) {
      grid_max_ = mag2_[i];
      argmax_ = i;
    }
  grid_max_ = std::sqrt(grid_max_);
}

Vec3 ToroidalSample::point(double R, double z) const {
  const std::size_t K = k_.size(), Q = q_.size();
  std::vector<double> cz(Q), sz(Q);
  for (std::size_t b = 0; b < Q; ++b) {
    cz[b] = std::cos(q_[b] * z);
    sz[b] = std::sin(q_[b] * z);
  }
  Vec3 u{0.0, 0.0, 0.0};
  for (std::size_t a = 0; a < K; ++a) {
    const double* c0 = &coef_[0][a * Q];
    const double* c1 = &coef_[1][a * Q];
    const double* c2 = &coef_[2][a * Q];
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t b = 0; b < Q; ++b) {
      s0 += c0[b] * cz[b];
      s1 += c1[b] * cz[b];
      s2 += c2[b] * sz[b];
    }
    double j0, j1;
    bessel_j01(k_[a] * R, j0, j1);
    u[0] += j1 * s0;
    u[1] += j1 * s1;
    u[2] += j0 * s2;
  }
  return u;
}

namespace {

// int_0^inf 2 pi R m(R) dR for m even in R on the grid R_i = i h: trapezoid
// plus the Euler-Maclaurin terms at R = 0.
double radial_integral(const std::vector<double>& m, double h) {
  double s = 0.0;
  for (std::size_t i = 1; i < m.size(); ++i) s += h * (i * h) * m[i];
  if (m.size() > 1) s += h * h * m[0] / 12.0 - h * h * (m[1] - m[0]) / 120.0;
  return 2.0 * kPi * s;
}

// Compass search for a local maximum of f starting from x with step h.
template <class F>
double compass_max(F&& f, std::vector<double> x, double h, double h_min) {
  double best = f(x);
  while (h > h_min) {
    bool moved = false;
    for (std::size_t d = 0; d < x.size() && !moved; ++d)
      for (double dir : {1.0, -1.0}) {
        auto y = x;
        y[d] = std::max(0.0, y[d] + dir * h);
        double v = f(y);
        if (v > best) {
          best = v;
          x = y;
          moved = true;
          break;
        }
      }
    if (!moved) h *= 0.5;
  }
  return best;
}

}  // namespace

double ToroidalSample::lebesgue(double r) const {
  if (!(r >= 2.0)) throw std::invalid_argument("sampler norms need r >= 2");
  const std::size_t NZ = z_.size();
  if (std::isinf(r)) {
    if (!opt_.refine_max || grid_max_ == 0.0) return grid_max_;
    auto f = [&](const std::vector<double>& x) {
      auto u = point(x[0], x[1]);
      return u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    };
    double best = compass_max(f, {R_[argmax_ / NZ], z_[argmax_ % NZ]}, 0.5 * opt_.dx, 1e-4 * opt_.dx);
    return std::max(grid_max_, std::sqrt(best));
  }
  std::vector<double> m(R_.size(), 0.0);
  for (std::size_t i = 0; i < R_.size(); ++i)
    for (std::size_t j = 0; j < NZ; ++j) m[i] += opt_.dx * (j == 0 ? 1.0 : 2.0) * std::pow(mag2_[i * NZ + j], 0.5 * r);
  return std::pow(radial_integral(m, opt_.dx), 1.0 / r);
}

double ToroidalSample::anisotropic(double m) const {
  if (!(m >= 2.0)) throw std::invalid_argument("anisotropic norms need m >= 2");
  if (std::isinf(m)) {
    auto it = std::max_element(column_sq_.begin(), column_sq_.end());
    double best = *it;
    if (opt_.refine_max && best > 0.0) {
      const std::size_t K = k_.size(), Q = q_.size();
      auto f = [&](const std::vector<double>& x) {
        Eigen::RowVectorXd j1(K), j0(K);
        for (std::size_t a = 0; a < K; ++a) bessel_j01(k_[a] * x[0], j0[a], j1[a]);
        const Eigen::Index k = static_cast<Eigen::Index>(K), q = static_cast<Eigen::Index>(Q);
        Eigen::RowVectorXd a0 = j1 * Eigen::Map<const RowMat>(coef_[0].data(), k, q);
        Eigen::RowVectorXd a1 = j1 * Eigen::Map<const RowMat>(coef_[1].data(), k, q);
        Eigen::RowVectorXd a2 = j0 * Eigen::Map<const RowMat>(coef_[2].data(), k, q);
        double s = 0.0;
        for (std::size_t b = 0; b < Q; ++b) s += (a0[b] * a0[b] + a1[b] * a1[b] + a2[b] * a2[b]) / wq_[b];
        return kPi * s;
      };
      double R0 = R_[static_cast<std::size_t>(it - column_sq_.begin())];
      best = std::max(best, compass_max(f, {R0}, 0.5 * opt_.dx, 1e-4 * opt_.dx));
    }
    return std::sqrt(best);
  }
  std::vector<double> f(R_.size());
  for (std::size_t i = 0; i < R_.size(); ++i) f[i] = std::pow(column_sq_[i], 0.5 * m);
  return std::pow(radial_integral(f, opt_.dx), 1.0 / m);
}

double ToroidalSample::tail(double index, bool anisotropic) const {
  const std::size_t NZ = z_.size();
  if (!anisotropic && index == 2.0) {
    double grid = lebesgue(2.0);
    return std::sqrt(std::max(0.0, l2_total_sq_ - grid * grid));
  }
  const double edge = 0.9 * R_.back();
  double m = 0.0;
  for (std::size_t i = 0; i < R_.size(); ++i) {
    if (anisotropic) {
      if (R_[i] > edge) m = std::max(m, std::sqrt(column_sq_[i]));
      continue;
    }
    for (std::size_t j = 0; j < NZ; ++j)
      if (R_[i] > edge || z_[j] > edge) m = std::max(m, std::sqrt(mag2_[i * NZ + j]));
  }
  return m;
}

std::string norm_type_name(DispersionNorm k) { return k == DispersionNorm::Lebesgue ? "lebesgue" : "anisotropic"; }

double predicted_exponent(const NormRequest& n) {
  double f = 1.0 - 2.0 / n.index;
  return n.kind == DispersionNorm::Lebesgue ? 0.5 * f : 0.25 * f;
}

double time_exponent(const NormRequest& n) {
  double f = 1.0 - 2.0 / n.index;
  if (f <= 0.0) return std::numeric_limits<double>::infinity();
  return (n.kind == DispersionNorm::Lebesgue ? 2.0 : 4.0) / f;
}

double default_tolerance(const NormRequest& n) {
  if (n.index == 2.0) return 0.02;
  return n.kind == DispersionNorm::Lebesgue ? 0.1 : 0.07;
}

LeastSquares fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LeastSquares f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - f.intercept - f.slope * x[i];
    ssr += e * e;
  }
  // A flat line fitted exactly counts as a perfect fit.
  f.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return f;
}

namespace {

struct Snapshot {
  std::vector<double> value, tail;
  int nodes = 0;
};

Snapshot snapshot(const FrequencyProfile& p, double lambda, double heat, const std::vector<NormRequest>& norms,
                  const SamplerOptions& opt) {
  ToroidalSample s(p, lambda, heat, opt);
  Snapshot out;
  for (const auto& n : norms) {
    bool aniso = n.kind == DispersionNorm::Anisotropic;
    out.value.push_back(aniso ? s.anisotropic(n.index) : s.lebesgue(n.index));
    out.tail.push_back(s.tail(n.index, aniso));
  }
  out.nodes = s.nodes();
  return out;
}

// L^p over [0, T] of a function known at t = eps * lambda_i; lambdas start at 0.
double time_norm(const std::vector<double>& lam, const std::vector<double>& f, double eps, double p) {
  if (std::isinf(p)) return *std::max_element(f.begin(), f.end());
  double s = 0.5 * lam[1] * (std::pow(f[0], p) + std::pow(f[1], p));
  for (std::size_t i = 2; i < lam.size(); ++i) {
    double h = std::log(lam[i] / lam[i - 1]);
    s += 0.5 * h * (std::pow(f[i - 1], p) * lam[i - 1] + std::pow(f[i], p) * lam[i]);
  }
  return std::pow(eps * s, 1.0 / p);
}

std::vector<double> lambda_nodes(double lambda_min, double lambda_max, int per_octave, const std::vector<double>& extra) {
  std::vector<double> lam{0.0};
  if (lambda_max > lambda_min) {
    int n = static_cast<int>(std::ceil(per_octave * std::log2(lambda_max / lambda_min)));
    for (int i = 0; i <= n; ++i) lam.push_back(lambda_min * std::pow(lambda_max / lambda_min, double(i) / n));
  } else {
    lam.push_back(lambda_max);
  }
  for (double e : extra) lam.push_back(e);
  std::sort(lam.begin(), lam.end());
  std::vector<double> out;
  for (double l : lam)
    if (out.empty() || l - out.back() > 1e-9 * std::max(1.0, l)) out.push_back(l);
  return out;
}

}  // namespace

std::vector<DecayFit> measure_decay_exponents(const FrequencyProfile& p, double T, const std::vector<double>& eps_list,
                                              const std::vector<NormRequest>& norms, const DecayOptions& opt) {
  if (eps_list.size() < 4) throw InvalidDecaySetup("decay fit needs at least 4 values of eps");
  auto [lo, hi] = std::minmax_element(eps_list.begin(), eps_list.end());
  if (!(*lo > 0.0)) throw InvalidDecaySetup("eps values must be positive");
  if (*hi / *lo < 10.0 * (1.0 - 1e-12)) throw InvalidDecaySetup("eps values must span at least one decade");
  if (!(T > 0.0)) throw InvalidDecaySetup("fit time must be positive");
  if (opt.nu * T * p.r2 * p.r2 > 1.0) {
    std::ostringstream os;
    os << "heat factor dominates: nu T r2^2 = " << opt.nu * T * p.r2 * p.r2 << " > 1";
    throw InvalidDecaySetup(os.str());
  }
  if (norms.empty()) throw InvalidDecaySetup("no norms requested");
  for (const auto& n : norms)
    if (!(n.index >= 2.0)) throw InvalidDecaySetup("norm index must be at least 2");

  std::vector<double> eps(eps_list);
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const std::size_t N = norms.size();

  std::vector<DecayFit> fits(N);
  for (std::size_t k = 0; k < N; ++k) {
    fits[k].norm = norms[k];
    fits[k].predicted = predicted_exponent(norms[k]);
    fits[k].tolerance = opt.tolerance >= 0.0 ? opt.tolerance : default_tolerance(norms[k]);
  }

  auto series = [&](double e_for_heat, double lam_max, const std::vector<double>& extra) {
    auto lam = lambda_nodes(opt.lambda_min, lam_max, opt.nodes_per_octave, extra);
    std::vector<Snapshot> snaps;
    for (double l : lam) snaps.push_back(snapshot(p, l, opt.nu * e_for_heat * l, norms, opt.sampler));
    return std::make_pair(lam, snaps);
  };
  auto add_rows = [&](double e, const std::vector<double>& lam, const std::vector<Snapshot>& snaps) {
    for (std::size_t k = 0; k < N; ++k) {
      std::vector<double> l, v, t;
      int nodes = 0;
      for (std::size_t i = 0; i < lam.size(); ++i) {
        if (lam[i] > T / e * (1.0 + 1e-12)) break;
        l.push_back(lam[i]);
        v.push_back(snaps[i].value[k]);
        t.push_back(snaps[i].tail[k]);
        nodes = snaps[i].nodes;
      }
      const double pt = time_exponent(norms[k]);
      fits[k].rows.push_back(DecayRow{e, T, time_norm(l, v, e, pt), time_norm(l, t, e, pt), nodes});
    }
  };

  if (opt.nu == 0.0) {
    std::vector<double> ends;
    for (double e : eps) ends.push_back(T / e);
    auto [lam, snaps] = series(0.0, T / eps.back(), ends);
    for (double e : eps) add_rows(e, lam, snaps);
  } else {
    for (double e : eps) {
      auto [lam, snaps] = series(e, T / e, {T / e});
      add_rows(e, lam, snaps);
    }
  }

  std::vector<double> change(N, 0.0);
  if (opt.check_convergence) {
    SamplerOptions fine = opt.sampler;
    fine.per_oscillation *= 2.0;
    for (double e : {eps.back(), eps.front()}) {
      const double l = T / e, heat = opt.nu * e * l;
      auto a = snapshot(p, l, heat, norms, opt.sampler);
      auto b = snapshot(p, l, heat, norms, fine);
      for (std::size_t k = 0; k < N; ++k)
        change[k] = std::max(change[k], std::abs(a.value[k] - b.value[k]) /
                                            std::max(std::abs(b.value[k]), std::numeric_limits<double>::min()));
    }
  }

  const std::size_t first = (opt.drop_largest_eps && eps.size() >= 5) ? 1 : 0;
  for (std::size_t k = 0; k < N; ++k) {
    auto& fit = fits[k];
    std::vector<double> x, y;
    for (std::size_t i = first; i < fit.rows.size(); ++i) {
      x.push_back(std::log(fit.rows[i].eps));
      y.push_back(std::log(fit.rows[i].value));
    }
    auto ls = fit_line(x, y);
    fit.slope = ls.slope;
    fit.r_squared = ls.r_squared;
    fit.convergence_change = change[k];
    bool converged = !opt.check_convergence || change[k] < opt.convergence_tol;
    // a flat series has no meaningful R^2
    bool fit_ok = fit.predicted == 0.0 || fit.r_squared >= opt.min_r_squared;
    if (!converged || !fit_ok)
      fit.verdict = "INCONCLUSIVE";
    else
      fit.verdict = std::abs(fit.slope - fit.predicted) <= fit.tolerance ? "PASS" : "FAIL";
  }
  return fits;
}

DecayFit measure_decay_exponent(const FrequencyProfile& p, double T, const std::vector<double>& eps_list,
                                const NormRequest& norm, const DecayOptions& opt) {
  return measure_decay_exponents(p, T, eps_list, {norm}, opt).front();
}

SpectralField sample_profile(const FrequencyProfile& p, const Grid& g) {
  if (g.dim() != 3) throw std::invalid_argument("profile sampling needs a 3D grid");
  if (p.r2 > g.resolved_radius())
    throw std::invalid_argument("grid does not resolve the frequency annulus");
  SpectralField f(g, 3);
  const double vol = g.volume();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.keep(i)) continue;  // Nyquist modes carry kd = 0
    auto k = g.kd_vec(i);
    auto v = p.data({k[0], k[1], k[2]});
    for (int c = 0; c < 3; ++c) f[c][i] = v[c] / vol;
  }
  f.set_divergence_free(true);
  return f;
}

double refined_sup(const SpectralField& f) {
  const Grid& g = f.grid();
  auto phys = to_physical(f);
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double m = 0.0;
    for (int c = 0; c < 3; ++c) m += phys.comp[c][i] * phys.comp[c][i];
    if (m > best) {
      best = m;
      arg = i;
    }
  }
  if (best == 0.0) return 0.0;
  struct Mode {
    Vec3 k;
    CVec3 a;
  };
  std::vector<Mode> modes;
  const auto& k1 = g.k(0);
  const auto& k2 = g.k(1);
  const auto& k3 = g.k(2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f[0][i] == 0.0 && f[1][i] == 0.0 && f[2][i] == 0.0) continue;
    auto u = g.unravel(i);
    modes.push_back({{k1[u[0]], k2[u[1]], k3[u[2]]}, {f[0][i], f[1][i], f[2][i]}});
  }
  auto value = [&](const std::vector<double>& x) {
    CVec3 s{};
    for (const auto& m : modes) {
      cplx e = std::exp(I * (m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2]));
      for (int c = 0; c < 3; ++c) s[c] += m.a[c] * e;
    }
    return std::norm(s[0].real()) + std::norm(s[1].real()) + std::norm(s[2].real());
  };
  auto u = g.unravel(arg);
  std::vector<double> x0{u[0] * g.spacing(0), u[1] * g.spacing(1), u[2] * g.spacing(2)};
  // compass_max clamps at zero; shift into the positive octant by one box.
  for (int a = 0; a < 3; ++a) x0[a] += g.length(a);
  return std::sqrt(std::max(best, compass_max(value, x0, 0.5 * g.min_spacing(), 1e-4 * g.min_spacing())));
}

BoxComparison box_consistency(const FrequencyProfile& p, double lambda, double eps, const Grid& g) {
  auto f = sample_profile(p, g);
  auto evolved = coriolis_heat_propagate(f, lambda * eps, eps, 0.0);
  BoxComparison c;
  c.box_sup = refined_sup(evolved);
  c.oracle_sup = ToroidalSample(p, lambda, 0.0).lebesgue(kInf);
  c.relative_gap = std::abs(c.box_sup - c.oracle_sup) / c.oracle_sup;
  return c;
}

}  // namespace rmhd
