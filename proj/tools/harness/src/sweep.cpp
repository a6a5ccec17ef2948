#include <atomic>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <thread>

#include "rmhd/besov.hpp"
#include "rmhd/checkpoint.hpp"
#include "rmhd/dispersion.hpp"
#include "rmhd/fft.hpp"
#include "rmhd/harness/experiments.hpp"
#include "rmhd/harness/io.hpp"
#include "rmhd/limit.hpp"

namespace rmhd::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kVanishing = 1e-8;
constexpr double kCalibrationMargin = 1.25;
constexpr int kCflEvery = 10;

// L^r of the pointwise magnitude over the cell [L/4, 3L/4)^3.
double central_lebesgue(const SpectralField& f, double r) {
  const Grid& g = f.grid();
  PhysicalField p = to_physical(f);
  const int n1 = g.n(0), n2 = g.n(1), n3 = g.n(2);
  auto lo = [](int n) { return n == 1 ? 0 : n / 4; };
  auto hi = [](int n) { return n == 1 ? 1 : 3 * n / 4; };
  const double dv = g.spacing(0) * g.spacing(1) * g.spacing(2);
  double acc = 0.0;
  for (int i = lo(n1); i < hi(n1); ++i)
    for (int j = lo(n2); j < hi(n2); ++j)
      for (int k = lo(n3); k < hi(n3); ++k) {
        std::size_t idx = g.index(i, j, k);
        double m2 = 0.0;
        for (const auto& comp : p.comp) m2 += comp[idx] * comp[idx];
        if (std::isinf(r))
          acc = std::max(acc, std::sqrt(m2));
        else
          acc += std::pow(m2, 0.5 * r) * dv;
      }
  return std::isinf(r) ? acc : std::pow(acc, 1.0 / r);
}

double space_norm(const SpectralField& f, double r) { return r == 2.0 ? l2_norm(f) : lebesgue_norm(f, r); }

// Differences at roundoff level have a flat spectrum; the resolution check is
// meaningless for them.
NormValue requested_norm(const SpectralField& f, const NormSpec& n, double scale) {
  if (n.space == "besov") return besov_norm(f, n.s, n.p, n.r, l2_norm(f) <= 1e-12 * scale ? 1.0 : 0.1);
  if (n.space == "sobolev") return {sobolev_norm(f, n.s), 0.0};
  if (n.space == "lebesgue") return {lebesgue_norm(f, n.p), 0.0};
  return {anisotropic_norm(f, n.p, n.r), 0.0};
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

double time_l2_upto(const std::vector<double>& t, const std::vector<double>& y, double horizon) {
  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < t.size() && t[i] <= horizon + 1e-12; ++i) {
    ts.push_back(t[i]);
    ys.push_back(y[i]);
  }
  return ts.size() < 2 ? 0.0 : time_lebesgue_norm(ts, ys, 2.0);
}

RecipeParams recipe_for(const RunConfig& c, std::uint64_t seed) {
  RecipeParams p;
  p.recipe = c.recipe;
  p.n = c.grid_n;
  p.box = c.grid_box;
  p.k0 = c.k0;
  p.planar_u_amp = c.planar_u_amp;
  p.planar_b_amp = c.planar_b_amp;
  p.bulk_v_amp = c.bulk_v_amp;
  p.bulk_c_amp = c.bulk_c_amp;
  p.seed = seed;
  return p;
}

}  // namespace

MemberResult run_member(const RunConfig& c, double eps, std::uint64_t seed) {
  MemberResult res;
  res.eps = eps;
  SpectralField last_ub;
  double last_t = 0.0;
  try {
    InitialData d = make_initial_data(recipe_for(c, seed));
    d.gamma = c.gamma;
    d.delta = c.delta;
    d.strong_scaling = c.strong_scaling;
    d.C0 = c.C0;
    d.K0 = c.K0;
    MhdState s0 = assemble_ill_prepared(d, eps, c.nu, c.nu_prime);
    const Grid g3 = s0.u.grid();
    const Grid g2 = d.planar_u0.grid();

    SpectralField ub = stack(s0.u, s0.b);
    SpectralField lim = stack(d.planar_u0, d.planar_b0);
    SpectralField cfield = s0.b - extend_in_x3(d.planar_b0, g3);
    SpectralField w = s0.u - extend_in_x3(d.planar_u0, g3);
    cfield.set_divergence_free(true);
    w.set_divergence_free(true);
    res.v0_sq = std::pow(l2_norm(w), 2);

    const double dt = c.dt;
    const int steps = static_cast<int>(std::llround(c.T / dt));
    if (double bound = cfl_bound(s0.u, &s0.b); dt > bound) throw CflViolation(dt, bound);

    MhdStepper full(g3, eps, c.nu, c.nu_prime, dt);
    PlanarMhdStepper planar(g2, c.nu, c.nu_prime, dt);
    TransportStepper transport(g3, c.nu_prime, dt);
    WaveStepper wave(g3, eps, c.nu, dt);

    std::vector<double> ts, u_lr, b_loc, full_sup;
    std::vector<std::vector<double>> req_u(c.norms.size()), req_b(c.norms.size());
    std::vector<double> req_share(2 * c.norms.size(), 0.0);
    std::vector<double> e_t, e_sq, e_grad;
    double sup_sq = 0.0;

    auto differences = [&](SpectralField& du, SpectralField& db) {
      du = ub.slice(0) - extend_in_x3(lim.slice(0), g3);
      db = ub.slice(3) - extend_in_x3(lim.slice(3), g3) - cfield;
    };
    auto observe = [&](int k, double t) {
      SpectralField du, db;
      differences(du, db);
      double sq = std::pow(l2_norm(du), 2) + std::pow(l2_norm(db), 2);
      sup_sq = std::max(sup_sq, sq);
      e_t.push_back(t);
      e_sq.push_back(sq);
      e_grad.push_back(c.nu * gradient_norm_sq(du) + c.nu_prime * gradient_norm_sq(db));
      if (k % c.sample_every != 0 && k != steps) return;
      if (!all_finite(ub)) throw Diverged("non-finite state", t);
      ts.push_back(t);
      u_lr.push_back(space_norm(du, c.sweep_r));
      b_loc.push_back(central_lebesgue(db, c.sweep_r));
      if (c.strong_scaling) full_sup.push_back(lebesgue_norm(stack(du, db), kInf));
      for (std::size_t i = 0; i < c.norms.size(); ++i) {
        auto nu_ = requested_norm(du, c.norms[i], l2_norm(ub.slice(0)));
        auto nb_ = requested_norm(db, c.norms[i], l2_norm(ub.slice(3)));
        req_u[i].push_back(nu_.value);
        req_b[i].push_back(nb_.value);
        req_share[2 * i] = std::max(req_share[2 * i], nu_.truncation_share);
        req_share[2 * i + 1] = std::max(req_share[2 * i + 1], nb_.truncation_share);
      }
      MhdState st{ub.slice(0), ub.slice(3), eps, c.nu, c.nu_prime, t};
      res.index.push_back(mhd_index(st));
    };

    last_ub = ub;
    observe(0, 0.0);
    SpectralField f_now = wave_forcing(lim.slice(3), cfield);
    double t = 0.0;
    for (int k = 1; k <= steps; ++k) {
      SpectralField ub_next = full.step(ub, t);
      SpectralField lim_next = planar.step(lim, t);
      SpectralField c_next = transport.step(cfield, t, lim, lim_next);
      SpectralField f_next = wave_forcing(lim_next.slice(3), c_next);
      w = wave.step(w, f_now, f_next);
      ub = std::move(ub_next);
      lim = std::move(lim_next);
      cfield = std::move(c_next);
      f_now = std::move(f_next);
      t = k * dt;
      if (k % kCflEvery == 0 || k == steps) {
        if (!all_finite(ub) || !all_finite(lim)) throw Diverged("non-finite state", t);
        SpectralField u = ub.slice(0), b = ub.slice(3);
        if (double bound = cfl_bound(u, &b); dt > bound) throw CflViolation(dt, bound);
        last_ub = ub;
        last_t = t;
      }
      observe(k, t);
    }

    res.u_diff = time_lebesgue_norm(ts, u_lr, 2.0);
    res.b_diff = time_lebesgue_norm(ts, b_loc, 2.0);
    res.u_diff_half = time_l2_upto(ts, u_lr, 0.5 * c.T);
    res.b_diff_half = time_l2_upto(ts, b_loc, 0.5 * c.T);
    res.d_energy = std::sqrt(sup_sq + trapezoid(e_t, e_grad));
    if (c.strong_scaling) res.full_diff_sup = time_lebesgue_norm(ts, full_sup, 2.0);
    for (std::size_t i = 0; i < c.norms.size(); ++i) {
      res.norms.push_back({"u_diff", c.norms[i], time_lebesgue_norm(ts, req_u[i], c.sweep_time_exponent),
                           req_share[2 * i]});
      res.norms.push_back({"b_diff", c.norms[i], time_lebesgue_norm(ts, req_b[i], c.sweep_time_exponent),
                           req_share[2 * i + 1]});
    }

    BudgetInputs in;
    in.t = t;
    in.u = ub.slice(0);
    in.b = ub.slice(3);
    in.u_tilde = lim.slice(0);
    in.b_tilde = lim.slice(3);
    in.c = cfield;
    in.w = w;
    TermBudget budget = perturbation_budget(in);
    for (std::size_t i = 0; i < budget.names.size(); ++i)
      for (int which = 0; which < 2; ++which)
        res.budget.push_back({budget.names[i], kBudgetIndices[which], budget.norms[i][which]});
    res.f4 = budget.norm("F4", 0);
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
    res.last_valid = std::move(last_ub);
    res.last_valid_t = last_t;
  }
  return res;
}

bool strictly_decreasing(const std::vector<double>& values) {
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] < values[i - 1])) return false;
  return values.size() >= 2;
}

double fitted_slope(const std::vector<double>& eps, const std::vector<double>& values, bool& dropped) {
  dropped = eps.size() >= 5;
  std::vector<double> x, y;
  for (std::size_t i = dropped ? 1 : 0; i < eps.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) return kNaN;
    x.push_back(std::log(eps[i]));
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 2) return kNaN;
  return fit_line(x, y).slope;
}

namespace {

std::vector<MemberResult> run_members(const RunConfig& c, std::uint64_t seed, int jobs, const Logger& log) {
  const std::size_t m = c.eps_list.size();
  std::vector<MemberResult> out(m);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < m;) out[i] = run_member(c, c.eps_list[i], seed);
  };
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(m)));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (log)
    for (const auto& r : out)
      log("seed " + std::to_string(seed) + " eps " + format_number(r.eps) + ": " + (r.ok ? "ok" : "FAILED " + r.error));
  return out;
}

std::string trend_verdict(const std::vector<double>& v, bool all_ok) {
  if (!all_ok) return kFail;
  bool vanishing = true;
  for (double x : v) vanishing = vanishing && x <= kVanishing;
  if (vanishing) return kPass;
  return strictly_decreasing(v) ? kTrend : kFail;
}

}  // namespace

SweepReport run_sweep(const RunConfig& c, int jobs, const Logger& log) {
  SweepReport rep;
  rep.run_hash = run_hash(c);

  if (c.sweep_D0 > 0) {
    rep.D0 = c.sweep_D0;
    rep.D0_source = "frozen";
  } else {
    auto cal = run_members(c, c.calibration_seed, jobs, log);
    double worst = 0.0;
    bool ok = true;
    for (const auto& m : cal) {
      ok = ok && m.ok;
      double ratio = m.ok ? m.d_energy / (m.v0_sq + 1.0) : kNaN;
      rep.calibration_ratios.push_back(ratio);
      if (m.ok) worst = std::max(worst, ratio);
    }
    rep.D0 = ok ? kCalibrationMargin * worst : 0.0;
    rep.D0_source = ok ? "calibrated" : "none";
  }

  rep.members = run_members(c, c.seed, jobs, log);
  bool all_ok = true;
  for (const auto& m : rep.members) all_ok = all_ok && m.ok;

  auto series = [&](const std::string& id, double predicted, auto get) {
    NormSeries s;
    s.id = id;
    for (const auto& m : rep.members) s.values.push_back(m.ok ? get(m) : kNaN);
    s.predicted = predicted;
    s.slope = fitted_slope(c.eps_list, s.values, s.dropped_largest);
    s.verdict = trend_verdict(s.values, all_ok);
    return s;
  };

  const double r = c.sweep_r;
  const double m_r = r > 2.0 ? rate_exponents(r).m : kNaN;
  const std::string rname = format_number(r);
  rep.series.push_back(series("u_diff:L2_T:L" + rname, m_r, [](const MemberResult& m) { return m.u_diff; }));
  rep.series.push_back(
      series("b_diff:L2_T:L" + rname + "_half_box", kNaN, [](const MemberResult& m) { return m.b_diff; }));

  {
    NormSeries s = series("D:E0", kNaN, [](const MemberResult& m) { return m.d_energy; });
    if (!all_ok) {
      s.verdict = kFail;
    } else if (rep.D0 <= 0.0) {
      s.verdict = kInconclusive;
    } else {
      bool bounded = true;
      for (const auto& m : rep.members) bounded = bounded && m.d_energy <= rep.D0 * (m.v0_sq + 1.0);
      s.verdict = bounded ? kPass : kFail;
    }
    rep.series.push_back(s);
  }
  rep.series.push_back(series("F4:H0:T", kNaN, [](const MemberResult& m) { return m.f4; }));
  if (c.strong_scaling)
    rep.series.push_back(series("U_diff:L2_T:Linf", (c.delta / 2.0 - c.gamma) / 18.0,
                                [](const MemberResult& m) { return m.full_diff_sup; }));
  for (std::size_t i = 0; i < c.norms.size(); ++i)
    for (int q = 0; q < 2; ++q) {
      const std::size_t k = 2 * i + q;
      NormSeries s = series((q ? "b_diff:L" : "u_diff:L") + format_number(c.sweep_time_exponent) + "_T:" + c.norms[i].id(),
                            kNaN, [k](const MemberResult& m) { return m.norms[k].value; });
      // no convergence is claimed in these norms
      if (s.verdict == kFail && all_ok) s.verdict = kInconclusive;
      rep.series.push_back(s);
    }

  rep.exit_code = 0;
  for (const auto& s : rep.series)
    if (s.verdict == kFail) rep.exit_code = 2;
  return rep;
}

void write_sweep(const RunConfig& c, const SweepReport& rep) {
  const auto& dir = c.out_dir;
  std::vector<std::string> outputs;
  auto put = [&](const std::string& rel, const std::string& text) {
    write_text(dir / rel, text);
    outputs.push_back(rel);
  };

  CsvTable report({"eps", "norm_id", "value", "predicted_exponent", "fitted_slope", "verdict", "manifest_hash"});
  for (const auto& s : rep.series)
    for (std::size_t i = 0; i < rep.members.size(); ++i) {
      const auto& m = rep.members[i];
      report.cell(m.eps).cell(s.id).cell(s.values[i]).cell(s.predicted).cell(s.slope);
      report.cell(m.ok ? s.verdict : std::string(kFail)).cell(rep.run_hash).end_row();
    }
  put("report.csv", report.str());

  CsvTable budget({"eps", "t", "term", "s", "value"});
  for (const auto& m : rep.members)
    for (const auto& b : m.budget) budget.cell(m.eps).cell(c.T).cell(b.term).cell(b.s).cell(b.value).end_row();
  put("budget.csv", budget.str());

  for (std::size_t i = 0; i < rep.members.size(); ++i) {
    const auto& m = rep.members[i];
    const std::string sub = "members/eps_" + std::to_string(i) + "/";
    CsvTable index({"t", "energy", "dissipation", "div_residual"});
    for (const auto& row : m.index) index.cell(row.t).cell(row.energy).cell(row.dissipation).cell(row.div_residual).end_row();
    put(sub + "index.csv", index.str());
    CsvTable norms({"quantity", "s", "p", "r", "a", "value", "truncation_share"});
    for (const auto& n : m.norms)
      norms.cell(n.quantity + ":" + n.spec.space).cell(n.spec.s).cell(n.spec.p).cell(n.spec.r)
          .cell(c.sweep_time_exponent).cell(n.value).cell(n.truncation_share).end_row();
    put(sub + "norms.csv", norms.str());
    if (!m.ok && m.last_valid.ncomp() > 0) {
      write_checkpoint(dir / (sub + "last_valid.rmhd"), m.last_valid);
      outputs.push_back(sub + "last_valid.rmhd");
    }
  }

  nlohmann::ordered_json j;
  j["run_hash"] = rep.run_hash;
  j["T"] = c.T;
  j["D0"] = rep.D0;
  j["D0_source"] = rep.D0_source;
  j["calibration_seed"] = c.calibration_seed;
  j["calibration_ratios"] = nlohmann::ordered_json::array();
  for (double x : rep.calibration_ratios) j["calibration_ratios"].push_back(std::isnan(x) ? nlohmann::ordered_json() : nlohmann::ordered_json(x));
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(); };
  double dmax = 0.0;
  for (const auto& m : rep.members) {
    nlohmann::ordered_json e;
    e["eps"] = m.eps;
    e["status"] = m.ok ? "ok" : "failed";
    if (!m.ok) {
      e["error"] = m.error;
      e["last_valid_t"] = m.last_valid_t;
    }
    e["v0_sq"] = m.v0_sq;
    e["D_E0"] = m.d_energy;
    e["D_bound"] = rep.D0 * (m.v0_sq + 1.0);
    e["u_diff_half_T"] = m.u_diff_half;
    e["b_diff_half_T"] = m.b_diff_half;
    if (m.ok) dmax = std::max(dmax, m.d_energy);
    e["D_E0_running_max"] = dmax;
    j["members"].push_back(e);
  }
  for (const auto& s : rep.series) {
    nlohmann::ordered_json e;
    e["norm_id"] = s.id;
    e["predicted_exponent"] = num(s.predicted);
    e["fitted_slope"] = num(s.slope);
    e["dropped_largest_eps"] = s.dropped_largest;
    e["verdict"] = s.verdict;
    j["norms"].push_back(e);
  }
  j["exit_code"] = rep.exit_code;
  put("summary.json", j.dump(2) + "\n");
  write_manifest(dir, c, outputs);
}

}  // namespace rmhd::harness
