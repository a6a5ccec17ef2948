#include "rmhd/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace rmhd::harness {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf") return kInfinity;
  double x = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key + ": '" + v + "' is not a number");
  return x;
}

long long parse_integer(const std::string& key, const std::string& v) {
  long long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": '" + v + "' is not an integer");
  return x;
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": '" + v + "' is not a 64-bit seed");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": '" + v + "' is not true or false");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ','))
    if (!item.empty()) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_number(xs[i]);
  return s;
}

std::vector<NormSpec> parse_norms(const std::string& key, const std::string& v) {
  std::vector<NormSpec> out;
  for (const auto& item : split(v, ',')) {
    if (item.empty()) continue;
    auto f = split(item, ':');
    if (f.size() != 4) throw ConfigError(key + ": '" + item + "' is not space:s:p:r");
    out.push_back({f[0], parse_double(key, f[1]), parse_double(key, f[2]), parse_double(key, f[3])});
  }
  return out;
}

std::vector<DispersionNormSpec> parse_dispersion_norms(const std::string& key, const std::string& v) {
  std::vector<DispersionNormSpec> out;
  for (const auto& item : split(v, ',')) {
    if (item.empty()) continue;
    auto f = split(item, ':');
    if (f.size() != 2) throw ConfigError(key + ": '" + item + "' is not kind:index");
    out.push_back({f[0], parse_double(key, f[1])});
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

struct Key {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define RMHD_NUMBER(field)                                                             \
  Key {                                                                                \
    [](const RunConfig& c) { return format_number(c.field); },                         \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_double(k, v); } \
  }
#define RMHD_INT(field)                                                                \
  Key {                                                                                \
    [](const RunConfig& c) { return std::to_string(c.field); },                        \
        [](RunConfig& c, const std::string& k, const std::string& v) {                 \
          auto x = parse_integer(k, v);                                                \
          if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(k + ": out of range"); \
          c.field = static_cast<int>(x);                                               \
        }                                                                              \
  }
#define RMHD_BOOL(field)                                                               \
  Key {                                                                                \
    [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); },       \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_bool(k, v); } \
  }
#define RMHD_LIST(field)                                                               \
  Key {                                                                                \
    [](const RunConfig& c) { return join(c.field); },                                  \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_list(k, v); } \
  }
#define RMHD_SEED(field)                                                               \
  Key {                                                                                \
    [](const RunConfig& c) { return std::to_string(c.field); },                        \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.field = parse_seed(k, v); } \
  }

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = {
      {"experiment", {[](const RunConfig& c) { return c.experiment; },
                      [](RunConfig& c, const std::string&, const std::string& v) { c.experiment = v; }}},
      {"seed", RMHD_SEED(seed)},
      {"grid.n", RMHD_INT(grid_n)},
      {"grid.box", RMHD_NUMBER(grid_box)},
      {"phys.nu", RMHD_NUMBER(nu)},
      {"phys.nu_prime", RMHD_NUMBER(nu_prime)},
      {"sweep.eps_list", RMHD_LIST(eps_list)},
      {"sweep.norms",
       {[](const RunConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.norms.size(); ++i) {
            const auto& n = c.norms[i];
            s += (i ? "," : "") + n.space + ":" + format_number(n.s) + ":" + format_number(n.p) + ":" +
                 format_number(n.r);
          }
          return s;
        },
        [](RunConfig& c, const std::string& k, const std::string& v) { c.norms = parse_norms(k, v); }}},
      {"sweep.r", RMHD_NUMBER(sweep_r)},
      {"sweep.time_exponent", RMHD_NUMBER(sweep_time_exponent)},
      {"sweep.D0", RMHD_NUMBER(sweep_D0)},
      {"sweep.calibration_seed", RMHD_SEED(calibration_seed)},
      {"data.recipe", {[](const RunConfig& c) { return c.recipe; },
                       [](RunConfig& c, const std::string&, const std::string& v) { c.recipe = v; }}},
      {"data.gamma", RMHD_NUMBER(gamma)},
      {"data.delta", RMHD_NUMBER(delta)},
      {"data.k0", RMHD_NUMBER(k0)},
      {"data.strong_scaling", RMHD_BOOL(strong_scaling)},
      {"data.C0", RMHD_NUMBER(C0)},
      {"data.K0", RMHD_NUMBER(K0)},
      {"data.planar_u_amp", RMHD_NUMBER(planar_u_amp)},
      {"data.planar_b_amp", RMHD_NUMBER(planar_b_amp)},
      {"data.bulk_v_amp", RMHD_NUMBER(bulk_v_amp)},
      {"data.bulk_c_amp", RMHD_NUMBER(bulk_c_amp)},
      {"time.T", RMHD_NUMBER(T)},
      {"time.dt", RMHD_NUMBER(dt)},
      {"time.sample_every", RMHD_INT(sample_every)},
      {"run.eps", RMHD_NUMBER(run_eps)},
      {"run.checkpoint_every", RMHD_INT(checkpoint_every)},
      {"dispersion.T", RMHD_NUMBER(disp_T)},
      {"dispersion.eps_list", RMHD_LIST(disp_eps_list)},
      {"dispersion.norms",
       {[](const RunConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.disp_norms.size(); ++i)
            s += (i ? "," : "") + c.disp_norms[i].kind + ":" + format_number(c.disp_norms[i].index);
          return s;
        },
        [](RunConfig& c, const std::string& k, const std::string& v) { c.disp_norms = parse_dispersion_norms(k, v); }}},
      {"dispersion.nu", RMHD_NUMBER(disp_nu)},
      {"dispersion.per_oscillation", RMHD_NUMBER(disp_per_oscillation)},
      {"dispersion.drop_largest", RMHD_BOOL(disp_drop_largest)},
      {"dispersion.check_convergence", RMHD_BOOL(disp_check_convergence)},
      {"bench.n", RMHD_INT(bench_n)},
      {"bench.fields", RMHD_INT(bench_fields)},
      {"bench.trajectories", RMHD_INT(bench_trajectories)},
      {"out.dir", {[](const RunConfig& c) { return c.out_dir.string(); },
                   [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }}},
  };
  return table;
}

#undef RMHD_NUMBER
#undef RMHD_INT
#undef RMHD_BOOL
#undef RMHD_LIST
#undef RMHD_SEED

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check_index(const std::string& what, double x) { require(x >= 1.0, what + " must lie in [1, inf]"); }

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string NormSpec::id() const {
  return space + ":" + format_number(s) + ":" + format_number(p) + ":" + format_number(r);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : keys()) out.push_back(k);
  return out;
}

std::vector<std::string> required_keys(const std::string& experiment) {
  if (experiment == "dispersion" || experiment == "besov-bench") return {"out.dir"};
  return {"grid.n", "grid.box", "phys.nu", "phys.nu_prime", "sweep.eps_list", "data.recipe",
          "data.gamma", "data.delta", "data.k0", "time.T", "time.dt", "out.dir"};
}

RunConfig parse_config(const std::string& text, const std::string& experiment) {
  RunConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto it = keys().find(key);
    if (it == keys().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    it->second.set(c, key, value);
  }
  if (!experiment.empty()) c.experiment = experiment;
  for (const auto& k : required_keys(c.experiment))
    if (!seen.count(k)) throw ConfigError("missing required key '" + k + "' for experiment " + c.experiment);
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), experiment);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string emit_config(const RunConfig& c) {
  std::string out;
  for (const auto& [k, key] : keys()) out += k + "=" + key.get(c) + "\n";
  return out;
}

void validate(const RunConfig& c) {
  static const std::set<std::string> kinds{"sweep", "dispersion", "besov-bench", "single-run"};
  require(kinds.count(c.experiment) > 0, "experiment must be one of sweep, dispersion, besov-bench, single-run");
  require(power_of_two(c.grid_n) && c.grid_n >= 8, "grid.n must be a power of two >= 8");
  require(c.grid_box > 0, "grid.box must be positive");
  require(c.nu >= 0 && c.nu_prime >= 0, "phys.nu and phys.nu_prime must be nonnegative");
  require(!c.eps_list.empty(), "sweep.eps_list is empty");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    require(c.eps_list[i] > 0, "sweep.eps_list entries must be positive");
    if (i) require(c.eps_list[i] < c.eps_list[i - 1], "sweep.eps_list must be strictly decreasing");
  }
  for (const auto& n : c.norms) {
    if (n.space == "besov") {
      check_index("besov p", n.p);
      check_index("besov r", n.r);
      require(std::abs(n.s) <= 3, "besov s must lie in [-3, 3]");
    } else if (n.space == "sobolev") {
      require(std::abs(n.s) <= 3, "sobolev s must lie in [-3, 3]");
    } else if (n.space == "lebesgue") {
      check_index("lebesgue p", n.p);
    } else if (n.space == "anisotropic") {
      check_index("anisotropic horizontal index", n.p);
      check_index("anisotropic vertical index", n.r);
    } else {
      throw ConfigError("unknown norm space '" + n.space + "' (besov, sobolev, lebesgue, anisotropic)");
    }
  }
  require(c.sweep_r >= 2 && c.sweep_r <= 6, "sweep.r must lie in [2, 6]");
  check_index("sweep.time_exponent", c.sweep_time_exponent);
  require(c.sweep_D0 >= 0, "sweep.D0 must be nonnegative (0 calibrates)");
  require(c.recipe == "shell" || c.recipe == "cellular", "data.recipe must be shell or cellular");
  require(c.delta > 0 && c.delta < 0.5, "data.delta must lie in (0, 1/2)");
  require(c.gamma >= 0, "data.gamma must be nonnegative");
  require(c.k0 > 0, "data.k0 must be positive");
  require(c.C0 > 0 && c.K0 > 0, "data.C0 and data.K0 must be positive");
  require(c.T > 0 && c.dt > 0 && c.dt <= c.T, "time.T and time.dt must satisfy 0 < dt <= T");
  {
    double steps = c.T / c.dt;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * steps, "time.T must be an integer multiple of time.dt");
  }
  if (c.strong_scaling) {
    require(c.delta <= 1.0 / 6.0 + 1e-15, "data.delta must lie in (0, 1/6] with strong scaling");
    require(c.gamma <= 5.0 * c.delta / 12.0 * (1 + 1e-12), "data.gamma must not exceed 5 delta / 12");
  }
  require(c.sample_every >= 1, "time.sample_every must be >= 1");
  require(c.run_eps >= 0, "run.eps must be nonnegative");
  require(c.checkpoint_every >= 0, "run.checkpoint_every must be nonnegative");
  require(c.disp_T > 0, "dispersion.T must be positive");
  for (const auto& n : c.disp_norms) {
    require(n.kind == "lebesgue" || n.kind == "anisotropic", "dispersion norms are lebesgue or anisotropic");
    require(n.index >= 2, "dispersion norm index must lie in [2, inf]");
  }
  require(c.disp_eps_list.size() >= 4, "dispersion.eps_list needs at least 4 values");
  require(c.disp_eps_list.front() >= 10 * c.disp_eps_list.back(), "dispersion.eps_list must span at least one decade");
  for (std::size_t i = 0; i < c.disp_eps_list.size(); ++i) {
    require(c.disp_eps_list[i] > 0, "dispersion.eps_list entries must be positive");
    if (i) require(c.disp_eps_list[i] < c.disp_eps_list[i - 1], "dispersion.eps_list must be strictly decreasing");
  }
  require(c.disp_nu >= 0, "dispersion.nu must be nonnegative");
  require(c.disp_per_oscillation >= 2, "dispersion.per_oscillation must be >= 2");
  require(power_of_two(c.bench_n) && c.bench_n >= 8 && c.bench_n <= 64, "bench.n must be a power of two in [8, 64]");
  require(c.bench_fields >= 2, "bench.fields must be >= 2");
  require(c.bench_trajectories >= 1, "bench.trajectories must be >= 1");
  require(!c.out_dir.empty(), "out.dir is empty");
}

}  // namespace rmhd::harness
