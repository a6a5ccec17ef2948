#include "rmhd/harness/cli.hpp"

#include <CLI11.hpp>
#include <optional>
#include <ostream>

#include "rmhd/harness/config.hpp"
#include "rmhd/harness/experiments.hpp"
#include "rmhd/harness/io.hpp"

namespace rmhd::harness {

int cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotating MHD simulation and convergence harness", "rmhd"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool verbose = false;

  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides out.dir)");
    sub->add_option("--seed", seed, "random seed (overrides seed)");
    sub->add_option("--jobs", jobs, "concurrent sweep members")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", verbose, "progress on stderr");
  };
  CLI::App* sweep = app.add_subcommand("sweep", "eps sweep against the limit system");
  CLI::App* disp = app.add_subcommand("dispersion", "whole-space dispersion exponents");
  CLI::App* bench = app.add_subcommand("besov-bench", "Littlewood-Paley machinery checks");
  CLI::App* single = app.add_subcommand("single-run", "one rotating MHD run with checkpoints");
  for (auto* sub : {sweep, disp, bench, single}) add_run_options(sub);
  CLI::App* report = app.add_subcommand("report", "summarize verdicts found under a directory");
  report->add_option("--in", in_dir, "directory to scan")->required();
  report->add_flag("--verbose", verbose);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "rmhd: " << e.what() << "\n";
    return 1;
  }

  Logger log;
  if (verbose) log = [&err](const std::string& s) { err << s << "\n"; };

  try {
    if (report->parsed()) {
      std::string text;
      int code = summarize_reports(in_dir, text);
      out << text;
      return code;
    }

    const char* kind = sweep->parsed() ? "sweep" : disp->parsed() ? "dispersion" : bench->parsed() ? "besov-bench" : "single-run";
    RunConfig c = load_config(config_path, kind);
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (seed) c.seed = *seed;
    validate(c);

    if (sweep->parsed()) {
      SweepReport r = run_sweep(c, jobs, log);
      write_sweep(c, r);
      for (const auto& s : r.series) out << s.id << ": " << s.verdict << "\n";
      return r.exit_code;
    }
    if (disp->parsed()) {
      auto r = run_dispersion(c, log);
      for (const auto& v : r.verdicts) out << v << "\n";
      return r.exit_code;
    }
    if (bench->parsed()) {
      auto r = run_besov_bench(c, log);
      for (const auto& ch : r.checks) out << ch.check << " n=" << ch.n << ": " << ch.verdict << "\n";
      return r.exit_code;
    }
    return run_single(c, log);
  } catch (const ConfigError& e) {
    err << "rmhd: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "rmhd: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "rmhd: invalid setup: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "rmhd: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rmhd::harness
