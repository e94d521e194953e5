// Command-line driver: solve, length and sigma sweeps, config check and
// residual recomputation from saved outputs.
//
// Exit codes: 0 success, 1 residual mismatch, 2 configuration error,
// 3 solver failure (divergence or numerical breakdown), 4 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "axicd/io.hpp"
#include "axicd/solver.hpp"

namespace fs = std::filesystem;
using namespace axicd;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string dir;
  int verbosity = 0;
  double tolerance = 1e-12;
};

RunConfig load(const Options& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.output.directory = o.out;
  cfg.solver.verbosity = o.verbosity;
  return cfg;
}

fs::path config_dir(const Options& o) { return fs::path(o.config).parent_path(); }

void print_summary(const Solution& sol) {
  const Diagnostics& d = sol.diagnostics;
  std::printf("sigma               %.6e\n", sol.sigma);
  std::printf("outer iterations    %d\n", sol.outer_iterations());
  std::printf("max euler residual  %.3e\n", d.max_euler());
  std::printf("pressure jump       %.3e\n", d.pressure_jump);
  std::printf("max mach            %.6f\n", d.max_mach);
  std::printf("elapsed             %.3f s\n", sol.elapsed);
}

int run_solve(const Options& o) {
  const RunConfig cfg = load(o);
  const EntranceProfiles entrance = build_entrance(cfg, config_dir(o));
  const Solution sol = solve_truncated(cfg.constants, entrance, cfg.solver);
  write_solution(sol, cfg, cfg.output.directory, cfg.output.fields);
  print_summary(sol);
  std::printf("wrote %s\n", cfg.output.directory.c_str());
  return 0;
}

int run_sweep_length(const Options& o) {
  RunConfig cfg = load(o);
  if (cfg.solver.lengths.size() < 2) {
    fail(ErrorKind::ConfigError, "solver.lengths: need at least two lengths");
  }
  const EntranceProfiles entrance = build_entrance(cfg, config_dir(o));
  const LengthSweep sweep = solve_length_sweep(cfg.constants, entrance, cfg.solver);
  const fs::path root = cfg.output.directory;
  std::string report = "# axicd length sweep format_version=" + std::to_string(kFormatVersion) + "\n";
  for (std::size_t k = 0; k < sweep.solutions.size(); ++k) {
    const Solution& s = sweep.solutions[k];
    RunConfig one = cfg;
    one.solver.length = s.f.length();
    one.solver.nx = s.f.size();
    write_solution(s, one, root / ("L_" + format_number(s.f.length())), cfg.output.fields);
  }
  for (std::size_t k = 0; k < sweep.comparisons.size(); ++k) {
    const LengthComparison& cmp = sweep.comparisons[k];
    const std::string pair = format_number(sweep.solutions[k].f.length()) + "_vs_" +
                             format_number(sweep.solutions[k + 1].f.length());
    for (const FieldDiscrepancy& d : cmp.fields) {
      report += pair + "." + d.name + ".relative = " + format_number(d.relative) + "\n";
      report += pair + "." + d.name + ".absolute = " + format_number(d.absolute) + "\n";
    }
    std::printf("%-12s max relative %.3e\n", pair.c_str(), cmp.max_relative());
  }
  fs::create_directories(root);
  detail::write_file(root / "length_sweep.txt", report);
  return 0;
}

int run_sweep_sigma(const Options& o) {
  const RunConfig cfg = load(o);
  if (cfg.entrance.preset != "bumps") {
    fail(ErrorKind::ConfigError, "entrance.preset: the sigma study rescales the bumps preset");
  }
  const SigmaStudy study = sigma_scaling_study(cfg.constants, cfg.entrance.amplitudes, cfg.sigmas,
                                               cfg.solver, cfg.entrance.samples);
  std::string report = "# axicd sigma study format_version=" + std::to_string(kFormatVersion) + "\n";
  for (std::size_t k = 0; k < study.rows.size(); ++k) {
    const SigmaRow& r = study.rows[k];
    const std::string key = "row." + std::to_string(k + 1);
    report += key + ".sigma = " + format_number(r.sigma) + "\n";
    report += key + ".outer_iterations = " + std::to_string(r.outer_iterations) + "\n";
    for (const auto& [name, v] : r.ledger.entries()) report += key + "." + name + " = " + format_number(v) + "\n";
    std::printf("sigma %.3e  outer %d\n", r.sigma, r.outer_iterations);
  }
  for (std::size_t k = 0; k < study.ratios.size(); ++k) {
    for (const auto& [name, v] : study.ratios[k]) {
      report += "ratio." + std::to_string(k + 1) + "." + name + " = " + format_number(v) + "\n";
      std::printf("ratio %zu %-16s %.4f\n", k + 1, name.c_str(), v);
    }
  }
  fs::create_directories(cfg.output.directory);
  detail::write_file(fs::path(cfg.output.directory) / "sigma_study.txt", report);
  return 0;
}

int run_check(const Options& o) {
  const RunConfig cfg = load(o);
  const EntranceProfiles entrance = build_entrance(cfg, config_dir(o));
  std::printf("config ok: nx=%d ns_plus=%d ns_minus=%d L=%g sigma=%.6e\n", cfg.solver.nx,
              cfg.solver.ns_plus, cfg.solver.ns_minus, cfg.solver.length,
              entrance.sigma(cfg.constants));
  return 0;
}

int run_residuals(const Options& o) {
  const ResidualCheck rc = recompute_residuals(o.dir);
  for (const auto& [k, v] : rc.recomputed.entries()) std::printf("%-32s %.17g\n", k.c_str(), v);
  std::printf("max mismatch vs summary: %.3e (%s)\n", rc.max_mismatch, rc.worst_key.c_str());
  return rc.max_mismatch <= o.tolerance ? 0 : 1;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError: return 2;
    case ErrorKind::IoError: return 4;
    default: return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady axisymmetric Euler flow with a contact discontinuity"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "JSON run configuration")->required();
    sub->add_option("-o,--out", o.out, "Output directory (overrides output.directory)");
    sub->add_flag("-v,--verbose", o.verbosity, "Print iteration progress (repeat for more)");
  };
  CLI::App* solve = app.add_subcommand("solve", "Solve one truncated problem and write the outputs");
  CLI::App* sweep_length = app.add_subcommand("sweep-length", "Solve for each solver.lengths entry and compare");
  CLI::App* sweep_sigma = app.add_subcommand("sweep-sigma", "Rescale the bump preset over study.sigmas");
  CLI::App* check = app.add_subcommand("check", "Validate a configuration and its entrance data");
  for (CLI::App* sub : {solve, sweep_length, sweep_sigma, check}) add_common(sub);
  CLI::App* residuals = app.add_subcommand("residuals", "Recompute diagnostics from a saved solution");
  residuals->add_option("-d,--dir", o.dir, "Solution directory")->required();
  residuals->add_option("--tolerance", o.tolerance, "Allowed relative mismatch with summary.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return run_solve(o);
    if (sweep_length->parsed()) return run_sweep_length(o);
    if (sweep_sigma->parsed()) return run_sweep_sigma(o);
    if (check->parsed()) return run_check(o);
    if (residuals->parsed()) return run_residuals(o);
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: IoError: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
