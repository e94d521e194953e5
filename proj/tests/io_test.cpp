#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "axicd/io.hpp"

using namespace axicd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("axicd_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AXICD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig small_run(double sigma) {
  RunConfig cfg;
  cfg.entrance.preset = sigma > 0 ? "bumps" : "none";
  if (sigma > 0) cfg.entrance.sigma = sigma;
  cfg.solver.nx = 25;
  cfg.solver.ns_plus = 16;
  cfg.solver.ns_minus = 16;
  cfg.solver.tol_picard = 1e-15;
  return cfg;
}

}  // namespace

TEST(ParseConfig, MinimalConfigTakesDefaults) {
  const RunConfig cfg = parse_config(R"({"constants": {"gamma": 1.4}})");
  EXPECT_EQ(cfg.solver.nx, 64);
  EXPECT_EQ(cfg.entrance.preset, "none");
  EXPECT_EQ(build_entrance(cfg).sigma(cfg.constants), 0.0);
}

TEST(ParseConfig, ErrorsNameTheField) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const SolverError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message(R"({"solver": {"nx": 1.5}})").find("solver.nx"), std::string::npos);
  EXPECT_NE(message(R"({"solver": {"nz": 3}})").find("solver.nz"), std::string::npos);
  EXPECT_NE(message(R"({"constants": {"u0_plus": 0.7}})").find("u0_plus"), std::string::npos);
  EXPECT_NE(message(R"({"entrance": {"epsilon": 0.2}})").find("entrance.epsilon"), std::string::npos);
  EXPECT_NE(message(R"({"format_version": 2})").find("format_version"), std::string::npos);
  EXPECT_NE(message("{ not json").find("malformed"), std::string::npos);
}

TEST(ParseConfig, SupportConditionIsEnforced) {
  // v_minus nonzero at r = 0.49 with eps = 0.05
  std::string v = "[", zeros = "[", S = "[";
  const int n = 51;
  for (int k = 0; k < n; ++k) {
    const double r = 0.5 * k / (n - 1);
    v += (k ? "," : "") + std::string(std::abs(r - 0.49) < 1e-12 ? "1e-3" : "0");
    zeros += (k ? ",0" : "0");
    S += (k ? ",1" : "1");
  }
  v += "]";
  zeros += "]";
  S += "]";
  const std::string text = R"({"entrance": {"preset": "samples", "epsilon": 0.05,
      "minus": {"v": )" + v + R"(, "w": )" + zeros + R"(, "S": )" + S + R"(},
      "plus": {"v": )" + zeros + R"(, "w": )" + zeros + R"(, "S": )" + S + R"(}}})";
  const RunConfig cfg = parse_config(text);
  try {
    build_entrance(cfg);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    EXPECT_NE(std::string(e.what()).find("support"), std::string::npos);
  }
}

TEST(ParseConfig, RoundTrip) {
  const RunConfig a = load_config(fs::path(AXICD_CONFIG_DIR) / "example.json");
  const RunConfig b = parse_config(serialize_config(a));
  EXPECT_TRUE(a == b);
  EXPECT_EQ(serialize_config(a), serialize_config(b));
  const RunConfig sweep = load_config(fs::path(AXICD_CONFIG_DIR) / "sweep.json");
  EXPECT_TRUE(sweep == parse_config(serialize_config(sweep)));
}

TEST(ParseConfig, FileProfilesMatchTheirTable) {
  const RunConfig cfg = load_config(fs::path(AXICD_CONFIG_DIR) / "table.json");
  const EntranceProfiles e = build_entrance(cfg, AXICD_CONFIG_DIR);
  EXPECT_GT(e.sigma(cfg.constants), 0.0);
  EXPECT_NEAR(e.phase(Phase::minus).v(0.49), 0.0, 1e-15);
}

TEST(WriteSolution, FilesRoundTripBitExactly) {
  const RunConfig cfg = small_run(1e-3);
  const Solution sol = solve_truncated(cfg.constants, build_entrance(cfg), cfg.solver);
  const fs::path dir = scratch("roundtrip");
  write_solution(sol, cfg, dir);

  const FieldTable t = read_field_table(dir / "fields_minus.csv");
  EXPECT_EQ(t.data[0].size(), static_cast<std::size_t>(sol.minus.grid.nodes()));
  for (const char* name : {"x", "r", "S", "Lambda", "phi", "psi", "rho", "u_x", "u_r", "u_theta", "p"}) {
    EXPECT_NO_THROW(t.column(name)) << name;
  }
  const Solution back = load_solution(dir);
  EXPECT_EQ(back.f.values().size(), sol.f.values().size());
  for (int i = 0; i < sol.f.size(); ++i) EXPECT_EQ(back.f.f(i), sol.f.f(i));
  for (Phase p : {Phase::plus, Phase::minus}) {
    const PhaseFlow& a = sol.phase(p);
    const PhaseFlow& b = back.phase(p);
    EXPECT_EQ(a.S.data, b.S.data);
    EXPECT_EQ(a.Lambda.data, b.Lambda.data);
    EXPECT_EQ(a.phi.data, b.phi.data);
    EXPECT_EQ(a.psi.data, b.psi.data);
    EXPECT_EQ(a.p.data, b.p.data);
    EXPECT_EQ(a.velocity.r.data, b.velocity.r.data);
  }
  const ResidualCheck rc = recompute_residuals(dir);
  EXPECT_LE(rc.max_mismatch, 1e-12) << rc.worst_key;
}

TEST(WriteSolution, BackgroundInterfaceFileIsFlat) {
  const RunConfig cfg = small_run(0.0);
  const Solution sol = solve_truncated(cfg.constants, build_entrance(cfg), cfg.solver);
  const fs::path dir = scratch("background");
  write_solution(sol, cfg, dir);
  std::ifstream in(dir / "interface.txt");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    EXPECT_EQ(line.substr(line.find(' ') + 1), "0.5");
    ++rows;
  }
  EXPECT_EQ(rows, cfg.solver.nx);
}

TEST(WriteSolution, IdenticalConfigsGiveIdenticalFiles) {
  const RunConfig cfg = small_run(1e-3);
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  write_solution(solve_truncated(cfg.constants, build_entrance(cfg), cfg.solver), cfg, a);
  write_solution(solve_truncated(cfg.constants, build_entrance(cfg), cfg.solver), cfg, b);
  for (const char* f : {"interface.txt", "fields_plus.csv", "fields_minus.csv", "summary.txt", "config.json"}) {
    EXPECT_EQ(read_text(a / f), read_text(b / f)) << f;
  }
}

TEST(FormatNumber, SeventeenDigitsAndFiniteOnly) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_THROW(format_number(std::nan("")), SolverError);
}

TEST(Cli, ExitCodes) {
  const std::string cfgdir = AXICD_CONFIG_DIR;
  EXPECT_EQ(run_cli("check -c " + cfgdir + "/example.json"), 0);
  const fs::path out = scratch("cli");
  EXPECT_EQ(run_cli("solve -c " + cfgdir + "/background.json -o " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "summary.txt"));
  EXPECT_EQ(run_cli("residuals -d " + out.string()), 0);
  EXPECT_EQ(run_cli("check -c /nonexistent/config.json"), 4);
  const fs::path bad = out / "bad.json";
  std::ofstream(bad) << R"({"solver": {"nx": "many"}})";
  EXPECT_EQ(run_cli("check -c " + bad.string()), 2);
  const fs::path diverge = out / "diverge.json";
  std::ofstream(diverge) << R"({"entrance": {"preset": "bumps", "sigma": 1e-3},
    "solver": {"nx": 17, "ns_plus": 12, "ns_minus": 12, "max_outer": 1, "tol_outer": 1e-300}})";
  EXPECT_EQ(run_cli("solve -c " + diverge.string() + " -o " + (out / "d").string()), 3);
  EXPECT_EQ(run_cli("no-such-command"), 2);
}
