#pragma once

// Run configuration (JSON), entrance-data ingestion and the text formats
// written for a solution: interface curve, per-phase field tables, summary.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "axicd/errors.hpp"
#include "axicd/profiles.hpp"
#include "axicd/solver.hpp"

namespace axicd {

inline constexpr int kFormatVersion = 1;

struct EntranceSpec {
  std::string preset = "none";  // none | bumps | samples | file
  std::optional<double> sigma;  // bumps rescaled to this sigma when set
  BumpAmplitudes amplitudes{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double epsilon = 0.05;
  int samples = EntranceProfiles::kDefaultSamples;
  std::string file;

  struct Table {
    std::vector<double> v, w, S;
    bool operator==(const Table&) const = default;
  };
  Table plus, minus;  // inline samples over [1/2, 1] and [0, 1/2]

  bool operator==(const EntranceSpec&) const = default;
};

struct OutputSpec {
  std::string directory = "axicd_out";
  bool fields = true;

  bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
  int format_version = kFormatVersion;
  FlowConstants constants;
  EntranceSpec entrance;
  SolverConfig solver;
  OutputSpec output;
  std::vector<double> sigmas{2.5e-4, 5e-4, 1e-3};

  bool operator==(const RunConfig& o) const {
    const auto& a = solver;
    const auto& b = o.solver;
    const bool same_constants =
        constants.gamma == o.constants.gamma && constants.rho0_plus == o.constants.rho0_plus &&
        constants.rho0_minus == o.constants.rho0_minus && constants.u0_plus == o.constants.u0_plus &&
        constants.u0_minus == o.constants.u0_minus && constants.p0 == o.constants.p0;
    const bool same_solver =
        a.nx == b.nx && a.ns_plus == b.ns_plus && a.ns_minus == b.ns_minus && a.length == b.length &&
        a.lengths == b.lengths && a.tol_outer == b.tol_outer && a.tol_fb == b.tol_fb &&
        a.tol_picard == b.tol_picard && a.tol_algebraic == b.tol_algebraic && a.omega == b.omega &&
        a.omega_f == b.omega_f && a.max_outer == b.max_outer && a.max_middle == b.max_middle &&
        a.max_inner == b.max_inner && a.axial_floor == b.axial_floor;
    return format_version == o.format_version && same_constants && entrance == o.entrance &&
           same_solver && output == o.output && sigmas == o.sigmas;
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void config_error(const std::string& path, const std::string& why) {
  fail(ErrorKind::ConfigError, path + ": " + why);
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> known) {
  if (!obj.is_object()) config_error(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) config_error(path.empty() ? key : path + "." + key, "unknown key");
  }
}

template <class T>
void read(const json& obj, const char* key, const std::string& path, T& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  const std::string where = path.empty() ? key : path + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) config_error(where, "expected a boolean");
    out = v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) config_error(where, "expected an integer");
    out = v.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) config_error(where, "expected a number");
    out = v.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) config_error(where, "expected a string");
    out = v.get<std::string>();
  } else {
    if (!v.is_array()) config_error(where, "expected an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) config_error(where, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }
}

inline std::string phase_path(const std::string& base, Phase p) {
  return base + "." + phase_name(p);
}

}  // namespace detail

//! Parse and validate a run configuration; unspecified fields keep defaults.
inline RunConfig parse_config(const std::string& text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  detail::reject_unknown(doc, "",
                         {"format_version", "constants", "entrance", "solver", "output", "study"});
  detail::read(doc, "format_version", "", cfg.format_version);
  if (cfg.format_version != kFormatVersion) {
    detail::config_error("format_version", "unsupported value " + std::to_string(cfg.format_version));
  }

  if (doc.contains("constants")) {
    const json& c = doc["constants"];
    detail::reject_unknown(c, "constants",
                           {"gamma", "rho0_plus", "rho0_minus", "u0_plus", "u0_minus", "p0"});
    detail::read(c, "gamma", "constants", cfg.constants.gamma);
    detail::read(c, "rho0_plus", "constants", cfg.constants.rho0_plus);
    detail::read(c, "rho0_minus", "constants", cfg.constants.rho0_minus);
    detail::read(c, "u0_plus", "constants", cfg.constants.u0_plus);
    detail::read(c, "u0_minus", "constants", cfg.constants.u0_minus);
    detail::read(c, "p0", "constants", cfg.constants.p0);
  }

  if (doc.contains("entrance")) {
    const json& e = doc["entrance"];
    detail::reject_unknown(e, "entrance",
                           {"preset", "sigma", "amplitudes", "epsilon", "samples", "file", "plus",
                            "minus"});
    EntranceSpec& es = cfg.entrance;
    detail::read(e, "preset", "entrance", es.preset);
    if (e.contains("sigma")) {
      double s = 0.0;
      detail::read(e, "sigma", "entrance", s);
      es.sigma = s;
    }
    if (e.contains("amplitudes")) {
      const json& a = e["amplitudes"];
      detail::reject_unknown(a, "entrance.amplitudes",
                             {"S_plus", "w_plus", "v_plus", "S_minus", "w_minus", "v_minus"});
      BumpAmplitudes& b = es.amplitudes;
      b = BumpAmplitudes{};
      detail::read(a, "S_plus", "entrance.amplitudes", b.S_plus);
      detail::read(a, "w_plus", "entrance.amplitudes", b.w_plus);
      detail::read(a, "v_plus", "entrance.amplitudes", b.v_plus);
      detail::read(a, "S_minus", "entrance.amplitudes", b.S_minus);
      detail::read(a, "w_minus", "entrance.amplitudes", b.w_minus);
      detail::read(a, "v_minus", "entrance.amplitudes", b.v_minus);
    }
    detail::read(e, "epsilon", "entrance", es.epsilon);
    detail::read(e, "samples", "entrance", es.samples);
    detail::read(e, "file", "entrance", es.file);
    for (Phase p : {Phase::plus, Phase::minus}) {
      const char* key = phase_name(p);
      if (!e.contains(key)) continue;
      const std::string path = detail::phase_path("entrance", p);
      const json& t = e[key];
      detail::reject_unknown(t, path, {"v", "w", "S"});
      EntranceSpec::Table& tab = p == Phase::plus ? es.plus : es.minus;
      detail::read(t, "v", path, tab.v);
      detail::read(t, "w", path, tab.w);
      detail::read(t, "S", path, tab.S);
    }
    if (es.preset != "none" && es.preset != "bumps" && es.preset != "samples" &&
        es.preset != "file") {
      detail::config_error("entrance.preset", "expected none, bumps, samples or file");
    }
    if (!(es.epsilon > 0.0 && es.epsilon < 0.1)) {
      detail::config_error("entrance.epsilon", "support width must lie in (0, 0.1)");
    }
    if (es.samples < 5) detail::config_error("entrance.samples", "need at least 5 samples");
    if (es.sigma && !(*es.sigma >= 0.0)) detail::config_error("entrance.sigma", "must be >= 0");
    if (es.preset == "file" && es.file.empty()) {
      detail::config_error("entrance.file", "required when preset is file");
    }
  }

  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    detail::reject_unknown(s, "solver",
                           {"nx", "ns_plus", "ns_minus", "length", "lengths", "tol_outer", "tol_fb",
                            "tol_picard", "tol_algebraic", "omega", "omega_f", "max_outer",
                            "max_middle", "max_inner", "axial_floor"});
    SolverConfig& sc = cfg.solver;
    detail::read(s, "nx", "solver", sc.nx);
    detail::read(s, "ns_plus", "solver", sc.ns_plus);
    detail::read(s, "ns_minus", "solver", sc.ns_minus);
    detail::read(s, "length", "solver", sc.length);
    detail::read(s, "lengths", "solver", sc.lengths);
    detail::read(s, "tol_outer", "solver", sc.tol_outer);
    detail::read(s, "tol_fb", "solver", sc.tol_fb);
    detail::read(s, "tol_picard", "solver", sc.tol_picard);
    detail::read(s, "tol_algebraic", "solver", sc.tol_algebraic);
    detail::read(s, "omega", "solver", sc.omega);
    detail::read(s, "omega_f", "solver", sc.omega_f);
    detail::read(s, "max_outer", "solver", sc.max_outer);
    detail::read(s, "max_middle", "solver", sc.max_middle);
    detail::read(s, "max_inner", "solver", sc.max_inner);
    detail::read(s, "axial_floor", "solver", sc.axial_floor);
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    detail::reject_unknown(o, "output", {"directory", "fields"});
    detail::read(o, "directory", "output", cfg.output.directory);
    detail::read(o, "fields", "output", cfg.output.fields);
  }

  if (doc.contains("study")) {
    const json& st = doc["study"];
    detail::reject_unknown(st, "study", {"sigmas"});
    detail::read(st, "sigmas", "study", cfg.sigmas);
  }

  cfg.constants.validate();
  cfg.solver.validate();
  return cfg;
}

inline std::string serialize_config(const RunConfig& cfg) {
  using detail::json;
  json doc;
  doc["format_version"] = cfg.format_version;
  const FlowConstants& c = cfg.constants;
  doc["constants"] = {{"gamma", c.gamma},         {"rho0_plus", c.rho0_plus},
                      {"rho0_minus", c.rho0_minus}, {"u0_plus", c.u0_plus},
                      {"u0_minus", c.u0_minus},   {"p0", c.p0}};
  const EntranceSpec& e = cfg.entrance;
  json ent = {{"preset", e.preset}, {"epsilon", e.epsilon}, {"samples", e.samples}};
  if (e.sigma) ent["sigma"] = *e.sigma;
  const BumpAmplitudes& a = e.amplitudes;
  ent["amplitudes"] = {{"S_plus", a.S_plus},   {"w_plus", a.w_plus},   {"v_plus", a.v_plus},
                       {"S_minus", a.S_minus}, {"w_minus", a.w_minus}, {"v_minus", a.v_minus}};
  if (!e.file.empty()) ent["file"] = e.file;
  for (Phase p : {Phase::plus, Phase::minus}) {
    const EntranceSpec::Table& t = p == Phase::plus ? e.plus : e.minus;
    if (!t.v.empty() || !t.w.empty() || !t.S.empty()) {
      ent[phase_name(p)] = {{"v", t.v}, {"w", t.w}, {"S", t.S}};
    }
  }
  doc["entrance"] = ent;
  const SolverConfig& s = cfg.solver;
  json sol = {{"nx", s.nx},
              {"ns_plus", s.ns_plus},
              {"ns_minus", s.ns_minus},
              {"length", s.length},
              {"tol_outer", s.tol_outer},
              {"tol_fb", s.tol_fb},
              {"tol_picard", s.tol_picard},
              {"tol_algebraic", s.tol_algebraic},
              {"omega", s.omega},
              {"omega_f", s.omega_f},
              {"max_outer", s.max_outer},
              {"max_middle", s.max_middle},
              {"max_inner", s.max_inner},
              {"axial_floor", s.axial_floor}};
  if (!s.lengths.empty()) sol["lengths"] = s.lengths;
  doc["solver"] = sol;
  doc["output"] = {{"directory", cfg.output.directory}, {"fields", cfg.output.fields}};
  doc["study"] = {{"sigmas", cfg.sigmas}};
  return doc.dump(2) + "\n";
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path));
}

// ---------------------------------------------------------------------------
// Entrance data

namespace detail {

inline double parse_number(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(ErrorKind::IoError, where + ": cannot parse number '" + std::string(tok) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= line.size()) {
    const std::size_t end = line.find(delim, start);
    const std::size_t stop = end == std::string_view::npos ? line.size() : end;
    std::string_view tok = line.substr(start, stop - start);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) {
      tok.remove_suffix(1);
    }
    if (delim != ' ' || !tok.empty()) out.push_back(tok);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

//! Uniform samples over the phase interval from a table keyed by radius.
inline PhaseEntrance phase_from_samples(Phase p, const EntranceSpec::Table& t,
                                        const std::string& where) {
  const std::size_t n = t.v.size();
  if (n < 5 || t.w.size() != n || t.S.size() != n) {
    fail(ErrorKind::ConfigError, where + ": v, w and S need the same length (>= 5)");
  }
  const double lo = p == Phase::minus ? 0.0 : 0.5;
  const double hi = p == Phase::minus ? 0.5 : 1.0;
  return {RadialProfile(lo, hi, t.v), RadialProfile(lo, hi, t.w), RadialProfile(lo, hi, t.S)};
}

//! Whitespace table with header `phase r v w S`; radii uniform per phase.
inline std::pair<EntranceSpec::Table, EntranceSpec::Table> read_profile_table(
    const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  EntranceSpec::Table plus, minus;
  std::vector<double> r_plus, r_minus;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tok = split(line, ' ');
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 5 || tok[0] != "phase" || tok[1] != "r" || tok[2] != "v" || tok[3] != "w" ||
          tok[4] != "S") {
        fail(ErrorKind::IoError, path.string() + ": expected header 'phase r v w S'");
      }
      header = true;
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (tok.size() != 5) fail(ErrorKind::IoError, where + ": expected 5 columns");
    const bool is_plus = tok[0] == "plus";
    if (!is_plus && tok[0] != "minus") fail(ErrorKind::IoError, where + ": unknown phase");
    EntranceSpec::Table& t = is_plus ? plus : minus;
    (is_plus ? r_plus : r_minus).push_back(parse_number(tok[1], where));
    t.v.push_back(parse_number(tok[2], where));
    t.w.push_back(parse_number(tok[3], where));
    t.S.push_back(parse_number(tok[4], where));
  }
  auto check_uniform = [&](const std::vector<double>& r, double lo, double hi, const char* name) {
    if (r.size() < 5) fail(ErrorKind::ConfigError, path.string() + ": too few " + name + " rows");
    const double h = (hi - lo) / static_cast<double>(r.size() - 1);
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (std::abs(r[k] - (lo + k * h)) > 1e-12) {
        fail(ErrorKind::ConfigError, path.string() + ": " + name +
                                         " radii must be uniform over the phase interval");
      }
    }
  };
  check_uniform(r_plus, 0.5, 1.0, "plus");
  check_uniform(r_minus, 0.0, 0.5, "minus");
  return {plus, minus};
}

}  // namespace detail

//! Entrance profiles described by the config, with the support conditions checked.
inline EntranceProfiles build_entrance(const RunConfig& cfg,
                                       const std::filesystem::path& base_dir = ".") {
  const EntranceSpec& e = cfg.entrance;
  const FlowConstants& c = cfg.constants;
  EntranceProfiles out;
  if (e.preset == "none") {
    out = EntranceProfiles::background(c, e.samples);
  } else if (e.preset == "bumps") {
    out = e.sigma ? EntranceProfiles::bumps_with_sigma(c, e.amplitudes, *e.sigma, e.samples)
                  : EntranceProfiles::bumps(c, e.amplitudes, e.samples);
  } else {
    EntranceSpec::Table plus = e.plus, minus = e.minus;
    if (e.preset == "file") {
      const std::filesystem::path p =
          std::filesystem::path(e.file).is_absolute() ? std::filesystem::path(e.file) : base_dir / e.file;
      std::tie(plus, minus) = detail::read_profile_table(p);
    }
    out = EntranceProfiles(detail::phase_from_samples(Phase::plus, plus, "entrance.plus"),
                           detail::phase_from_samples(Phase::minus, minus, "entrance.minus"));
  }
  out.validate_support(e.epsilon);
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
  if (!std::isfinite(v)) fail(ErrorKind::IoError, "refusing to write a non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

inline const char* kFieldHeader = "x,r,S,Lambda,phi,psi,rho,u_x,u_r,u_theta,p,phi_hat";

}  // namespace detail

inline std::string interface_text(const InterfaceCurve& f) {
  std::string s = "# axicd interface format_version=" + std::to_string(kFormatVersion) + "\n# x f\n";
  for (int i = 0; i < f.size(); ++i) s += format_number(f.x(i)) + " " + format_number(f.f(i)) + "\n";
  return s;
}

inline std::string field_text(const FlowConstants& c, const PhaseFlow& pf) {
  const MappedGrid& g = pf.grid;
  std::string s = "# axicd fields format_version=" + std::to_string(kFormatVersion) +
                  " phase=" + phase_name(g.phase()) + " nx=" + std::to_string(g.nx()) +
                  " ns=" + std::to_string(g.ns()) + "\n";
  s += detail::kFieldHeader;
  s += "\n";
  const double u0 = c.u0(g.phase());
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      const double vals[] = {g.x(i),
                             g.r(i, j),
                             pf.S(i, j),
                             pf.Lambda(i, j),
                             u0 * g.x(i) + pf.phi(i, j),
                             pf.psi(i, j),
                             pf.rho(i, j),
                             pf.velocity.x(i, j),
                             pf.velocity.r(i, j),
                             pf.velocity.theta(i, j),
                             pf.p(i, j),
                             pf.phi(i, j)};
      for (std::size_t k = 0; k < std::size(vals); ++k) {
        if (k) s += ',';
        s += format_number(vals[k]);
      }
      s += '\n';
    }
  }
  return s;
}

inline std::string summary_text(const Solution& sol) {
  std::string s = "# axicd summary format_version=" + std::to_string(kFormatVersion) + "\n";
  auto line = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  line("sigma", format_number(sol.sigma));
  line("length", format_number(sol.f.length()));
  line("nx", std::to_string(sol.f.size()));
  line("ns_plus", std::to_string(sol.plus.grid.ns()));
  line("ns_minus", std::to_string(sol.minus.grid.ns()));
  line("outer_iterations", std::to_string(sol.outer_iterations()));
  for (std::size_t k = 0; k < sol.history.size(); ++k) {
    const OuterRecord& r = sol.history[k];
    std::string inc;
    for (double v : r.middle_increments) inc += (inc.empty() ? "" : " ") + format_number(v);
    const std::string key = "history." + std::to_string(k + 1);
    line(key + ".change", format_number(r.change));
    line(key + ".picard_sweeps", std::to_string(r.picard_sweeps));
    line(key + ".middle_increments", inc);
  }
  for (const auto& [k, v] : sol.diagnostics.entries()) line(k, format_number(v));
  return s;
}

//! Writes interface.txt, fields_plus.csv, fields_minus.csv, summary.txt and
//! the effective config.json into `dir`.
inline void write_solution(const Solution& sol, const RunConfig& cfg,
                           const std::filesystem::path& dir, bool fields = true) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  detail::write_file(dir / "config.json", serialize_config(cfg));
  detail::write_file(dir / "interface.txt", interface_text(sol.f));
  if (fields) {
    detail::write_file(dir / "fields_plus.csv", field_text(sol.constants, sol.plus));
    detail::write_file(dir / "fields_minus.csv", field_text(sol.constants, sol.minus));
  }
  detail::write_file(dir / "summary.txt", summary_text(sol));
}

// ---------------------------------------------------------------------------
// Readers

inline InterfaceCurve read_interface(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  std::vector<double> x, f;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tok = detail::split(line, ' ');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (tok.size() != 2) fail(ErrorKind::IoError, where + ": expected two columns");
    x.push_back(detail::parse_number(tok[0], where));
    f.push_back(detail::parse_number(tok[1], where));
  }
  if (x.size() < 4) fail(ErrorKind::IoError, path.string() + ": too few rows");
  return InterfaceCurve(x.back(), std::move(f));
}

//! Field table as named columns, rows in file order.
struct FieldTable {
  Phase phase = Phase::plus;
  int nx = 0;
  int ns = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[column][row]

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] == name) return data[k];
    }
    fail(ErrorKind::IoError, "missing column " + name);
  }
};

inline FieldTable read_field_table(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  FieldTable t;
  if (!std::getline(in, line) || line.rfind("# axicd fields", 0) != 0) {
    fail(ErrorKind::IoError, path.string() + ": missing field-file preamble");
  }
  for (auto tok : detail::split(line, ' ')) {
    auto eq = tok.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto val = std::string(tok.substr(eq + 1));
    if (key == "phase") t.phase = val == "minus" ? Phase::minus : Phase::plus;
    if (key == "nx") t.nx = std::stoi(val);
    if (key == "ns") t.ns = std::stoi(val);
    if (key == "format_version" && std::stoi(val) != kFormatVersion) {
      fail(ErrorKind::IoError, path.string() + ": unsupported format_version " + val);
    }
  }
  if (!std::getline(in, line)) fail(ErrorKind::IoError, path.string() + ": missing header");
  for (auto tok : detail::split(line, ',')) t.columns.emplace_back(tok);
  t.data.assign(t.columns.size(), {});
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tok = detail::split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (tok.size() != t.columns.size()) fail(ErrorKind::IoError, where + ": column count mismatch");
    for (std::size_t k = 0; k < tok.size(); ++k) t.data[k].push_back(detail::parse_number(tok[k], where));
  }
  if (t.data.empty() || t.data[0].size() != static_cast<std::size_t>(t.nx) * t.ns) {
    fail(ErrorKind::IoError, path.string() + ": row count does not match nx * ns");
  }
  return t;
}

//! Rebuild a phase from its field table on the grid fitted to `f`.
inline PhaseFlow phase_from_table(const FieldTable& t, const InterfaceCurve& f) {
  PhaseFlow pf;
  pf.grid = MappedGrid(t.phase, f, t.ns);
  if (pf.grid.nx() != t.nx) fail(ErrorKind::IoError, "field table and interface disagree on nx");
  const auto& xs = t.column("x");
  const auto& rs = t.column("r");
  for (int k = 0; k < pf.grid.nodes(); ++k) {
    const int i = k / t.ns, j = k % t.ns;
    if (xs[k] != pf.grid.x(i) || rs[k] != pf.grid.r(i, j)) {
      fail(ErrorKind::IoError, "field table node positions do not match the interface grid");
    }
  }
  auto field = [&](const char* name) {
    Field2D out(t.nx, t.ns);
    out.data = t.column(name);
    return out;
  };
  pf.S = field("S");
  pf.Lambda = field("Lambda");
  pf.phi = field("phi_hat");
  pf.psi = field("psi");
  pf.rho = field("rho");
  pf.p = field("p");
  pf.velocity.x = field("u_x");
  pf.velocity.r = field("u_r");
  pf.velocity.theta = field("u_theta");
  return pf;
}

//! `key = value` lines of a summary file.
inline std::map<std::string, std::string> read_summary(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) fail(ErrorKind::IoError, path.string() + ": bad line '" + line + "'");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

//! Reload a written solution directory (config, interface, fields).
inline Solution load_solution(const std::filesystem::path& dir) {
  const RunConfig cfg = load_config(dir / "config.json");
  Solution sol;
  sol.constants = cfg.constants;
  sol.entrance = build_entrance(cfg, dir);
  sol.sigma = sol.entrance.sigma(cfg.constants);
  sol.f = read_interface(dir / "interface.txt");
  sol.plus = phase_from_table(read_field_table(dir / "fields_plus.csv"), sol.f);
  sol.minus = phase_from_table(read_field_table(dir / "fields_minus.csv"), sol.f);
  return sol;
}

struct ResidualCheck {
  Diagnostics recomputed;
  double max_mismatch = 0.0;
  std::string worst_key;
};

//! Recompute diagnostics from saved outputs and compare with the summary.
inline ResidualCheck recompute_residuals(const std::filesystem::path& dir) {
  const Solution sol = load_solution(dir);
  const auto summary = read_summary(dir / "summary.txt");
  ResidualCheck rc;
  rc.recomputed = diagnostics(sol);
  for (const auto& [k, v] : rc.recomputed.entries()) {
    const auto it = summary.find(k);
    if (it == summary.end()) fail(ErrorKind::IoError, "summary lacks " + k);
    const double stored = detail::parse_number(it->second, "summary " + k);
    const double mismatch = std::abs(stored - v) / std::max(1.0, std::abs(stored));
    if (mismatch >= rc.max_mismatch) {
      rc.max_mismatch = mismatch;
      rc.worst_key = k;
    }
  }
  return rc;
}

}  // namespace axicd
