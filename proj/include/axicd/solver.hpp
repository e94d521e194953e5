#pragma once

// Nested fixed-point iteration for the truncated two-phase problem:
//   outer   transport of S and Lambda along the current streamlines
//   middle  elliptic solves on the current interface, then the mass-flux update of f
//   inner   Picard on the potential and the potential/stream coupling per phase
// plus reconstruction of the physical state and its residual diagnostics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "axicd/elliptic.hpp"
#include "axicd/eos.hpp"
#include "axicd/errors.hpp"
#include "axicd/geometry.hpp"
#include "axicd/interface.hpp"
#include "axicd/profiles.hpp"
#include "axicd/transport.hpp"

namespace axicd {

struct SolverConfig {
  int nx = 64;
  int ns_plus = 64;
  int ns_minus = 64;
  double length = 10.0;
  std::vector<double> lengths;  // for length sweeps

  double tol_outer = 1e-12;
  double tol_fb = 1e-12;
  double tol_picard = 1e-10;
  double tol_algebraic = 1e-11;

  double omega = 1.0;    // Picard damping
  double omega_f = 1.0;  // interface under-relaxation

  int max_outer = 100;
  int max_middle = 200;
  int max_inner = 100;

  double axial_floor = 0.0;  // <= 0 selects 0.1 min(rho0 u0)
  int verbosity = 0;

  double floor_for(const FlowConstants& c) const {
    if (axial_floor > 0.0) return axial_floor;
    return 0.1 * std::min(c.rho0_plus * c.u0_plus, c.rho0_minus * c.u0_minus);
  }

  void validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::ConfigError, "solver." + what); };
    if (nx < 8) bad("nx must be at least 8");
    if (ns_plus < 8 || ns_minus < 8) bad("ns_plus and ns_minus must be at least 8");
    if (!(length > 0.0)) bad("length must be positive");
    for (double t : {tol_outer, tol_fb, tol_picard, tol_algebraic}) {
      if (!(t > 0.0)) bad("tolerances must be positive");
    }
    if (!(omega > 0.0 && omega <= 1.0)) bad("omega must lie in (0, 1]");
    if (!(omega_f > 0.0 && omega_f <= 1.0)) bad("omega_f must lie in (0, 1]");
    if (max_outer < 1 || max_middle < 1 || max_inner < 1) bad("iteration caps must be >= 1");
    for (std::size_t k = 1; k < lengths.size(); ++k) {
      if (!(lengths[k] > lengths[k - 1])) bad("lengths must be increasing");
    }
  }
};

//! One phase's unknowns and the physical state rebuilt from them.
struct PhaseFlow {
  MappedGrid grid;
  Field2D S, Lambda, phi, psi;  // phi is the perturbation of u0 x
  VectorField velocity;
  Field2D rho, p;
};

inline void reconstruct(const FlowConstants& c, PhaseFlow& pf) {
  const MappedGrid& g = pf.grid;
  const Phase phase = g.phase();
  const VectorField grad = potential_gradient(g, pf.phi);
  const VectorField rot = rotational_velocity(g, pf.psi, pf.Lambda);
  pf.velocity = VectorField(g.nx(), g.ns());
  pf.rho = Field2D(g.nx(), g.ns());
  pf.p = Field2D(g.nx(), g.ns());
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      const Vec3 u{c.u0(phase) + grad.x(i, j) + rot.x(i, j), grad.r(i, j) + rot.r(i, j),
                   rot.theta(i, j)};
      pf.velocity.x(i, j) = u[0];
      pf.velocity.r(i, j) = u[1];
      pf.velocity.theta(i, j) = u[2];
      const double rho = density(c, phase, pf.S(i, j), u);
      pf.rho(i, j) = rho;
      pf.p(i, j) = pf.S(i, j) * std::pow(rho, c.gamma);
    }
  }
}

inline Field2D axial_mass_flux(const PhaseFlow& pf) {
  Field2D out(pf.grid.nx(), pf.grid.ns());
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] = pf.rho.data[k] * pf.velocity.x.data[k];
  return out;
}

// ---------------------------------------------------------------------------

struct EulerResiduals {
  double continuity = 0.0;
  double momentum_x = 0.0;
  double momentum_r = 0.0;
  double momentum_theta = 0.0;
  double energy = 0.0;

  double max() const { return std::max({continuity, momentum_x, momentum_r, momentum_theta, energy}); }
};

//! Sup norms of the perturbation fields for the estimate ledger.
struct Ledger {
  double f = 0.0;  // discrete C2 deviation of f from 1/2
  double S_plus = 0.0, S_minus = 0.0;
  double swirl_plus = 0.0, swirl_minus = 0.0;  // Lambda / r
  double phi_plus = 0.0, phi_minus = 0.0;
  double psi_plus = 0.0, psi_minus = 0.0;

  std::vector<std::pair<std::string, double>> entries() const {
    return {{"f", f},
            {"S_plus", S_plus},
            {"S_minus", S_minus},
            {"swirl_plus", swirl_plus},
            {"swirl_minus", swirl_minus},
            {"phi_plus", phi_plus},
            {"phi_minus", phi_minus},
            {"psi_plus", psi_plus},
            {"psi_minus", psi_minus}};
  }
};

struct Diagnostics {
  EulerResiduals plus, minus;
  double pressure_jump = 0.0;
  double normal_velocity_plus = 0.0;
  double normal_velocity_minus = 0.0;
  double wall_slip = 0.0;
  double entrance_v = 0.0;
  double entrance_w = 0.0;
  double entrance_S = 0.0;
  double bernoulli = 0.0;
  double min_subsonic_margin = 1.0;
  double max_mach = 0.0;
  double min_density = 0.0;
  double exit_slope = 0.0;
  double entrance_flux_defect = 0.0;  // max over x of the minus-phase mass-flux mismatch
  Ledger ledger;

  double max_euler() const { return std::max(plus.max(), minus.max()); }

  //! Every quantity that must vanish for an exact solution.
  double max_residual() const {
    return std::max({max_euler(), pressure_jump, normal_velocity_plus, normal_velocity_minus,
                     wall_slip, entrance_v, entrance_w, entrance_S, bernoulli, exit_slope,
                     entrance_flux_defect});
  }

  std::vector<std::pair<std::string, double>> entries() const {
    std::vector<std::pair<std::string, double>> e{
        {"euler.plus.continuity", plus.continuity},
        {"euler.plus.momentum_x", plus.momentum_x},
        {"euler.plus.momentum_r", plus.momentum_r},
        {"euler.plus.momentum_theta", plus.momentum_theta},
        {"euler.plus.energy", plus.energy},
        {"euler.minus.continuity", minus.continuity},
        {"euler.minus.momentum_x", minus.momentum_x},
        {"euler.minus.momentum_r", minus.momentum_r},
        {"euler.minus.momentum_theta", minus.momentum_theta},
        {"euler.minus.energy", minus.energy},
        {"interface.pressure_jump", pressure_jump},
        {"interface.normal_velocity_plus", normal_velocity_plus},
        {"interface.normal_velocity_minus", normal_velocity_minus},
        {"interface.exit_slope", exit_slope},
        {"interface.flux_defect", entrance_flux_defect},
        {"wall.slip", wall_slip},
        {"entrance.v", entrance_v},
        {"entrance.w", entrance_w},
        {"entrance.S", entrance_S},
        {"bernoulli.deviation", bernoulli},
        {"admissibility.min_subsonic_margin", min_subsonic_margin},
        {"admissibility.max_mach", max_mach},
        {"admissibility.min_density", min_density}};
    for (const auto& [k, v] : ledger.entries()) e.emplace_back("ledger." + k, v);
    return e;
  }
};

struct OuterRecord {
  double change = 0.0;
  std::vector<double> middle_increments;
  int picard_sweeps = 0;
};

struct Solution {
  FlowConstants constants;
  EntranceProfiles entrance;
  double sigma = 0.0;
  InterfaceCurve f;
  PhaseFlow plus;
  PhaseFlow minus;
  std::vector<OuterRecord> history;
  Diagnostics diagnostics;
  double elapsed = 0.0;

  const PhaseFlow& phase(Phase p) const { return p == Phase::plus ? plus : minus; }
  int outer_iterations() const { return static_cast<int>(history.size()); }

  //! Geometric mean ratio of successive middle-loop increments in the first
  //! outer sweep, using increments above `floor`. Zero if fewer than two.
  double middle_contraction(double floor) const {
    if (history.empty()) return 0.0;
    std::vector<double> inc;
    for (double v : history.front().middle_increments) {
      if (v > floor) inc.push_back(v);
    }
    if (inc.size() < 2) return 0.0;
    return std::pow(inc.back() / inc.front(), 1.0 / static_cast<double>(inc.size() - 1));
  }
};

namespace detail {

inline bool is_interior(const MappedGrid& g, int i, int j) {
  if (i == 0 || i == g.nx() - 1) return false;
  if (j == g.interface_row()) return false;
  if (!g.has_axis() && j == g.outer_row()) return false;
  return true;
}

inline EulerResiduals euler_residuals(const FlowConstants& c, const PhaseFlow& pf) {
  const MappedGrid& g = pf.grid;
  const int nx = g.nx(), ns = g.ns();
  Field2D mass_x(nx, ns), mass_r(nx, ns), mxx(nx, ns), mxr(nx, ns), mrr(nx, ns), mtx(nx, ns),
      mtr(nx, ns), ex(nx, ns), er(nx, ns);
  const double gg = c.gamma;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ns; ++j) {
      const double rho = pf.rho(i, j), p = pf.p(i, j);
      const double ux = pf.velocity.x(i, j), ur = pf.velocity.r(i, j), ut = pf.velocity.theta(i, j);
      const double B = 0.5 * (ux * ux + ur * ur + ut * ut) + gg * p / ((gg - 1.0) * rho);
      mass_x(i, j) = rho * ux;
      mass_r(i, j) = rho * ur;
      mxx(i, j) = rho * ux * ux + p;
      mxr(i, j) = rho * ux * ur;
      mrr(i, j) = rho * ur * ur + p;
      mtx(i, j) = rho * ux * ut;
      mtr(i, j) = rho * ur * ut;
      ex(i, j) = rho * ux * B;
      er(i, j) = rho * ur * B;
    }
  }
  using stencil::d_dr;
  using stencil::d_dx;
  const Parity E = Parity::even, O = Parity::odd;
  EulerResiduals res;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ns; ++j) {
      if (!is_interior(g, i, j)) continue;
      const double r = g.r(i, j);
      const double rho = pf.rho(i, j);
      const double ut = pf.velocity.theta(i, j);
      const double cont = d_dx(g, i, j, E).apply(mass_x) + d_dr(g, i, j, O).apply(mass_r) +
                          mass_r(i, j) / r;
      const double momx = d_dx(g, i, j, E).apply(mxx) + d_dr(g, i, j, O).apply(mxr) + mxr(i, j) / r;
      const double momr = d_dx(g, i, j, O).apply(mxr) + d_dr(g, i, j, E).apply(mrr) +
                          (mrr(i, j) - pf.p(i, j)) / r - rho * ut * ut / r;
      const double momt = d_dx(g, i, j, O).apply(mtx) + d_dr(g, i, j, E).apply(mtr) +
                          2.0 * mtr(i, j) / r;
      const double en = d_dx(g, i, j, E).apply(ex) + d_dr(g, i, j, O).apply(er) + er(i, j) / r;
      res.continuity = std::max(res.continuity, std::abs(cont));
      res.momentum_x = std::max(res.momentum_x, std::abs(momx));
      res.momentum_r = std::max(res.momentum_r, std::abs(momr));
      res.momentum_theta = std::max(res.momentum_theta, std::abs(momt));
      res.energy = std::max(res.energy, std::abs(en));
    }
  }
  return res;
}

}  // namespace detail

//! Residual report of a reconstructed solution. Reads only the curve, the
//! entrance data and the stored fields, so saved outputs reproduce it.
inline Diagnostics diagnostics(const Solution& sol) {
  const FlowConstants& c = sol.constants;
  Diagnostics d;
  d.plus = detail::euler_residuals(c, sol.plus);
  d.minus = detail::euler_residuals(c, sol.minus);

  const auto frame = interface_frame(sol.f);
  const int ip = sol.plus.grid.interface_row();
  const int im = sol.minus.grid.interface_row();
  for (int i = 0; i < sol.f.size(); ++i) {
    d.pressure_jump = std::max(d.pressure_jump, std::abs(sol.plus.p(i, ip) - sol.minus.p(i, im)));
    d.normal_velocity_plus =
        std::max(d.normal_velocity_plus, std::abs(dot(sol.plus.velocity.at(i, ip), frame[i].n_plus)));
    d.normal_velocity_minus = std::max(
        d.normal_velocity_minus, std::abs(dot(sol.minus.velocity.at(i, im), frame[i].n_minus)));
    d.wall_slip = std::max(d.wall_slip, std::abs(sol.plus.velocity.r(i, sol.plus.grid.outer_row())));
  }
  d.exit_slope = std::abs(sol.f.slope(sol.f.size() - 1));

  d.min_density = std::numeric_limits<double>::infinity();
  d.min_subsonic_margin = std::numeric_limits<double>::infinity();
  for (Phase ph : {Phase::plus, Phase::minus}) {
    const PhaseFlow& pf = sol.phase(ph);
    const MappedGrid& g = pf.grid;
    const PhaseEntrance& en = sol.entrance.phase(ph);
    for (int j = 0; j < g.ns(); ++j) {
      const double r = g.r(0, j);
      d.entrance_v = std::max(d.entrance_v, std::abs(-pf.velocity.r(0, j) - en.v(r)));
      d.entrance_w = std::max(d.entrance_w, std::abs(pf.velocity.theta(0, j) - en.w(r)));
      d.entrance_S = std::max(d.entrance_S, std::abs(pf.S(0, j) - en.S(r)));
    }
    double sup_S = 0.0, sup_swirl = 0.0, sup_phi = 0.0, sup_psi = 0.0;
    for (int i = 0; i < g.nx(); ++i) {
      for (int j = 0; j < g.ns(); ++j) {
        const double rho = pf.rho(i, j), p = pf.p(i, j);
        const Vec3 u = pf.velocity.at(i, j);
        const double B = 0.5 * dot(u, u) + c.gamma * p / ((c.gamma - 1.0) * rho);
        d.bernoulli = std::max(d.bernoulli, std::abs(B - c.B0(ph)));
        const double sound = std::sqrt(c.gamma * p / rho);
        const double mach = norm(u) / sound;
        d.max_mach = std::max(d.max_mach, mach);
        d.min_subsonic_margin = std::min(d.min_subsonic_margin, 1.0 - mach);
        d.min_density = std::min(d.min_density, rho);
        sup_S = std::max(sup_S, std::abs(pf.S(i, j) - c.S0(ph)));
        sup_swirl = std::max(sup_swirl, std::abs(pf.Lambda(i, j) / g.r(i, j)));
        sup_phi = std::max(sup_phi, std::abs(pf.phi(i, j)));
        sup_psi = std::max(sup_psi, std::abs(pf.psi(i, j)));
      }
    }
    (ph == Phase::plus ? d.ledger.S_plus : d.ledger.S_minus) = sup_S;
    (ph == Phase::plus ? d.ledger.swirl_plus : d.ledger.swirl_minus) = sup_swirl;
    (ph == Phase::plus ? d.ledger.phi_plus : d.ledger.phi_minus) = sup_phi;
    (ph == Phase::plus ? d.ledger.psi_plus : d.ledger.psi_minus) = sup_psi;
  }
  d.ledger.f = sol.f.c2_deviation();

  // Minus-phase flux through [0, f(x)] against the entrance flux.
  const Field2D flux = axial_mass_flux(sol.minus);
  const StreamFunction sf =
      build_stream_function(sol.minus.grid, flux, -std::numeric_limits<double>::infinity());
  for (int i = 0; i < sol.f.size(); ++i) {
    d.entrance_flux_defect =
        std::max(d.entrance_flux_defect, std::abs(sf.values(i, im) - sf.values(0, im)));
  }
  return d;
}

// ---------------------------------------------------------------------------

namespace detail {

inline void log(const SolverConfig& cfg, int level, const std::string& msg) {
  if (cfg.verbosity >= level) std::clog << msg << '\n';
}

inline std::string where(int outer, int middle, const char* what) {
  return "[outer " + std::to_string(outer) + ", middle " + std::to_string(middle) + ", " + what + "] ";
}

//! Rethrow a submodule failure with loop context, keeping its kind.
template <class Fn>
auto annotate(const std::string& context, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const SolverError& e) {
    throw SolverError(e.kind(), context + e.message());
  }
}

struct PhaseState {
  ExtendedField S;
  ExtendedField Lambda;
};

inline PhaseState background_state(const FlowConstants& c, const MappedGrid& g) {
  return {ExtendedField(g, Field2D(g.nx(), g.ns(), c.S0(g.phase())), Parity::even),
          ExtendedField(g, Field2D(g.nx(), g.ns(), 0.0), Parity::odd)};
}

//! Coupled potential / stream solves of one phase on a fixed grid.
inline int solve_phase(const FlowConstants& c, const EntranceProfiles& entrance,
                       const SolverConfig& cfg, PhaseFlow& pf,
                       const std::vector<double>* robin_datum) {
  const MappedGrid& g = pf.grid;
  const Phase phase = g.phase();
  const EllipticOperator phi_op = potential_operator(c, g, cfg.tol_algebraic);
  const EllipticOperator psi_op = stream_operator(g, cfg.tol_algebraic);
  std::vector<double> entrance_potential(static_cast<std::size_t>(g.ns()));
  for (int j = 0; j < g.ns(); ++j) entrance_potential[j] = entrance.potential(phase, g.r(0, j));
  const BoundaryValues phi_bc = potential_values(c, g, std::move(entrance_potential));
  const BoundaryValues psi_bc =
      robin_datum ? stream_values(g, *robin_datum) : BoundaryValues::zeros(g);

  PicardSettings ps;
  ps.tol = cfg.tol_picard;
  ps.max_iterations = cfg.max_inner;
  ps.damping = cfg.omega;

  // dS/dr and dLambda/dr are frozen within the middle sweep.
  Field2D dS(g.nx(), g.ns()), dL(g.nx(), g.ns());
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      dS(i, j) = stencil::d_dr(g, i, j, Parity::even).apply(pf.S);
      dL(i, j) = stencil::d_dr(g, i, j, Parity::odd).apply(pf.Lambda);
    }
  }
  const double floor = cfg.floor_for(c);
  int sweeps = 0;
  for (int it = 1; it <= cfg.max_inner; ++it) {
    const Field2D phi_prev = pf.phi;
    VectorField rot = rotational_velocity(g, pf.psi, pf.Lambda);
    PicardReport rep;
    pf.phi = solve_phi(c, phi_op, phi_bc, pf.S, rot, pf.phi, ps, &rep);
    sweeps += rep.iterations;

    const VectorField grad = potential_gradient(g, pf.phi);
    Field2D G(g.nx(), g.ns());
    for (int i = 0; i < g.nx(); ++i) {
      for (int j = 0; j < g.ns(); ++j) {
        if (!is_interior(g, i, j)) continue;
        const Vec3 grad_full{c.u0(phase) + grad.x(i, j), grad.r(i, j), 0.0};
        G(i, j) = vorticity_source(c, phase, pf.S(i, j), pf.Lambda(i, j), dS(i, j), dL(i, j),
                                   grad_full, rot.at(i, j), g.r(i, j), floor);
      }
    }
    const Field2D psi = solve_psi(psi_op, G, psi_bc);
    const double change = std::max(max_abs_diff(psi, pf.psi), max_abs_diff(pf.phi, phi_prev));
    pf.psi = psi;
    if (change < cfg.tol_picard) return sweeps;
  }
  fail(ErrorKind::PicardDiverged, std::string("potential/stream coupling did not settle in ") +
                                      phase_name(phase) + " phase");
}

struct MiddleResult {
  InterfaceCurve f;
  PhaseFlow plus;
  PhaseFlow minus;
  std::vector<double> increments;
  int picard_sweeps = 0;
};

inline MiddleResult run_middle(const FlowConstants& c, const EntranceProfiles& entrance,
                               const SolverConfig& cfg, const PhaseState& star_plus,
                               const PhaseState& star_minus, InterfaceCurve f,
                               const PhaseFlow* warm_plus, const PhaseFlow* warm_minus, int outer) {
  MiddleResult out;
  double omega_f = cfg.omega_f;
  double prev_increment = std::numeric_limits<double>::infinity();
  const double floor = cfg.floor_for(c);
  std::optional<PhaseFlow> last_plus, last_minus;

  for (int m = 1; m <= cfg.max_middle; ++m) {
    const GridPair grids =
        annotate(where(outer, m, "grids"), [&] { return build_grids(f, cfg.ns_plus, cfg.ns_minus); });

    auto prepare = [&](const MappedGrid& g, const PhaseState& star, const PhaseFlow* warm) {
      PhaseFlow pf;
      pf.grid = g;
      pf.S = star.S.on(g);
      pf.Lambda = star.Lambda.on(g);
      if (warm) {
        pf.phi = transfer_field(warm->grid, warm->phi, g, Parity::even);
        pf.psi = transfer_field(warm->grid, warm->psi, g, Parity::odd);
      } else {
        pf.phi = Field2D(g.nx(), g.ns());
        pf.psi = Field2D(g.nx(), g.ns());
      }
      return pf;
    };
    PhaseFlow plus = prepare(grids.plus, star_plus, last_plus ? &*last_plus : warm_plus);
    PhaseFlow minus = prepare(grids.minus, star_minus, last_minus ? &*last_minus : warm_minus);

    out.picard_sweeps += annotate(where(outer, m, "plus phase"), [&] {
      const int n = solve_phase(c, entrance, cfg, plus, nullptr);
      reconstruct(c, plus);
      return n;
    });

    const InterfaceData idata = annotate(where(outer, m, "interface"), [&] {
      std::vector<double> p_plus(f.size()), S_minus(f.size()), swirl(f.size());
      const int ip = plus.grid.interface_row();
      const int im = minus.grid.interface_row();
      for (int i = 0; i < f.size(); ++i) {
        p_plus[i] = plus.p(i, ip);
        S_minus[i] = minus.S(i, im);
        swirl[i] = minus.Lambda(i, im) / minus.grid.r(i, im);
      }
      return interface_data(c, f, std::move(p_plus), std::move(S_minus), std::move(swirl));
    });

    out.picard_sweeps += annotate(where(outer, m, "minus phase"), [&] {
      const int n = solve_phase(c, entrance, cfg, minus, &idata.A);
      reconstruct(c, minus);
      return n;
    });

    const Field2D flux = axial_mass_flux(minus);
    std::optional<InterfaceUpdate> upd;
    for (int attempt = 0; attempt < 12 && !upd; ++attempt) {
      try {
        upd = update_interface(c, minus.grid, flux, floor, omega_f);
      } catch (const SolverError& e) {
        if (e.kind() != ErrorKind::NegativeRadicand && e.kind() != ErrorKind::InterfaceEscape) {
          throw SolverError(e.kind(), where(outer, m, "interface update") + e.message());
        }
        omega_f *= 0.5;
        log(cfg, 1, where(outer, m, "interface update") + e.what() + "; omega_f -> " +
                        std::to_string(omega_f));
      }
    }
    if (!upd) fail(ErrorKind::FreeBoundaryDiverged, where(outer, m, "interface update") +
                                                        "under-relaxation exhausted");

    out.increments.push_back(upd->increment);
    log(cfg, 2, where(outer, m, "free boundary") + "increment " + std::to_string(upd->increment));
    if (upd->increment < cfg.tol_fb) {
      out.f = f;
      out.plus = std::move(plus);
      out.minus = std::move(minus);
      return out;
    }
    if (upd->increment > prev_increment) {
      omega_f *= 0.5;
      log(cfg, 1, where(outer, m, "free boundary") + "increment grew; omega_f -> " +
                      std::to_string(omega_f));
      if (omega_f < 1.0 / 1024.0) {
        fail(ErrorKind::FreeBoundaryDiverged, where(outer, m, "free boundary") +
                                                  "increments keep growing");
      }
    }
    prev_increment = upd->increment;
    f = upd->curve;
    last_plus = std::move(plus);
    last_minus = std::move(minus);
  }
  std::string hist;
  for (double v : out.increments) hist += " " + std::to_string(v);
  fail(ErrorKind::FreeBoundaryDiverged,
       where(outer, cfg.max_middle, "free boundary") + "no convergence; increments:" + hist);
}

}  // namespace detail

inline Solution solve_truncated(const FlowConstants& c, const EntranceProfiles& entrance,
                                const SolverConfig& cfg) {
  c.validate();
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Solution sol;
  sol.constants = c;
  sol.entrance = entrance;
  sol.sigma = entrance.sigma(c);

  InterfaceCurve f = InterfaceCurve::flat(cfg.length, cfg.nx);
  GridPair grids = build_grids(f, cfg.ns_plus, cfg.ns_minus);
  detail::PhaseState star_plus = detail::background_state(c, grids.plus);
  detail::PhaseState star_minus = detail::background_state(c, grids.minus);
  std::optional<PhaseFlow> warm_plus, warm_minus;

  for (int k = 1; k <= cfg.max_outer; ++k) {
    detail::MiddleResult mid = detail::run_middle(
        c, entrance, cfg, star_plus, star_minus, f, warm_plus ? &*warm_plus : nullptr,
        warm_minus ? &*warm_minus : nullptr, k);

    OuterRecord rec;
    rec.middle_increments = mid.increments;
    rec.picard_sweeps = mid.picard_sweeps;

    double change = 0.0;
    auto transport = [&](PhaseFlow& pf, detail::PhaseState& star) {
      const MappedGrid& g = pf.grid;
      const StreamFunction sf = build_stream_function(g, axial_mass_flux(pf), cfg.floor_for(c));
      TransportedFields tf = transport_fields(sf, entrance.phase(g.phase()));
      for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.ns(); ++j) {
          const double r = g.r(i, j);
          change = std::max({change, std::abs(tf.S(i, j) - pf.S(i, j)),
                             std::abs((tf.Lambda(i, j) - pf.Lambda(i, j)) / r)});
        }
      }
      ExtendedPair ext = extend_fields(g, std::move(tf.S), std::move(tf.Lambda));
      star = {std::move(ext.S), std::move(ext.Lambda)};
    };
    detail::annotate(detail::where(k, 0, "transport plus"), [&] { transport(mid.plus, star_plus); });
    detail::annotate(detail::where(k, 0, "transport minus"),
                     [&] { transport(mid.minus, star_minus); });
    rec.change = change;
    sol.history.push_back(rec);
    detail::log(cfg, 1, detail::where(k, static_cast<int>(mid.increments.size()), "outer") +
                            "change " + std::to_string(change));

    f = mid.f;
    if (change < cfg.tol_outer) {
      sol.f = mid.f;
      sol.plus = std::move(mid.plus);
      sol.minus = std::move(mid.minus);
      sol.diagnostics = diagnostics(sol);
      sol.elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return sol;
    }
    warm_plus = std::move(mid.plus);
    warm_minus = std::move(mid.minus);
  }
  std::string hist;
  for (const auto& r : sol.history) hist += " " + std::to_string(r.change);
  fail(ErrorKind::OuterDiverged, "transport loop did not converge; changes:" + hist);
}

// ---------------------------------------------------------------------------

struct FieldDiscrepancy {
  std::string name;
  double absolute = 0.0;
  double relative = 0.0;  // absolute over the larger sup norm of the two
};

struct LengthComparison {
  double length_a = 0.0;
  double length_b = 0.0;
  double window = 0.0;
  std::vector<FieldDiscrepancy> fields;

  double max_relative() const {
    double m = 0.0;
    for (const auto& f : fields) m = std::max(m, f.relative);
    return m;
  }
  double max_absolute() const {
    double m = 0.0;
    for (const auto& f : fields) m = std::max(m, f.absolute);
    return m;
  }
};

struct LengthSweep {
  std::vector<Solution> solutions;
  std::vector<LengthComparison> comparisons;
};

namespace detail {

//! Perturbation fields of a solution sampled on the window [0, window_nodes * hx].
struct WindowFields {
  std::vector<double> f;
  std::vector<std::pair<std::string, Field2D>> fields;
};

inline WindowFields window_fields(const Solution& sol, double hx, int nodes) {
  const double length = (nodes - 1) * hx;
  std::vector<double> fw(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) fw[i] = i == 0 ? 0.5 : sol.f.value_at(i * hx);
  const InterfaceCurve curve(length, fw);
  WindowFields out;
  for (int i = 0; i < nodes; ++i) out.f.push_back(fw[i] - 0.5);
  for (Phase ph : {Phase::plus, Phase::minus}) {
    const PhaseFlow& pf = sol.phase(ph);
    const MappedGrid dst(ph, curve, pf.grid.ns());
    const std::string tag = phase_name(ph);
    Field2D S = transfer_field(pf.grid, pf.S, dst, Parity::even);
    for (double& v : S.data) v -= sol.constants.S0(ph);
    Field2D swirl(pf.grid.nx(), pf.grid.ns());
    for (std::size_t k = 0; k < swirl.size(); ++k) {
      swirl.data[k] = pf.Lambda.data[k] / pf.grid.radii().data[k];
    }
    out.fields.emplace_back("S_" + tag, std::move(S));
    out.fields.emplace_back("swirl_" + tag, transfer_field(pf.grid, swirl, dst, Parity::even));
    out.fields.emplace_back("phi_" + tag, transfer_field(pf.grid, pf.phi, dst, Parity::even));
    out.fields.emplace_back("psi_" + tag, transfer_field(pf.grid, pf.psi, dst, Parity::odd));
  }
  return out;
}

inline FieldDiscrepancy discrepancy(std::string name, const std::vector<double>& a,
                                    const std::vector<double>& b) {
  double diff = 0.0, sup = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    sup = std::max({sup, std::abs(a[k]), std::abs(b[k])});
  }
  return {std::move(name), diff, sup > 0.0 ? diff / sup : 0.0};
}

}  // namespace detail

//! Compare two solutions on [0, window]; window <= 0 selects half the shorter length.
inline LengthComparison compare_lengths(const Solution& a, const Solution& b, double window = 0.0) {
  const double hx = a.f.dx();
  if (window <= 0.0) window = 0.5 * std::min(a.f.length(), b.f.length());
  const int nodes = static_cast<int>(std::floor(window / hx + 1e-9)) + 1;
  const auto wa = detail::window_fields(a, hx, nodes);
  const auto wb = detail::window_fields(b, hx, nodes);
  LengthComparison cmp{a.f.length(), b.f.length(), (nodes - 1) * hx, {}};
  cmp.fields.push_back(detail::discrepancy("f", wa.f, wb.f));
  for (std::size_t k = 0; k < wa.fields.size(); ++k) {
    cmp.fields.push_back(
        detail::discrepancy(wa.fields[k].first, wa.fields[k].second.data, wb.fields[k].second.data));
  }
  return cmp;
}

//! Axial node count keeping the spacing of the reference length. Lengths
//! that are not whole multiples of that spacing are rejected: a shifted
//! spacing changes the discretization error between runs and masks the
//! length dependence being measured.
inline int scaled_nodes(int nx, double reference_length, double length) {
  const double intervals = (nx - 1) * length / reference_length;
  if (std::abs(intervals - std::round(intervals)) > 1e-9 * intervals) {
    fail(ErrorKind::ConfigError, "solver.lengths: L = " + std::to_string(length) +
                                     " is not a multiple of the axial spacing " +
                                     std::to_string(reference_length / (nx - 1)));
  }
  return static_cast<int>(std::lround(intervals)) + 1;
}

inline LengthSweep solve_length_sweep(const FlowConstants& c, const EntranceProfiles& entrance,
                                      const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.lengths.size() < 2) fail(ErrorKind::ConfigError, "solver.lengths needs at least two entries");
  LengthSweep sweep;
  for (double L : cfg.lengths) {
    SolverConfig run = cfg;
    run.length = L;
    run.nx = scaled_nodes(cfg.nx, cfg.lengths.front(), L);
    sweep.solutions.push_back(solve_truncated(c, entrance, run));
  }
  for (std::size_t k = 1; k < sweep.solutions.size(); ++k) {
    sweep.comparisons.push_back(
        compare_lengths(sweep.solutions[k - 1], sweep.solutions[k], 0.5 * cfg.lengths.front()));
  }
  return sweep;
}

struct SigmaRow {
  double sigma = 0.0;
  Ledger ledger;
  int outer_iterations = 0;
};

struct SigmaStudy {
  std::vector<SigmaRow> rows;
  //! ratios[k][n] = ledger entry n of row k+1 over that of row k.
  std::vector<std::vector<std::pair<std::string, double>>> ratios;
};

inline SigmaStudy sigma_scaling_study(const FlowConstants& c, const BumpAmplitudes& shape,
                                      const std::vector<double>& sigmas, const SolverConfig& cfg,
                                      int samples = EntranceProfiles::kDefaultSamples) {
  SigmaStudy study;
  for (double s : sigmas) {
    const EntranceProfiles e = EntranceProfiles::bumps_with_sigma(c, shape, s, samples);
    const Solution sol = solve_truncated(c, e, cfg);
    study.rows.push_back({sol.sigma, sol.diagnostics.ledger, sol.outer_iterations()});
  }
  for (std::size_t k = 1; k < study.rows.size(); ++k) {
    const auto a = study.rows[k - 1].ledger.entries();
    const auto b = study.rows[k].ledger.entries();
    std::vector<std::pair<std::string, double>> r;
    for (std::size_t n = 0; n < a.size(); ++n) {
      r.emplace_back(a[n].first, a[n].second > 0.0 ? b[n].second / a[n].second : 0.0);
    }
    study.ratios.push_back(std::move(r));
  }
  return study;
}

}  // namespace axicd
