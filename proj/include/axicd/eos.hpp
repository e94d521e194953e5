#pragma once

// Polytropic-gas closures for the two flow phases, the background state,
// the vorticity source of the azimuthal stream equation, and the
// linearization of the mass flux about the background.

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "axicd/errors.hpp"

namespace axicd {

//! Vector in the cylindrical basis (e_x, e_r, e_theta).
using Vec3 = std::array<double, 3>;

inline constexpr Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline constexpr Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline constexpr double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

//! plus: the outer annulus f < r < 1; minus: the inner core 0 <= r < f.
enum class Phase { plus, minus };

inline const char* phase_name(Phase p) { return p == Phase::plus ? "plus" : "minus"; }

//! Physical background: two uniform axial streams at equal pressure.
struct FlowConstants {
  double gamma = 1.4;
  double rho0_plus = 0.8;
  double rho0_minus = 1.0;
  double u0_plus = 0.05;
  double u0_minus = 0.5;
  double p0 = 1.0;

  double rho0(Phase p) const { return p == Phase::plus ? rho0_plus : rho0_minus; }
  double u0(Phase p) const { return p == Phase::plus ? u0_plus : u0_minus; }
  double S0(Phase p) const { return p0 / std::pow(rho0(p), gamma); }
  double B0(Phase p) const {
    return 0.5 * u0(p) * u0(p) + gamma * p0 / ((gamma - 1.0) * rho0(p));
  }
  double c0(Phase p) const { return std::sqrt(gamma * p0 / rho0(p)); }
  double mach0(Phase p) const { return u0(p) / c0(p); }

  //! Throws ConfigError naming the first violated invariant.
  void validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::ConfigError, "constants: " + what); };
    if (!(gamma > 1.0)) bad("gamma must exceed 1");
    if (!(rho0_plus > 0.0) || !(rho0_minus > 0.0)) bad("background densities must be positive");
    if (!(p0 > 0.0)) bad("p0 must be positive");
    if (!(u0_plus > 0.0)) bad("u0_plus must be positive");
    if (!(u0_plus < u0_minus)) bad("require 0 < u0_plus < u0_minus");
    for (Phase p : {Phase::plus, Phase::minus}) {
      if (!(mach0(p) < 1.0)) {
        std::ostringstream os;
        os << "background of phase " << phase_name(p) << " is not subsonic (M=" << mach0(p) << ")";
        bad(os.str());
      }
    }
  }
};

//! Reject states closer to cavitation than this fraction of B0.
inline constexpr double kAdmissibilityMargin = 1e-6;

//! Density from entropy and velocity through the Bernoulli law.
inline double density(const FlowConstants& c, Phase phase, double S, const Vec3& q) {
  if (!(S > 0.0)) fail(ErrorKind::NonPositiveEntropy, "entropy " + std::to_string(S));
  const double B0 = c.B0(phase);
  const double head = B0 - 0.5 * dot(q, q);
  if (!(head > kAdmissibilityMargin * B0)) {
    fail(ErrorKind::CavitatedState, "B0 - |q|^2/2 = " + std::to_string(head) + " in phase " +
                                        phase_name(phase));
  }
  return std::pow((c.gamma - 1.0) * head / (c.gamma * S), 1.0 / (c.gamma - 1.0));
}

inline double pressure(const FlowConstants& c, Phase phase, double S, const Vec3& q) {
  return S * std::pow(density(c, phase, S, q), c.gamma);
}

struct SoundSpeed {
  double c = 0.0;
  double mach = 0.0;
  bool subsonic = true;
};

inline SoundSpeed sound_speed_and_mach(const FlowConstants& c, Phase phase, double S,
                                       const Vec3& q) {
  const double rho = density(c, phase, S, q);
  const double p = S * std::pow(rho, c.gamma);
  SoundSpeed out;
  out.c = std::sqrt(c.gamma * p / rho);
  out.mach = norm(q) / out.c;
  out.subsonic = out.mach < 1.0;
  return out;
}

//! Azimuthal vorticity G driving -Lap(psi e_theta) = G e_theta.
//! `grad_phi` is the full potential gradient (background included) and `t`
//! the rotational part of the velocity. `axial_floor` bounds the axial mass
//! flux rho * q_x from below.
inline double vorticity_source(const FlowConstants& c, Phase phase, double S, double Lambda,
                               double dS_dr, double dLambda_dr, const Vec3& grad_phi,
                               const Vec3& t, double r, double axial_floor) {
  if (!(r > 0.0)) fail(ErrorKind::AxisSingularity, "vorticity source evaluated at r <= 0");
  const Vec3 q = grad_phi + t;
  const double rho = density(c, phase, S, q);
  const double axial = q[0];
  if (!(rho * axial > axial_floor)) {
    fail(ErrorKind::DegenerateAxialFlow,
         "axial mass flux " + std::to_string(rho * axial) + " below floor " +
             std::to_string(axial_floor));
  }
  const double enthalpy_like = std::pow(rho, c.gamma - 1.0) / (c.gamma - 1.0);
  return (dS_dr * enthalpy_like + Lambda * dLambda_dr / (r * r)) / axial;
}

//! Diagonal of D_a A at the background, A(zeta, a, b) = rho(zeta, a + b) a.
struct LinearizationCoeffs {
  double a11 = 0.0;
  double a22 = 0.0;
  double a33 = 0.0;
};

inline LinearizationCoeffs linearization_coeffs(const FlowConstants& c, Phase phase) {
  const double rho0 = c.rho0(phase);
  const double m = c.mach0(phase);
  return {rho0 * (1.0 - m * m), rho0, rho0};
}

//! Momentum-like flux A_i(zeta, a, b) = rho(zeta, a + b) a_i.
inline Vec3 mass_flux_part(const FlowConstants& c, Phase phase, double zeta, const Vec3& a,
                           const Vec3& b) {
  return density(c, phase, zeta, a + b) * a;
}

//! Remainder of the linearized continuity equation.
//!
//! With V0 = (S0, grad phi0, 0) and Q = (zeta, a, b) the returned F satisfies
//!   alpha_ii a_i - F_i = A_i(V0 + Q) - A_i(V0) + rho(S0 + zeta, grad phi0 + a + b) b_i,
//! so that div(rho q) = 0 becomes L(phi_hat) = div F. The closed form is the
//! integral remainder evaluated by the fundamental theorem of calculus.
inline Vec3 remainder_flux(const FlowConstants& c, Phase phase, double zeta, const Vec3& a,
                           const Vec3& b) {
  const double S0 = c.S0(phase);
  const Vec3 grad_phi0{c.u0(phase), 0.0, 0.0};
  const auto coeff = linearization_coeffs(c, phase);
  const Vec3 full_a = grad_phi0 + a;
  const double rho = density(c, phase, S0 + zeta, full_a + b);
  const Vec3 a_full = rho * full_a;
  // Evaluated rather than taken as rho0 * u0 so that Q = 0 gives F = 0 exactly.
  const Vec3 a_background = mass_flux_part(c, phase, S0, grad_phi0, Vec3{});
  const Vec3 diag{coeff.a11 * a[0], coeff.a22 * a[1], coeff.a33 * a[2]};
  return diag - (a_full - a_background) - rho * b;
}

}  // namespace axicd
