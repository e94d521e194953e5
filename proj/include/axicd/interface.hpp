#pragma once

// Coupling across the contact discontinuity: the pressure-matched
// meridional speed of the inner phase, the resulting boundary datum of the
// inner stream problem, and the mass-flux update of the interface curve.

#include <cmath>
#include <string>
#include <vector>

#include "axicd/eos.hpp"
#include "axicd/errors.hpp"
#include "axicd/geometry.hpp"
#include "axicd/transport.hpp"

namespace axicd {

//! Squared speed the minus phase needs at the interface so that its
//! pressure equals `p_plus` given its entropy there.
inline double matched_speed(const FlowConstants& c, double S_minus, double p_plus) {
  if (!(p_plus > 0.0) || !(S_minus > 0.0)) {
    fail(ErrorKind::NegativeMatchedSpeed, "non-positive pressure or entropy trace");
  }
  const double g = c.gamma;
  const double Y =
      2.0 * (c.B0(Phase::minus) - g / (g - 1.0) * std::pow(p_plus, 1.0 - 1.0 / g) *
                                      std::pow(S_minus, 1.0 / g));
  if (!(Y > 0.0)) fail(ErrorKind::NegativeMatchedSpeed, "matched speed squared " + std::to_string(Y));
  return Y;
}

//! Datum A = -sqrt(Y - swirl^2) + u0_minus / sqrt(1 + f'^2) per interface node.
inline std::vector<double> robin_datum(const FlowConstants& c, const InterfaceCurve& f,
                                       const std::vector<double>& Y,
                                       const std::vector<double>& swirl) {
  std::vector<double> A(Y.size());
  for (int i = 0; i < f.size(); ++i) {
    const double radicand = Y[i] - swirl[i] * swirl[i];
    if (radicand < 0.0) {
      fail(ErrorKind::NegativeMatchedSpeed,
           "matched speed below swirl at x=" + std::to_string(f.x(i)));
    }
    const double fp = f.slope(i);
    A[i] = -std::sqrt(radicand) + c.u0_minus / std::sqrt(1.0 + fp * fp);
  }
  return A;
}

struct InterfaceData {
  std::vector<double> p_plus;
  std::vector<double> S_minus;
  std::vector<double> swirl;
  std::vector<double> Y;
  std::vector<double> A;
};

inline InterfaceData interface_data(const FlowConstants& c, const InterfaceCurve& f,
                                    std::vector<double> p_plus, std::vector<double> S_minus,
                                    std::vector<double> swirl) {
  InterfaceData d{std::move(p_plus), std::move(S_minus), std::move(swirl), {}, {}};
  d.Y.resize(d.p_plus.size());
  for (std::size_t i = 0; i < d.Y.size(); ++i) d.Y[i] = matched_speed(c, d.S_minus[i], d.p_plus[i]);
  d.A = robin_datum(c, f, d.Y, d.swirl);
  return d;
}

struct InterfaceUpdate {
  InterfaceCurve curve;
  std::vector<double> flux_defect;  // entrance flux minus the flux below f*(x)
  double increment = 0.0;           // max |f - f*|
};

//! f^2 = f*^2 + 2 (Psi(0, 1/2) - Psi(x, f*(x))) / (rho0 u0) in the minus phase,
//! followed by under-relaxation with weight `omega`.
inline InterfaceUpdate update_interface(const FlowConstants& c, const MappedGrid& minus_grid,
                                        const Field2D& axial_flux, double floor,
                                        double omega = 1.0) {
  if (minus_grid.phase() != Phase::minus) {
    fail(ErrorKind::ConfigError, "interface update needs the minus-phase grid");
  }
  const InterfaceCurve& fs = minus_grid.curve();
  const StreamFunction sf = build_stream_function(minus_grid, axial_flux, floor);
  const int top = minus_grid.interface_row();
  const double entrance_flux = sf.values(0, top);
  const double scale = c.rho0_minus * c.u0_minus;

  InterfaceUpdate out;
  out.flux_defect.resize(static_cast<std::size_t>(fs.size()));
  std::vector<double> f(static_cast<std::size_t>(fs.size()));
  for (int i = 0; i < fs.size(); ++i) {
    const double defect = entrance_flux - sf.values(i, top);
    out.flux_defect[i] = defect;
    const double radicand = fs.f(i) * fs.f(i) + 2.0 * defect / scale;
    if (!(radicand > 0.0)) {
      fail(ErrorKind::NegativeRadicand, "interface update radicand " + std::to_string(radicand) +
                                            " at x=" + std::to_string(fs.x(i)));
    }
    const double raw = std::sqrt(radicand);
    f[i] = (1.0 - omega) * fs.f(i) + omega * raw;
    if (!(f[i] > 0.25 && f[i] < 0.75)) {
      fail(ErrorKind::InterfaceEscape,
           "updated interface " + std::to_string(f[i]) + " at x=" + std::to_string(fs.x(i)));
    }
    out.increment = std::max(out.increment, std::abs(f[i] - fs.f(i)));
  }
  // The defect vanishes identically on the entrance column.
  f[0] = 0.5;
  out.curve = InterfaceCurve(fs.length(), std::move(f));
  return out;
}

}  // namespace axicd
