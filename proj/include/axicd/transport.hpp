#pragma once

// Entropy and angular momentum are constant along streamlines. Streamlines
// are level sets of the cumulative axial mass flux, so transport reduces to
// inverting that flux on the entrance column.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "axicd/errors.hpp"
#include "axicd/geometry.hpp"
#include "axicd/profiles.hpp"

namespace axicd {

//! minus: int_0^r t g dt (increasing); plus: int_r^1 t g dt (decreasing),
//! with g = rho q . e_x.
struct StreamFunction {
  MappedGrid grid;
  Field2D values;
  Field2D flux;

  Phase phase() const { return grid.phase(); }
};

inline StreamFunction build_stream_function(const MappedGrid& g, const Field2D& axial_flux,
                                            double floor) {
  StreamFunction sf{g, Field2D(g.nx(), g.ns()), axial_flux};
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      if (!(axial_flux(i, j) > floor)) {
        fail(ErrorKind::DegenerateAxialFlow,
             std::string("axial mass flux ") + std::to_string(axial_flux(i, j)) + " below floor in " +
                 phase_name(g.phase()) + " phase at x=" + std::to_string(g.x(i)) +
                 ", r=" + std::to_string(g.r(i, j)));
      }
    }
    auto integrand = [&](int j) { return g.r(i, j) * axial_flux(i, j); };
    if (g.phase() == Phase::minus) {
      // The flux is even in r, so the piece below the first node is r0^2 g0 / 2.
      const double r0 = g.r(i, 0);
      sf.values(i, 0) = 0.5 * r0 * r0 * axial_flux(i, 0);
      for (int j = 1; j < g.ns(); ++j) {
        sf.values(i, j) = sf.values(i, j - 1) +
                          0.5 * (g.r(i, j) - g.r(i, j - 1)) * (integrand(j) + integrand(j - 1));
      }
    } else {
      const int top = g.ns() - 1;
      sf.values(i, top) = 0.0;
      for (int j = top - 1; j >= 0; --j) {
        sf.values(i, j) = sf.values(i, j + 1) +
                          0.5 * (g.r(i, j + 1) - g.r(i, j)) * (integrand(j) + integrand(j + 1));
      }
    }
  }
  return sf;
}

//! Accepted overshoot of a traced value beyond the entrance range, relative to the range.
inline constexpr double kFluxRangeTolerance = 1e-4;

namespace detail {

//! Monotone cubic Hermite data along the entrance column, ordered by radius.
struct EntranceColumn {
  std::vector<double> r, value, slope;

  double eval(std::size_t k, double x) const {
    const double h = r[k + 1] - r[k];
    const double t = (x - r[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * value[k] + (t3 - 2 * t2 + t) * h * slope[k] +
           (-2 * t3 + 3 * t2) * value[k + 1] + (t3 - t2) * h * slope[k + 1];
  }
  double derivative(std::size_t k, double x) const {
    const double h = r[k + 1] - r[k];
    const double t = (x - r[k]) / h;
    const double t2 = t * t;
    return (6 * t2 - 6 * t) / h * value[k] + (3 * t2 - 4 * t + 1) * slope[k] +
           (-6 * t2 + 6 * t) / h * value[k + 1] + (3 * t2 - 2 * t) * slope[k + 1];
  }
};

inline EntranceColumn entrance_column(const StreamFunction& sf) {
  const MappedGrid& g = sf.grid;
  EntranceColumn col;
  const double sign = g.phase() == Phase::minus ? 1.0 : -1.0;
  if (g.phase() == Phase::minus) {
    col.r.push_back(0.0);
    col.value.push_back(0.0);
    col.slope.push_back(0.0);
  }
  for (int j = 0; j < g.ns(); ++j) {
    col.r.push_back(g.r(0, j));
    col.value.push_back(sf.values(0, j));
    col.slope.push_back(sign * g.r(0, j) * sf.flux(0, j));
  }
  return col;
}

}  // namespace detail

//! Radius r0 on the entrance column whose stream value equals `target`.
inline double invert_entrance(const StreamFunction& sf, double target) {
  const auto col = detail::entrance_column(sf);
  const std::size_t n = col.r.size();
  const bool increasing = sf.phase() == Phase::minus;
  const double lo_val = increasing ? col.value.front() : col.value.back();
  const double hi_val = increasing ? col.value.back() : col.value.front();
  const double range = hi_val - lo_val;
  if (target < lo_val || target > hi_val) {
    const double excess = target < lo_val ? lo_val - target : target - hi_val;
    if (excess > kFluxRangeTolerance * range) {
      fail(ErrorKind::FluxOutOfRange, "stream value " + std::to_string(target) +
                                          " outside entrance range [" + std::to_string(lo_val) +
                                          ", " + std::to_string(hi_val) + "]");
    }
    const bool at_low = target < lo_val;
    return (at_low == increasing) ? col.r.front() : col.r.back();
  }

  // Locate the bracketing interval by the node values.
  std::size_t k = 0;
  {
    std::size_t a = 0, b = n - 1;
    while (b - a > 1) {
      const std::size_t m = (a + b) / 2;
      const bool below = increasing ? col.value[m] <= target : col.value[m] >= target;
      (below ? a : b) = m;
    }
    k = a;
  }
  if (col.value[k] == target) return col.r[k];
  if (col.value[k + 1] == target) return col.r[k + 1];

  double a = col.r[k], b = col.r[k + 1];
  auto residual = [&](double x) { return col.eval(k, x) - target; };
  const double fa_sign = std::copysign(1.0, residual(a));
  while (b - a > 1e-10) {
    const double m = 0.5 * (a + b);
    (std::copysign(1.0, residual(m)) == fa_sign ? a : b) = m;
  }
  double x = 0.5 * (a + b);
  const double d = col.derivative(k, x);
  if (d != 0.0) x = std::clamp(x - residual(x) / d, col.r[k], col.r[k + 1]);
  return x;
}

//! Entrance radius of the streamline through node (i, j).
inline double trace_to_entrance(const StreamFunction& sf, int i, int j) {
  if (i == 0) return sf.grid.r(0, j);
  return invert_entrance(sf, sf.values(i, j));
}

//! Entrance radius of the streamline through an arbitrary point.
inline double trace_to_entrance(const StreamFunction& sf, double x, double r) {
  if (x == 0.0) return r;
  return invert_entrance(sf, sample_field(sf.grid, sf.values, x, r, Parity::even));
}

struct TransportedFields {
  Field2D S;
  Field2D Lambda;
  Field2D origin;  // traced entrance radius per node
};

//! S = S_en(T), Lambda = T w_en(T) with T the traced entrance radius.
inline TransportedFields transport_fields(const StreamFunction& sf, const PhaseEntrance& entrance) {
  const MappedGrid& g = sf.grid;
  TransportedFields out{Field2D(g.nx(), g.ns()), Field2D(g.nx(), g.ns()), Field2D(g.nx(), g.ns())};
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      const double r0 = trace_to_entrance(sf, i, j);
      out.origin(i, j) = r0;
      out.S(i, j) = entrance.S(r0);
      out.Lambda(i, j) = r0 * entrance.w(r0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extension across the interface by three-point reflection. The weights
// satisfy sum c_i (-1/i)^m = 1 for m = 0, 1, 2, so quadratics in the
// distance to the interface are reproduced.

inline constexpr std::array<double, 3> kReflectionWeights{6.0, -32.0, 27.0};

//! Value at radius r on the far side of the interface radius f, built from
//! the native-side values at f + (f - r) / i.
template <class NativeFn>
double reflect_across(NativeFn&& native, double f, double r) {
  double acc = 0.0;
  for (int i = 1; i <= 3; ++i) acc += kReflectionWeights[i - 1] * native(f + (f - r) / i);
  return acc;
}

//! A phase field that can be sampled on the enlarged domain
//! (plus: r >= 1/4, minus: r <= 3/4).
class ExtendedField {
 public:
  ExtendedField() = default;
  ExtendedField(MappedGrid grid, Field2D values, Parity parity)
      : grid_(std::move(grid)), values_(std::move(values)), parity_(parity) {}

  const MappedGrid& grid() const { return grid_; }
  const Field2D& values() const { return values_; }

  double operator()(double x, double r) const {
    const double f = grid_.curve().value_at(x);
    const bool native = grid_.phase() == Phase::plus ? r >= f : r <= f;
    auto at = [&](double rr) { return sample_field(grid_, values_, x, rr, parity_); };
    return native ? at(r) : reflect_across(at, f, r);
  }

  Field2D on(const MappedGrid& dst) const {
    if (dst.phase() != grid_.phase()) fail(ErrorKind::ExtentMismatch, "phase mismatch");
    if (dst.length() > grid_.length() * (1.0 + 1e-12)) {
      fail(ErrorKind::ExtentMismatch, "destination extends past the field's axial range");
    }
    Field2D out(dst.nx(), dst.ns());
    for (int i = 0; i < dst.nx(); ++i) {
      for (int j = 0; j < dst.ns(); ++j) out(i, j) = (*this)(dst.x(i), dst.r(i, j));
    }
    return out;
  }

 private:
  MappedGrid grid_;
  Field2D values_;
  Parity parity_ = Parity::even;
};

struct ExtendedPair {
  ExtendedField S;
  ExtendedField Lambda;
};

inline ExtendedPair extend_fields(const MappedGrid& g, Field2D S, Field2D Lambda) {
  return {ExtendedField(g, std::move(S), Parity::even),
          ExtendedField(g, std::move(Lambda), Parity::odd)};
}

}  // namespace axicd
