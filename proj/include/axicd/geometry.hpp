#pragma once

// Free-boundary curve r = f(x) and the boundary-fitted grids of the two
// phases. Both phases share the same uniform axial nodes, so column i of
// every grid sits at the same x.
//
//   minus: r(x, s) = s f(x),                 s in (0, 1], nodes at s = (j + 1/2) h
//   plus : r(x, s) = f(x) + s (1 - f(x)),    s in [0, 1], nodes at s = j h
//
// The minus grid never places a node on the axis; axis conditions enter
// through a reflected ghost row at s = -h/2 (even or odd parity).

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "axicd/eos.hpp"
#include "axicd/errors.hpp"

namespace axicd {

class InterfaceCurve {
 public:
  InterfaceCurve() = default;

  //! Samples on the uniform nodes x_i = i L / (N - 1).
  InterfaceCurve(double length, std::vector<double> f_values)
      : length_(length), f_(std::move(f_values)) {
    if (f_.size() < 4) fail(ErrorKind::DegenerateInterface, "interface needs at least 4 nodes");
    if (!(length_ > 0.0)) fail(ErrorKind::DegenerateInterface, "non-positive length");
    refresh_derivatives();
  }

  static InterfaceCurve flat(double length, int nodes) {
    return InterfaceCurve(length, std::vector<double>(static_cast<std::size_t>(nodes), 0.5));
  }

  double length() const { return length_; }
  int size() const { return static_cast<int>(f_.size()); }
  double dx() const { return length_ / (size() - 1); }
  double x(int i) const { return i == size() - 1 ? length_ : i * dx(); }
  double f(int i) const { return f_[static_cast<std::size_t>(i)]; }
  double slope(int i) const { return fp_[static_cast<std::size_t>(i)]; }
  double curvature(int i) const { return fpp_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const { return f_; }

  //! Throws DegenerateInterface unless f(0) = 1/2 and 1/4 < f < 3/4.
  void validate() const {
    if (f_.front() != 0.5) {
      fail(ErrorKind::DegenerateInterface, "f(0) = " + std::to_string(f_.front()) + " != 1/2");
    }
    for (int i = 0; i < size(); ++i) {
      if (!(f(i) > 0.25 && f(i) < 0.75)) {
        fail(ErrorKind::DegenerateInterface,
             "f(" + std::to_string(x(i)) + ") = " + std::to_string(f(i)) + " outside (1/4, 3/4)");
      }
    }
  }

  //! max(|f - 1/2|, |f'|, |f''|) over the nodes.
  double c2_deviation() const {
    double m = 0.0;
    for (int i = 0; i < size(); ++i) {
      m = std::max({m, std::abs(f(i) - 0.5), std::abs(slope(i)), std::abs(curvature(i))});
    }
    return m;
  }

  //! Cubic Lagrange interpolation between nodes; clamps x to [0, L].
  double value_at(double xq) const {
    const int n = size();
    const double t = std::clamp(xq, 0.0, length_) / dx();
    int i = std::clamp(static_cast<int>(std::floor(t)), 0, n - 2);
    const int i0 = std::clamp(i - 1, 0, n - 4);
    double result = 0.0;
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int b = 0; b < 4; ++b) {
        if (b != a) w *= (t - (i0 + b)) / static_cast<double>(a - b);
      }
      result += w * f(i0 + a);
    }
    return result;
  }

 private:
  void refresh_derivatives() {
    const int n = size();
    const double h = dx();
    fp_.assign(f_.size(), 0.0);
    fpp_.assign(f_.size(), 0.0);
    auto F = [&](int i) { return f_[static_cast<std::size_t>(i)]; };
    for (int i = 1; i < n - 1; ++i) {
      fp_[i] = (F(i + 1) - F(i - 1)) / (2.0 * h);
      fpp_[i] = (F(i + 1) - 2.0 * F(i) + F(i - 1)) / (h * h);
    }
    fp_[0] = (-3.0 * F(0) + 4.0 * F(1) - F(2)) / (2.0 * h);
    fp_[n - 1] = (3.0 * F(n - 1) - 4.0 * F(n - 2) + F(n - 3)) / (2.0 * h);
    fpp_[0] = (2.0 * F(0) - 5.0 * F(1) + 4.0 * F(2) - F(3)) / (h * h);
    fpp_[n - 1] = (2.0 * F(n - 1) - 5.0 * F(n - 2) + 4.0 * F(n - 3) - F(n - 4)) / (h * h);
  }

  double length_ = 0.0;
  std::vector<double> f_;
  std::vector<double> fp_;
  std::vector<double> fpp_;
};

//! Node values on an (x, s) grid, stored x-major.
struct Field2D {
  int nx = 0;
  int ns = 0;
  std::vector<double> data;

  Field2D() = default;
  Field2D(int nx_, int ns_, double value = 0.0)
      : nx(nx_), ns(ns_), data(static_cast<std::size_t>(nx_) * ns_, value) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * ns + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * ns + j]; }
  int index(int i, int j) const { return i * ns + j; }
  std::size_t size() const { return data.size(); }

  double max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
  }
};

inline double max_abs_diff(const Field2D& a, const Field2D& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) m = std::max(m, std::abs(a.data[k] - b.data[k]));
  return m;
}

//! Reflection parity across the axis for the minus-phase ghost row.
enum class Parity { even, odd };

class MappedGrid {
 public:
  MappedGrid() = default;

  MappedGrid(Phase phase, const InterfaceCurve& curve, int ns)
      : phase_(phase), curve_(curve), nx_(curve.size()), ns_(ns) {
    if (ns_ < 4) fail(ErrorKind::DegenerateInterface, "need at least 4 radial nodes");
    hs_ = phase_ == Phase::minus ? 1.0 / (ns_ - 0.5) : 1.0 / (ns_ - 1);
    s_.resize(static_cast<std::size_t>(ns_));
    for (int j = 0; j < ns_; ++j) {
      s_[j] = phase_ == Phase::minus ? (j + 0.5) * hs_ : j * hs_;
    }
    s_.back() = 1.0;
    r_ = Field2D(nx_, ns_);
    rs_ = Field2D(nx_, ns_);
    rx_ = Field2D(nx_, ns_);
    rxx_ = Field2D(nx_, ns_);
    rxs_ = Field2D(nx_, ns_);
    for (int i = 0; i < nx_; ++i) {
      const double f = curve_.f(i);
      const double fp = curve_.slope(i);
      const double fpp = curve_.curvature(i);
      for (int j = 0; j < ns_; ++j) {
        const double s = s_[j];
        if (phase_ == Phase::minus) {
          r_(i, j) = s * f;
          rs_(i, j) = f;
          rx_(i, j) = s * fp;
          rxx_(i, j) = s * fpp;
          rxs_(i, j) = fp;
        } else {
          r_(i, j) = f + s * (1.0 - f);
          rs_(i, j) = 1.0 - f;
          rx_(i, j) = (1.0 - s) * fp;
          rxx_(i, j) = (1.0 - s) * fpp;
          rxs_(i, j) = -fp;
        }
      }
    }
  }

  Phase phase() const { return phase_; }
  const InterfaceCurve& curve() const { return curve_; }
  int nx() const { return nx_; }
  int ns() const { return ns_; }
  int nodes() const { return nx_ * ns_; }
  int index(int i, int j) const { return i * ns_ + j; }
  double hx() const { return curve_.dx(); }
  double hs() const { return hs_; }
  double length() const { return curve_.length(); }
  double x(int i) const { return curve_.x(i); }
  double s(int j) const { return s_[static_cast<std::size_t>(j)]; }
  std::span<const double> s_nodes() const { return s_; }

  double r(int i, int j) const { return r_(i, j); }
  double r_s(int i, int j) const { return rs_(i, j); }
  double r_x(int i, int j) const { return rx_(i, j); }
  double r_xx(int i, int j) const { return rxx_(i, j); }
  double r_xs(int i, int j) const { return rxs_(i, j); }
  const Field2D& radii() const { return r_; }

  bool has_axis() const { return phase_ == Phase::minus; }
  //! Row index lying on the interface r = f(x).
  int interface_row() const { return phase_ == Phase::plus ? 0 : ns_ - 1; }
  //! Row index at the far side: wall r = 1 (plus) or first node off the axis (minus).
  int outer_row() const { return phase_ == Phase::plus ? ns_ - 1 : 0; }

  //! s-coordinate of radius r at column i (may fall outside [0, 1]).
  double s_of(int i, double radius) const {
    const double f = curve_.f(i);
    return phase_ == Phase::minus ? radius / f : (radius - f) / (1.0 - f);
  }

  //! beta = r_x / r_s; physical d/dx at fixed r is d/dX - beta d/ds.
  double beta(int i, int j) const { return rx_(i, j) / rs_(i, j); }
  //! Coefficient of U_s in u_xx.
  double xx_drift(int i, int j) const {
    const double R_s = rs_(i, j);
    const double b = beta(i, j);
    const double beta_s = rxs_(i, j) / R_s;
    const double beta_x = (rxx_(i, j) * R_s - rx_(i, j) * rxs_(i, j)) / (R_s * R_s);
    return b * beta_s - beta_x;
  }

 private:
  Phase phase_ = Phase::plus;
  InterfaceCurve curve_;
  int nx_ = 0;
  int ns_ = 0;
  double hs_ = 0.0;
  std::vector<double> s_;
  Field2D r_, rs_, rx_, rxx_, rxs_;
};

struct GridPair {
  MappedGrid plus;
  MappedGrid minus;
};

inline GridPair build_grids(const InterfaceCurve& f, int ns_plus, int ns_minus) {
  f.validate();
  return {MappedGrid(Phase::plus, f, ns_plus), MappedGrid(Phase::minus, f, ns_minus)};
}

// ---------------------------------------------------------------------------
// Difference stencils on a mapped grid. Boundary nodes get second-order
// one-sided formulas; minus-phase row 0 reflects through the axis.

struct Tap {
  int index;
  double weight;
};

class Stencil {
 public:
  void add(int index, double weight) {
    for (int k = 0; k < n_; ++k) {
      if (taps_[k].index == index) {
        taps_[k].weight += weight;
        return;
      }
    }
    taps_[n_++] = {index, weight};
  }
  void add(const Stencil& other, double scale) {
    for (int k = 0; k < other.n_; ++k) add(other.taps_[k].index, scale * other.taps_[k].weight);
  }
  std::span<const Tap> taps() const { return {taps_.data(), static_cast<std::size_t>(n_)}; }

  double apply(const Field2D& u) const {
    double acc = 0.0;
    for (int k = 0; k < n_; ++k) acc += taps_[k].weight * u.data[taps_[k].index];
    return acc;
  }

 private:
  std::array<Tap, 32> taps_{};
  int n_ = 0;
};

namespace stencil {

inline double parity_sign(Parity p) { return p == Parity::even ? 1.0 : -1.0; }

//! d/dX along a row (fixed s).
inline Stencil d_dX(const MappedGrid& g, int i, int j) {
  Stencil st;
  const double h = g.hx();
  const int n = g.nx();
  if (i > 0 && i < n - 1) {
    st.add(g.index(i + 1, j), 0.5 / h);
    st.add(g.index(i - 1, j), -0.5 / h);
  } else if (i == 0) {
    st.add(g.index(0, j), -1.5 / h);
    st.add(g.index(1, j), 2.0 / h);
    st.add(g.index(2, j), -0.5 / h);
  } else {
    st.add(g.index(n - 1, j), 1.5 / h);
    st.add(g.index(n - 2, j), -2.0 / h);
    st.add(g.index(n - 3, j), 0.5 / h);
  }
  return st;
}

//! d/ds along a column (fixed X).
inline Stencil d_ds(const MappedGrid& g, int i, int j, Parity parity) {
  Stencil st;
  const double h = g.hs();
  const int n = g.ns();
  if (j > 0 && j < n - 1) {
    st.add(g.index(i, j + 1), 0.5 / h);
    st.add(g.index(i, j - 1), -0.5 / h);
  } else if (j == 0 && g.has_axis()) {
    st.add(g.index(i, 1), 0.5 / h);
    st.add(g.index(i, 0), -0.5 * parity_sign(parity) / h);
  } else if (j == 0) {
    st.add(g.index(i, 0), -1.5 / h);
    st.add(g.index(i, 1), 2.0 / h);
    st.add(g.index(i, 2), -0.5 / h);
  } else {
    st.add(g.index(i, n - 1), 1.5 / h);
    st.add(g.index(i, n - 2), -2.0 / h);
    st.add(g.index(i, n - 3), 0.5 / h);
  }
  return st;
}

//! Interior-only second derivatives (callers never apply them on boundary rows).
inline Stencil d2_dX2(const MappedGrid& g, int i, int j) {
  Stencil st;
  const double h2 = g.hx() * g.hx();
  st.add(g.index(i + 1, j), 1.0 / h2);
  st.add(g.index(i, j), -2.0 / h2);
  st.add(g.index(i - 1, j), 1.0 / h2);
  return st;
}

inline Stencil d2_ds2(const MappedGrid& g, int i, int j, Parity parity) {
  Stencil st;
  const double h2 = g.hs() * g.hs();
  st.add(g.index(i, j + 1), 1.0 / h2);
  st.add(g.index(i, j), -2.0 / h2);
  if (j == 0 && g.has_axis()) {
    st.add(g.index(i, 0), parity_sign(parity) / h2);
  } else {
    st.add(g.index(i, j - 1), 1.0 / h2);
  }
  return st;
}

inline Stencil d2_dXds(const MappedGrid& g, int i, int j, Parity parity) {
  Stencil st;
  const double w = 0.25 / (g.hx() * g.hs());
  st.add(g.index(i + 1, j + 1), w);
  st.add(g.index(i - 1, j + 1), -w);
  if (j == 0 && g.has_axis()) {
    const double p = parity_sign(parity);
    st.add(g.index(i + 1, 0), -w * p);
    st.add(g.index(i - 1, 0), w * p);
  } else {
    st.add(g.index(i + 1, j - 1), -w);
    st.add(g.index(i - 1, j - 1), w);
  }
  return st;
}

//! Physical d/dx at fixed r.
inline Stencil d_dx(const MappedGrid& g, int i, int j, Parity parity) {
  Stencil st = d_dX(g, i, j);
  st.add(d_ds(g, i, j, parity), -g.beta(i, j));
  return st;
}

//! Physical d/dr.
inline Stencil d_dr(const MappedGrid& g, int i, int j, Parity parity) {
  Stencil st;
  st.add(d_ds(g, i, j, parity), 1.0 / g.r_s(i, j));
  return st;
}

//! Physical u_xx at an interior node.
inline Stencil d2_dx2(const MappedGrid& g, int i, int j, Parity parity) {
  const double b = g.beta(i, j);
  Stencil st = d2_dX2(g, i, j);
  st.add(d2_dXds(g, i, j, parity), -2.0 * b);
  st.add(d2_ds2(g, i, j, parity), b * b);
  st.add(d_ds(g, i, j, parity), g.xx_drift(i, j));
  return st;
}

//! Physical u_rr + u_r / r at an interior node.
inline Stencil radial_laplacian(const MappedGrid& g, int i, int j, Parity parity) {
  const double rs = g.r_s(i, j);
  Stencil st;
  st.add(d2_ds2(g, i, j, parity), 1.0 / (rs * rs));
  st.add(d_ds(g, i, j, parity), 1.0 / (rs * g.r(i, j)));
  return st;
}

}  // namespace stencil

//! Physical gradient (d/dx, d/dr) of a node field.
inline std::pair<double, double> gradient(const MappedGrid& g, const Field2D& u, int i, int j,
                                          Parity parity) {
  return {stencil::d_dx(g, i, j, parity).apply(u), stencil::d_dr(g, i, j, parity).apply(u)};
}

// ---------------------------------------------------------------------------

struct InterfaceFrame {
  Vec3 n_plus;
  Vec3 n_minus;
  Vec3 tau;
};

//! Outward normals of both phases and the meridional tangent at each node.
inline std::vector<InterfaceFrame> interface_frame(const InterfaceCurve& f) {
  std::vector<InterfaceFrame> out(static_cast<std::size_t>(f.size()));
  for (int i = 0; i < f.size(); ++i) {
    const double fp = f.slope(i);
    const double inv = 1.0 / std::sqrt(1.0 + fp * fp);
    out[i].n_plus = {fp * inv, -inv, 0.0};
    out[i].n_minus = {-fp * inv, inv, 0.0};
    out[i].tau = {inv, fp * inv, 0.0};
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace detail {

//! Cubic Lagrange weights for t measured in node units from node i0.
inline std::array<double, 4> cubic_weights(double t) {
  std::array<double, 4> w{};
  for (int a = 0; a < 4; ++a) {
    double v = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (b != a) v *= (t - b) / static_cast<double>(a - b);
    }
    w[a] = v;
  }
  return w;
}

}  // namespace detail

//! Sample `field` (living on `src`) at physical point (x, r).
//! Bicubic where a full 4x4 block of nodes surrounds the point, bilinear in
//! the boundary band and for mild extrapolation. Minus-phase points below the
//! first row reflect through the axis with `parity`.
inline double sample_field(const MappedGrid& src, const Field2D& field, double xq, double rq,
                           Parity parity = Parity::even) {
  const int nx = src.nx();
  const int ns = src.ns();
  const double tx = xq / src.hx();
  const double fq = src.curve().value_at(xq);
  const double sq = src.phase() == Phase::minus ? rq / fq : (rq - fq) / (1.0 - fq);
  // s in node units
  const double ts = src.phase() == Phase::minus ? sq / src.hs() - 0.5 : sq / src.hs();

  auto value = [&](int i, int j) {
    if (j < 0 && src.has_axis()) {
      return stencil::parity_sign(parity) * field(i, -j - 1);
    }
    return field(i, j);
  };

  int ci = std::clamp(static_cast<int>(std::floor(tx)), 0, nx - 2);
  const int jmin = src.has_axis() ? -1 : 0;
  int cj = std::clamp(static_cast<int>(std::floor(ts)), jmin, ns - 2);

  const bool cubic_x = ci - 1 >= 0 && ci + 2 <= nx - 1;
  const bool cubic_s = cj - 1 >= jmin && cj + 2 <= ns - 1 && ts >= cj && ts <= cj + 1;
  if (cubic_x && cubic_s && tx >= ci && tx <= ci + 1) {
    const auto wx = detail::cubic_weights(tx - (ci - 1));
    const auto ws = detail::cubic_weights(ts - (cj - 1));
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
      double row = 0.0;
      for (int b = 0; b < 4; ++b) row += ws[b] * value(ci - 1 + a, cj - 1 + b);
      acc += wx[a] * row;
    }
    return acc;
  }
  const double ax = tx - ci;
  const double as = ts - cj;
  return (1 - ax) * ((1 - as) * value(ci, cj) + as * value(ci, cj + 1)) +
         ax * ((1 - as) * value(ci + 1, cj) + as * value(ci + 1, cj + 1));
}

//! Move a field between two grids of the same phase (possibly different
//! interfaces, lengths, and resolutions). Every destination node must lie
//! within the source's axial extent.
inline Field2D transfer_field(const MappedGrid& src, const Field2D& field, const MappedGrid& dst,
                              Parity parity = Parity::even) {
  if (src.phase() != dst.phase()) fail(ErrorKind::ExtentMismatch, "phase mismatch in transfer");
  if (dst.length() > src.length() * (1.0 + 1e-12)) {
    fail(ErrorKind::ExtentMismatch, "destination extends past the source's axial range");
  }
  Field2D out(dst.nx(), dst.ns());
  for (int i = 0; i < dst.nx(); ++i) {
    for (int j = 0; j < dst.ns(); ++j) {
      out(i, j) = sample_field(src, field, dst.x(i), dst.r(i, j), parity);
    }
  }
  return out;
}

}  // namespace axicd
