#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "axicd/geometry.hpp"

using namespace axicd;

namespace {

InterfaceCurve cosine_curve(double length, int nodes, double eps) {
  std::vector<double> f(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    const double x = i * length / (nodes - 1);
    f[i] = 0.5 + eps * (1.0 - std::cos(std::numbers::pi * x / length));
  }
  return InterfaceCurve(length, std::move(f));
}

}  // namespace

TEST(InterfaceCurve, ValidationAndDerivatives) {
  EXPECT_NO_THROW(InterfaceCurve::flat(10, 16).validate());
  EXPECT_THROW(InterfaceCurve(10, {0.5, 0.8, 0.5, 0.5}).validate(), SolverError);
  EXPECT_THROW(InterfaceCurve(10, {0.4, 0.5, 0.5, 0.5}).validate(), SolverError);
  EXPECT_THROW(InterfaceCurve(10, {0.5, 0.5}), SolverError);

  // Quadratic data: the three-point derivative formulas are exact.
  std::vector<double> f;
  const int n = 11;
  const double L = 2.0;
  for (int i = 0; i < n; ++i) {
    const double x = i * L / (n - 1);
    f.push_back(0.5 + 0.01 * x + 0.02 * x * x);
  }
  const InterfaceCurve c(L, f);
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(c.slope(i), 0.01 + 0.04 * c.x(i), 1e-13);
    EXPECT_NEAR(c.curvature(i), 0.04, 1e-11);
  }
  EXPECT_NEAR(c.value_at(0.73), 0.5 + 0.01 * 0.73 + 0.02 * 0.73 * 0.73, 1e-15);
}

TEST(MappedGrid, FlatInterfaceIsAffine) {
  const auto curve = InterfaceCurve::flat(10, 9);
  const MappedGrid minus(Phase::minus, curve, 8);
  const MappedGrid plus(Phase::plus, curve, 8);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 8; ++j) {
      EXPECT_DOUBLE_EQ(minus.r(i, j), minus.s(j) / 2);
      EXPECT_DOUBLE_EQ(plus.r(i, j), 0.5 + plus.s(j) / 2);
      EXPECT_EQ(minus.r_x(i, j), 0.0);
    }
  }
  EXPECT_EQ(minus.s(7), 1.0);
  EXPECT_EQ(plus.s(0), 0.0);
  EXPECT_NEAR(minus.s(0), minus.hs() / 2, 1e-16);
}

TEST(MappedGrid, CurvedInterfaceChainRule) {
  const double L = 10, eps = 0.02;
  const auto curve = cosine_curve(L, 201, eps);
  const MappedGrid minus(Phase::minus, curve, 16);
  const MappedGrid plus(Phase::plus, curve, 16);
  for (int i = 1; i < curve.size() - 1; ++i) {
    const double x = curve.x(i);
    const double fp = eps * std::numbers::pi / L * std::sin(std::numbers::pi * x / L);
    for (int j = 0; j < 16; ++j) EXPECT_NEAR(minus.r_x(i, j), minus.s(j) * fp, 1e-6);
    // Interface nodes of the two phases coincide bitwise.
    EXPECT_EQ(minus.r(i, minus.interface_row()), plus.r(i, plus.interface_row()));
  }
}

TEST(InterfaceFrame, Identities) {
  const auto flat = interface_frame(InterfaceCurve::flat(1, 5));
  EXPECT_EQ(flat[2].n_plus[1], -1.0);
  EXPECT_EQ(flat[2].n_minus[1], 1.0);
  EXPECT_EQ(flat[2].tau[0], 1.0);

  // Linear curve with slope 1.
  const auto unit = interface_frame(InterfaceCurve(0.1, {0.5, 0.525, 0.55, 0.575, 0.6}));
  EXPECT_NEAR(unit[2].tau[0], 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(unit[2].tau[1], 1 / std::sqrt(2.0), 1e-15);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 50; ++k) {
    const double s = u(rng) * 0.1;
    const auto fr = interface_frame(InterfaceCurve(1.0, {0.5, 0.5 + s, 0.5 + 2 * s, 0.5 + 3 * s}));
    for (const auto& e : fr) {
      EXPECT_NEAR(norm(e.n_plus), 1.0, 1e-14);
      EXPECT_NEAR(norm(e.n_minus), 1.0, 1e-14);
      EXPECT_NEAR(norm(e.tau), 1.0, 1e-14);
      EXPECT_NEAR(dot(e.n_plus, e.tau), 0.0, 1e-14);
      EXPECT_NEAR(dot(e.n_minus, e.tau), 0.0, 1e-14);
    }
  }
}

TEST(Stencils, ExactOnQuadraticsOverFlatGrids) {
  const auto curve = InterfaceCurve::flat(2.0, 9);
  const MappedGrid g(Phase::plus, curve, 9);
  Field2D u(g.nx(), g.ns());
  auto exact = [](double x, double r) { return 1 + 0.3 * x - 0.2 * x * x + 0.5 * r * r - 0.7 * r + 0.1 * x * r; };
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ns(); ++j) u(i, j) = exact(g.x(i), g.r(i, j));
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      const double x = g.x(i), r = g.r(i, j);
      EXPECT_NEAR(stencil::d_dx(g, i, j, Parity::even).apply(u), 0.3 - 0.4 * x + 0.1 * r, 1e-12);
      EXPECT_NEAR(stencil::d_dr(g, i, j, Parity::even).apply(u), r - 0.7 + 0.1 * x, 1e-12);
      const bool interior = i > 0 && i < g.nx() - 1 && j > 0 && j < g.ns() - 1;
      if (interior) EXPECT_NEAR(stencil::d2_dx2(g, i, j, Parity::even).apply(u), -0.4, 1e-10);
    }
  }
}

TEST(TransferField, ConstantsAndLinearsAreExact) {
  const auto c1 = cosine_curve(4, 41, 0.01);
  const auto c2 = cosine_curve(4, 29, -0.015);
  for (Phase p : {Phase::plus, Phase::minus}) {
    const MappedGrid src(p, c1, 21), dst(p, c2, 13);
    Field2D k(src.nx(), src.ns(), 3.25), lin(src.nx(), src.ns());
    for (int i = 0; i < src.nx(); ++i)
      for (int j = 0; j < src.ns(); ++j) lin(i, j) = 0.4 + 0.3 * src.x(i) - 1.2 * src.s(j);
    const Field2D kk = transfer_field(src, k, dst);
    for (double v : kk.data) EXPECT_NEAR(v, 3.25, 1e-14);

    // Linear in (x, s) on a flat source is exact wherever the stencil stays native.
    const auto flat = InterfaceCurve::flat(4, 41);
    const MappedGrid fsrc(p, flat, 21), fdst(p, InterfaceCurve::flat(3, 23), 13);
    Field2D flin(fsrc.nx(), fsrc.ns());
    for (int i = 0; i < fsrc.nx(); ++i)
      for (int j = 0; j < fsrc.ns(); ++j) flin(i, j) = 0.4 + 0.3 * fsrc.x(i) - 1.2 * fsrc.s(j);
    const Field2D out = transfer_field(fsrc, flin, fdst);
    for (int i = 0; i < fdst.nx(); ++i)
      for (int j = 0; j < fdst.ns(); ++j) {
        if (p == Phase::minus && j == 0) continue;  // axis ghost is even, the linear is not
        EXPECT_NEAR(out(i, j), 0.4 + 0.3 * fdst.x(i) - 1.2 * fdst.s(j), 1e-13);
      }
  }
  const MappedGrid a(Phase::plus, InterfaceCurve::flat(4, 9), 8);
  const MappedGrid b(Phase::plus, InterfaceCurve::flat(5, 9), 8);
  const MappedGrid m(Phase::minus, InterfaceCurve::flat(4, 9), 8);
  EXPECT_THROW(transfer_field(a, Field2D(9, 8), b), SolverError);
  EXPECT_THROW(transfer_field(a, Field2D(9, 8), m), SolverError);
}

TEST(TransferField, SecondOrderUnderRefinement) {
  auto field = [](double x, double r) { return std::sin(0.9 * x) * std::cos(2.3 * r); };
  double prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const int n = 16 << level;
    // The destination domain lies inside the source one, so no extrapolation happens.
    const auto c1 = cosine_curve(4, n + 1, -0.01);
    const auto c2 = cosine_curve(4, n + 1, 0.02);
    const MappedGrid src(Phase::plus, c1, n + 1), dst(Phase::plus, c2, n / 2 + 1);
    Field2D u(src.nx(), src.ns());
    for (int i = 0; i < src.nx(); ++i)
      for (int j = 0; j < src.ns(); ++j) u(i, j) = field(src.x(i), src.r(i, j));
    const Field2D out = transfer_field(src, u, dst);
    double err = 0.0;
    for (int i = 0; i < dst.nx(); ++i)
      for (int j = 0; j < dst.ns(); ++j) err = std::max(err, std::abs(out(i, j) - field(dst.x(i), dst.r(i, j))));
    if (level > 0) EXPECT_GT(prev / err, 3.5) << "level " << level;
    prev = err;
  }
}
