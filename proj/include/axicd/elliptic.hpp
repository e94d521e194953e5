#pragma once

// Per-phase elliptic solves on a mapped grid.
//
// Both problems share one discrete form,
//     cx u_xx + cr (u_rr + u_r / r) + c0 u / r^2 = source
// with one boundary row per side node: either a Dirichlet value or an
// oblique condition ax u_x + ar u_r + c u = value built from the same
// one-sided stencils used when fields are differentiated later. The matrix
// depends only on the grid and the condition coefficients, so it is factored
// once and reused for every right-hand side.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "axicd/eos.hpp"
#include "axicd/errors.hpp"
#include "axicd/geometry.hpp"

namespace axicd {

struct LinearSolveReport {
  int iterations = 0;  // 1 + refinement steps
  double residual = 0.0;
  double elapsed = 0.0;
};

struct PdeCoeffs {
  double cx = 1.0;
  double cr = 1.0;
  double c0 = 0.0;
};

struct BoundaryRow {
  bool dirichlet = true;
  double ax = 0.0;
  double ar = 0.0;
  double c = 0.0;

  static BoundaryRow fixed() { return {}; }
  static BoundaryRow oblique(double ax, double ar, double c = 0.0) { return {false, ax, ar, c}; }
};

//! Condition coefficients per boundary node. Entrance/exit are indexed by
//! j, interface/outer by i. `outer` is ignored on the minus phase, whose
//! first row reflects through the axis.
struct SideSpec {
  std::vector<BoundaryRow> entrance, exit, interface, outer;
};

struct BoundaryValues {
  std::vector<double> entrance, exit, interface, outer;

  static BoundaryValues zeros(const MappedGrid& g) {
    const auto nx = static_cast<std::size_t>(g.nx());
    const auto ns = static_cast<std::size_t>(g.ns());
    return {std::vector<double>(ns), std::vector<double>(ns), std::vector<double>(nx),
            std::vector<double>(nx)};
  }
};

class EllipticOperator {
 public:
  enum class Role { interior, entrance, exit, interface, outer };

  EllipticOperator(const MappedGrid& grid, PdeCoeffs pde, SideSpec sides, Parity axis_parity,
                   double algebraic_tol = 1e-11)
      : grid_(grid), pde_(pde), sides_(std::move(sides)), parity_(axis_parity), tol_(algebraic_tol) {
    assemble();
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->analyzePattern(matrix_);
    lu_->factorize(matrix_);
    if (lu_->info() != Eigen::Success) {
      fail(ErrorKind::LinearSolveFailed, "sparse factorization failed: " + lu_->lastErrorMessage());
    }
  }

  const MappedGrid& grid() const { return grid_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  Role role(int i, int j) const { return roles_[static_cast<std::size_t>(grid_.index(i, j))]; }
  Parity parity() const { return parity_; }

  Eigen::VectorXd rhs(const Field2D& source, const BoundaryValues& values) const {
    Eigen::VectorXd b(grid_.nodes());
    for (int i = 0; i < grid_.nx(); ++i) {
      for (int j = 0; j < grid_.ns(); ++j) {
        const int k = grid_.index(i, j);
        switch (roles_[k]) {
          case Role::interior: b[k] = source(i, j); break;
          case Role::entrance: b[k] = values.entrance[j]; break;
          case Role::exit: b[k] = values.exit[j]; break;
          case Role::interface: b[k] = values.interface[i]; break;
          case Role::outer: b[k] = values.outer[i]; break;
        }
      }
    }
    return b;
  }

  //! Normwise backward error |Au - b| / (|A| |u| + |b|) in the max norm.
  double relative_residual(const Eigen::VectorXd& u, const Eigen::VectorXd& b) const {
    const double r = (matrix_ * u - b).lpNorm<Eigen::Infinity>();
    const double scale = matrix_norm_ * u.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
    return scale > 0.0 ? r / scale : r;
  }

  Field2D solve(const Field2D& source, const BoundaryValues& values,
                LinearSolveReport* report = nullptr) const {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::VectorXd b = rhs(source, values);
    Eigen::VectorXd u = lu_->solve(b);
    double res = relative_residual(u, b);
    int iterations = 1;
    while (res > tol_ && iterations < 4) {
      u += lu_->solve(b - matrix_ * u);
      res = relative_residual(u, b);
      ++iterations;
    }
    if (!std::isfinite(res) || res > tol_) {
      fail(ErrorKind::LinearSolveFailed, "relative residual " + std::to_string(res) + " above " +
                                             std::to_string(tol_));
    }
    if (report) {
      report->iterations = iterations;
      report->residual = res;
      report->elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    Field2D out(grid_.nx(), grid_.ns());
    for (int k = 0; k < grid_.nodes(); ++k) out.data[k] = u[k];
    return out;
  }

  //! Stencil of the boundary row (i, j) with the given coefficients.
  Stencil boundary_stencil(int i, int j, const BoundaryRow& row) const {
    Stencil st;
    if (row.dirichlet) {
      st.add(grid_.index(i, j), 1.0);
      return st;
    }
    if (row.ax != 0.0) st.add(stencil::d_dx(grid_, i, j, parity_), row.ax);
    if (row.ar != 0.0) st.add(stencil::d_dr(grid_, i, j, parity_), row.ar);
    if (row.c != 0.0) st.add(grid_.index(i, j), row.c);
    return st;
  }

  Stencil interior_stencil(int i, int j) const {
    Stencil st;
    st.add(stencil::d2_dx2(grid_, i, j, parity_), pde_.cx);
    st.add(stencil::radial_laplacian(grid_, i, j, parity_), pde_.cr);
    if (pde_.c0 != 0.0) {
      const double r = grid_.r(i, j);
      if (!(r > 0.0)) fail(ErrorKind::AxisSingularity, "interior node on the axis");
      st.add(grid_.index(i, j), pde_.c0 / (r * r));
    }
    return st;
  }

 private:
  void assemble() {
    const int nx = grid_.nx();
    const int ns = grid_.ns();
    roles_.assign(static_cast<std::size_t>(grid_.nodes()), Role::interior);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(grid_.nodes()) * 13);
    Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(grid_.nodes());

    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ns; ++j) {
        const int k = grid_.index(i, j);
        const bool x_side = i == 0 || i == nx - 1;
        const bool iface = j == grid_.interface_row();
        const bool outer = !grid_.has_axis() && j == grid_.outer_row();
        const bool r_side = iface || outer;

        Role role = Role::interior;
        const BoundaryRow* x_row = nullptr;
        const BoundaryRow* r_row = nullptr;
        if (x_side) x_row = i == 0 ? &sides_.entrance[j] : &sides_.exit[j];
        if (r_side) r_row = iface ? &sides_.interface[i] : &sides_.outer[i];
        const Role x_role = i == 0 ? Role::entrance : Role::exit;
        const Role r_role = iface ? Role::interface : Role::outer;

        if (x_side && r_side) {
          // Dirichlet wins at corners; otherwise the radial side's condition holds.
          role = x_row->dirichlet ? x_role : r_role;
        } else if (x_side) {
          role = x_role;
        } else if (r_side) {
          role = r_role;
        }
        roles_[k] = role;

        Stencil st;
        switch (role) {
          case Role::interior: st = interior_stencil(i, j); break;
          case Role::entrance:
          case Role::exit: st = boundary_stencil(i, j, *x_row); break;
          case Role::interface:
          case Role::outer: st = boundary_stencil(i, j, *r_row); break;
        }
        for (const Tap& t : st.taps()) {
          triplets.emplace_back(k, t.index, t.weight);
          row_sum[k] += std::abs(t.weight);
        }
      }
    }
    matrix_.resize(grid_.nodes(), grid_.nodes());
    matrix_.setFromTriplets(triplets.begin(), triplets.end());
    matrix_.makeCompressed();
    matrix_norm_ = row_sum.maxCoeff();
  }

  MappedGrid grid_;
  PdeCoeffs pde_;
  SideSpec sides_;
  Parity parity_;
  double tol_;
  std::vector<Role> roles_;
  Eigen::SparseMatrix<double> matrix_;
  double matrix_norm_ = 0.0;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

// ---------------------------------------------------------------------------
// Boundary descriptions of the two problems.

//! Potential perturbation: Dirichlet at entrance/exit, zero normal derivative
//! on the wall, prescribed normal derivative on the plus interface and
//! Dirichlet on the minus interface.
inline SideSpec potential_sides(const MappedGrid& g) {
  SideSpec s;
  s.entrance.assign(static_cast<std::size_t>(g.ns()), BoundaryRow::fixed());
  s.exit.assign(static_cast<std::size_t>(g.ns()), BoundaryRow::fixed());
  s.outer.assign(static_cast<std::size_t>(g.nx()), BoundaryRow::oblique(0.0, 1.0));
  s.interface.resize(static_cast<std::size_t>(g.nx()));
  const auto frame = interface_frame(g.curve());
  for (int i = 0; i < g.nx(); ++i) {
    s.interface[i] = g.phase() == Phase::plus
                         ? BoundaryRow::oblique(frame[i].n_plus[0], frame[i].n_plus[1])
                         : BoundaryRow::fixed();
  }
  return s;
}

//! Azimuthal stream function: zero axial derivative at entrance/exit,
//! Dirichlet on the plus wall and interface, and on the minus interface
//! (1/r) grad(r psi) . n_minus = value.
inline SideSpec stream_sides(const MappedGrid& g) {
  SideSpec s;
  s.entrance.assign(static_cast<std::size_t>(g.ns()), BoundaryRow::oblique(1.0, 0.0));
  s.exit.assign(static_cast<std::size_t>(g.ns()), BoundaryRow::oblique(1.0, 0.0));
  s.outer.assign(static_cast<std::size_t>(g.nx()), BoundaryRow::fixed());
  s.interface.resize(static_cast<std::size_t>(g.nx()));
  const auto frame = interface_frame(g.curve());
  for (int i = 0; i < g.nx(); ++i) {
    if (g.phase() == Phase::plus) {
      s.interface[i] = BoundaryRow::fixed();
    } else {
      const Vec3& n = frame[i].n_minus;
      const double f = g.curve().f(i);
      s.interface[i] = BoundaryRow::oblique(n[0], n[1], n[1] / f);
    }
  }
  return s;
}

//! Robin coefficient mu_f = -1 / (f sqrt(1 + f'^2)) of the minus-phase condition
//! grad psi . n - mu_f psi = value.
inline double robin_coefficient(const InterfaceCurve& f, int i) {
  const double fp = f.slope(i);
  return -1.0 / (f.f(i) * std::sqrt(1.0 + fp * fp));
}

inline EllipticOperator potential_operator(const FlowConstants& c, const MappedGrid& g,
                                           double algebraic_tol = 1e-11) {
  const auto a = linearization_coeffs(c, g.phase());
  return EllipticOperator(g, {a.a11, a.a22, 0.0}, potential_sides(g), Parity::even, algebraic_tol);
}

inline EllipticOperator stream_operator(const MappedGrid& g, double algebraic_tol = 1e-11) {
  return EllipticOperator(g, {-1.0, -1.0, 1.0}, stream_sides(g), Parity::odd, algebraic_tol);
}

//! Boundary data of the potential problem. `entrance_potential[j]` is the
//! entrance Dirichlet value at row j.
inline BoundaryValues potential_values(const FlowConstants& c, const MappedGrid& g,
                                       std::vector<double> entrance_potential) {
  BoundaryValues v = BoundaryValues::zeros(g);
  v.entrance = std::move(entrance_potential);
  if (g.phase() == Phase::plus) {
    const auto frame = interface_frame(g.curve());
    // grad phi_hat . n_plus = -grad phi0 . n_plus
    for (int i = 0; i < g.nx(); ++i) v.interface[i] = -c.u0_plus * frame[i].n_plus[0];
  }
  return v;
}

//! Boundary data of the stream problem; `robin_datum` is used on the minus interface.
inline BoundaryValues stream_values(const MappedGrid& g, const std::vector<double>& robin_datum) {
  BoundaryValues v = BoundaryValues::zeros(g);
  if (g.phase() == Phase::minus) {
    for (int i = 0; i < g.nx(); ++i) v.interface[i] = -robin_datum[i];
  }
  return v;
}

// ---------------------------------------------------------------------------
// Velocity pieces on a grid.

struct VectorField {
  Field2D x, r, theta;

  VectorField() = default;
  VectorField(int nx, int ns) : x(nx, ns), r(nx, ns), theta(nx, ns) {}
  Vec3 at(int i, int j) const { return {x(i, j), r(i, j), theta(i, j)}; }
};

//! Gradient of a potential-like field (even across the axis).
inline VectorField potential_gradient(const MappedGrid& g, const Field2D& phi) {
  VectorField out(g.nx(), g.ns());
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      const auto [dx, dr] = gradient(g, phi, i, j, Parity::even);
      out.x(i, j) = dx;
      out.r(i, j) = dr;
    }
  }
  return out;
}

//! curl(psi e_theta) + (Lambda / r) e_theta.
inline VectorField rotational_velocity(const MappedGrid& g, const Field2D& psi,
                                       const Field2D& lambda) {
  VectorField out(g.nx(), g.ns());
  for (int i = 0; i < g.nx(); ++i) {
    for (int j = 0; j < g.ns(); ++j) {
      const double r = g.r(i, j);
      const auto [dx, dr] = gradient(g, psi, i, j, Parity::odd);
      out.x(i, j) = psi(i, j) / r + dr;
      out.r(i, j) = -dx;
      out.theta(i, j) = lambda(i, j) / r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct PicardSettings {
  double tol = 1e-10;
  int max_iterations = 100;
  double damping = 1.0;
  int growth_limit = 5;
  int max_halvings = 4;
};

struct PicardReport {
  int iterations = 0;
  double change = 0.0;
  double damping = 1.0;
  std::vector<double> history;
  LinearSolveReport last_solve;
};

//! Discrete div F = d_x F_x + d_r F_r + F_r / r at an interior node.
inline double flux_divergence(const MappedGrid& g, const Field2D& fx, const Field2D& fr, int i,
                              int j) {
  return stencil::d_dx(g, i, j, Parity::even).apply(fx) +
         stencil::d_dr(g, i, j, Parity::odd).apply(fr) + fr(i, j) / g.r(i, j);
}

//! Picard iteration for the potential perturbation: freeze the remainder
//! flux at the current iterate, solve the constant-coefficient problem,
//! repeat. `entropy` and `rotational` are the frozen S and t fields.
inline Field2D solve_phi(const FlowConstants& c, const EllipticOperator& op,
                         const BoundaryValues& values, const Field2D& entropy,
                         const VectorField& rotational, Field2D phi, const PicardSettings& settings,
                         PicardReport* report = nullptr) {
  const MappedGrid& g = op.grid();
  const Phase phase = g.phase();
  const double S0 = c.S0(phase);
  double omega = settings.damping;
  int growth = 0;
  int halvings = 0;
  double prev_change = INFINITY;
  PicardReport rep;
  Field2D fx(g.nx(), g.ns());
  Field2D fr(g.nx(), g.ns());
  Field2D source(g.nx(), g.ns());

  for (int it = 1; it <= settings.max_iterations; ++it) {
    const VectorField grad = potential_gradient(g, phi);
    for (int i = 0; i < g.nx(); ++i) {
      for (int j = 0; j < g.ns(); ++j) {
        const Vec3 F = remainder_flux(c, phase, entropy(i, j) - S0, grad.at(i, j),
                                      rotational.at(i, j));
        fx(i, j) = F[0];
        fr(i, j) = F[1];
      }
    }
    for (int i = 0; i < g.nx(); ++i) {
      for (int j = 0; j < g.ns(); ++j) {
        source(i, j) = op.role(i, j) == EllipticOperator::Role::interior
                           ? flux_divergence(g, fx, fr, i, j)
                           : 0.0;
      }
    }
    const Field2D next = op.solve(source, values, &rep.last_solve);
    double change = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
      const double d = next.data[k] - phi.data[k];
      change = std::max(change, std::abs(d));
      phi.data[k] += omega * d;
    }
    rep.iterations = it;
    rep.change = change;
    rep.history.push_back(change);
    if (!std::isfinite(change)) fail(ErrorKind::PicardDiverged, "non-finite Picard update");
    if (change < settings.tol) {
      rep.damping = omega;
      if (report) *report = std::move(rep);
      return phi;
    }
    growth = change > prev_change ? growth + 1 : 0;
    prev_change = change;
    if (growth >= settings.growth_limit) {
      if (++halvings > settings.max_halvings) {
        fail(ErrorKind::PicardDiverged, "successive change grew for " +
                                            std::to_string(settings.growth_limit) +
                                            " sweeps at damping " + std::to_string(omega));
      }
      omega *= 0.5;
      growth = 0;
    }
  }
  fail(ErrorKind::PicardDiverged, "no convergence in " + std::to_string(settings.max_iterations) +
                                      " sweeps (last change " + std::to_string(rep.change) + ")");
}

//! One linear solve of the stream problem with source G.
inline Field2D solve_psi(const EllipticOperator& op, const Field2D& vorticity,
                         const BoundaryValues& values, LinearSolveReport* report = nullptr) {
  return op.solve(vorticity, values, report);
}

}  // namespace axicd
