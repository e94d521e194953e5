#include <cmath>

#include <gtest/gtest.h>

#include "axicd/solver.hpp"

using namespace axicd;

namespace {

const FlowConstants kC{};

SolverConfig small_config() {
  SolverConfig cfg;
  cfg.nx = 33;
  cfg.ns_plus = 20;
  cfg.ns_minus = 20;
  cfg.tol_picard = 1e-15;
  return cfg;
}

}  // namespace

TEST(SolveTruncated, BackgroundIsAFixedPoint) {
  const Solution sol = solve_truncated(kC, EntranceProfiles::background(kC), small_config());
  EXPECT_LE(sol.outer_iterations(), 2);
  for (int i = 0; i < sol.f.size(); ++i) EXPECT_NEAR(sol.f.f(i), 0.5, 1e-12);
  for (Phase p : {Phase::plus, Phase::minus}) {
    const PhaseFlow& pf = sol.phase(p);
    for (std::size_t k = 0; k < pf.p.size(); ++k) {
      EXPECT_NEAR(pf.p.data[k], kC.p0, 1e-12);
      EXPECT_NEAR(pf.velocity.x.data[k], kC.u0(p), 1e-12);
      EXPECT_NEAR(pf.S.data[k], kC.S0(p), 1e-12);
    }
  }
  EXPECT_LE(sol.diagnostics.max_residual(), 1e-11);
}

TEST(Diagnostics, PressureBumpShowsInMomentumOnly) {
  Solution sol = solve_truncated(kC, EntranceProfiles::background(kC), small_config());
  PhaseFlow& pf = sol.minus;
  const int ic = pf.grid.nx() / 2, jc = pf.grid.ns() / 2;
  for (int i = ic - 2; i <= ic + 2; ++i)
    for (int j = jc - 2; j <= jc + 2; ++j) pf.p(i, j) *= 1.0 + 1e-3 * std::exp(-((i - ic) * (i - ic) + (j - jc) * (j - jc)));
  const Diagnostics d = diagnostics(sol);
  EXPECT_GT(std::max(d.minus.momentum_x, d.minus.momentum_r), 1e-4);
  EXPECT_LT(d.minus.continuity, 1e-12);
  EXPECT_LT(d.plus.max(), 1e-12);
}

TEST(SolveTruncated, SmallSigmaIsAdmissibleAndContracts) {
  const auto entrance =
      EntranceProfiles::bumps_with_sigma(kC, BumpAmplitudes{1, 1, 1, 1, 1, 1}, 1e-3);
  const Solution sol = solve_truncated(kC, entrance, small_config());
  const Diagnostics& d = sol.diagnostics;
  EXPECT_LE(d.bernoulli, 1e-10);
  EXPECT_GT(d.min_density, 0.0);
  EXPECT_LT(d.max_mach, 1.0);
  EXPECT_LT(d.pressure_jump, 1e-10);
  EXPECT_GT(d.ledger.f, 0.0);
  const double q = sol.middle_contraction(1e-14);
  EXPECT_GT(q, 0.0);
  EXPECT_LT(q, 1.0);
}

TEST(SolveTruncated, EntropyOnlyPerturbation) {
  BumpAmplitudes shape;
  shape.S_plus = 1.0;
  const Solution sol =
      solve_truncated(kC, EntranceProfiles::bumps_with_sigma(kC, shape, 1e-3), small_config());
  EXPECT_LT(sol.diagnostics.pressure_jump, 1e-10);
  EXPECT_GT(sol.diagnostics.ledger.S_plus, 0.0);
}

TEST(SolveTruncated, InvalidConfigIsRejected) {
  SolverConfig cfg = small_config();
  cfg.omega = 0.0;
  try {
    solve_truncated(kC, EntranceProfiles::background(kC), cfg);
    FAIL();
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
}

TEST(LengthSweep, BackgroundAgreesExactlyAndSpacingIsChecked) {
  SolverConfig cfg = small_config();
  cfg.nx = 21;
  cfg.lengths = {10, 15};
  const LengthSweep sweep = solve_length_sweep(kC, EntranceProfiles::background(kC), cfg);
  ASSERT_EQ(sweep.comparisons.size(), 1u);
  EXPECT_LT(sweep.comparisons[0].max_absolute(), 1e-13);
  EXPECT_EQ(sweep.solutions[1].f.size(), 31);
  EXPECT_THROW(scaled_nodes(64, 10, 15), SolverError);
  EXPECT_EQ(scaled_nodes(61, 10, 20), 121);
}

TEST(SigmaStudy, ZeroRowAndLinearity) {
  SolverConfig cfg = small_config();
  const SigmaStudy study =
      sigma_scaling_study(kC, BumpAmplitudes{1, 1, 1, 1, 1, 1}, {0.0, 5e-4, 1e-3}, cfg);
  // The background is reproduced up to round-off.
  for (const auto& [name, v] : study.rows[0].ledger.entries()) EXPECT_LE(std::abs(v), 1e-14) << name;
  for (const auto& [name, ratio] : study.ratios[1]) {
    EXPECT_GT(ratio, 1.6) << name;
    EXPECT_LT(ratio, 2.4) << name;
  }
}
