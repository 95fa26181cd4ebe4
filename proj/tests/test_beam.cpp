#include <gtest/gtest.h>

#include <beampinn/beam.hpp>
#include <beampinn/network.hpp>

#include "support/oracles.hpp"

#include <random>

namespace beampinn {
namespace {

TEST(Beam, OperatorsPerCase) {
  using Ops = std::array<BoundaryOperator, 4>;
  EXPECT_EQ(make_case(CaseKind::CV).operators, (Ops{{{0, 0}, {0, 1}, {1, 2}, {1, 3}}}));
  EXPECT_EQ(make_case(CaseKind::SS).operators, (Ops{{{0, 0}, {0, 2}, {1, 0}, {1, 2}}}));
  EXPECT_EQ(make_case(CaseKind::CC).operators, (Ops{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}}));
}

TEST(Beam, MidspanDeflections) {
  EXPECT_NEAR(analytical_deflection(make_case(CaseKind::CC), 0.5), 1.0 / 384.0, 1e-17);
  EXPECT_NEAR(analytical_deflection(make_case(CaseKind::SS), 0.5), 5.0 / 384.0, 1e-17);
  EXPECT_NEAR(analytical_deflection(make_case(CaseKind::CV), 1.0), 1.0 / 8.0, 1e-16);
  for (CaseKind k : kAllCases) EXPECT_EQ(analytical_deflection(make_case(k), 0.0), 0.0);
}

TEST(Beam, Curvatures) {
  EXPECT_NEAR(analytical_curvature(make_case(CaseKind::CC), 0.0), 1.0 / 12.0, 1e-16);
  EXPECT_EQ(analytical_curvature(make_case(CaseKind::SS), 0.0), 0.0);
  EXPECT_NEAR(analytical_curvature(make_case(CaseKind::CV), 1.0), 0.0, 1e-16);
}

TEST(Beam, ClosedFormsSatisfyOdeAndBoundaryOperators) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (CaseKind k : kAllCases) {
    for (double q : {1.0, -2.5}) {
      const BeamCase c = make_case(k, q);
      for (const auto& op : c.operators)
        EXPECT_NEAR(apply_boundary_operator(op, analytical_jet(c, op.location)), 0.0, 1e-14) << to_string(k);
      for (int i = 0; i < 100; ++i) EXPECT_NEAR(analytical_jet(c, u(rng)).d[4] - q, 0.0, 1e-12);
    }
  }
}

TEST(Beam, ClosedFormDerivativesMatchFiniteDifferences) {
  for (CaseKind k : kAllCases) {
    const BeamCase c = make_case(k);
    const auto fd = testing::fd_derivatives(
        [&](testing::Real x) { return static_cast<testing::Real>(analytical_deflection(c, static_cast<double>(x))); }, 0.3L, 1e-2L);
    const Jet4 j = analytical_jet(c, 0.3);
    for (std::size_t d = 1; d <= 3; ++d) EXPECT_NEAR(j.d[d], static_cast<double>(fd[d]), 1e-8);
  }
}

TEST(Beam, ApplyBoundaryOperator) {
  EXPECT_EQ(apply_boundary_operator({0, 0}, Jet4{{0.3, 0, 0, 0, 0}}), 0.3);
  EXPECT_NEAR(apply_boundary_operator({1, 2}, analytical_jet(make_case(CaseKind::CC), 1.0)), 1.0 / 12.0, 1e-16);
  EXPECT_EQ(apply_boundary_operator({1, 3}, forward(zero_params(default_shapes()), 1.0)), 0.0);
  EXPECT_THROW(apply_boundary_operator({1, 5}, Jet4{}), contract_violation);
}

TEST(Beam, AnsatzVanishesAtDirichletEnds) {
  const BeamCase cc = make_case(CaseKind::CC);
  for (double x : {0.0, 1.0}) {
    EXPECT_EQ(ansatz(cc, x).d[0], 0.0);
    EXPECT_EQ(ansatz(cc, x).d[1], 0.0);
  }
  const BeamCase ss = make_case(CaseKind::SS);
  EXPECT_EQ(ansatz(ss, 0.0).d[0], 0.0);
  EXPECT_EQ(ansatz(ss, 1.0).d[0], 0.0);
  for (double x : {0.0, 0.3, 1.0}) EXPECT_EQ(ansatz(ss, x).d[2], -2.0);
  const BeamCase cv = make_case(CaseKind::CV);
  EXPECT_EQ(ansatz(cv, 0.0).d[0], 0.0);
  EXPECT_EQ(ansatz(cv, 0.0).d[1], 0.0);
  EXPECT_EQ(ansatz(cv, 0.0).d[2], 2.0);
}

TEST(Beam, AnsatzTimesAnyNetworkSatisfiesDirichletOperatorsExactly) {
  for (CaseKind k : kAllCases) {
    const BeamCase c = make_case(k);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const MlpParams p = testing::random_params(seed, {{1, 6}, {6, 6}, {6, 1}}, 2.0);
      for (const auto& op : c.operators) {
        if (!op.is_dirichlet()) continue;
        const Jet4 y = jet_mul(ansatz(c, op.location), forward(p, op.location));
        EXPECT_EQ(std::abs(apply_boundary_operator(op, y)), 0.0) << to_string(k) << " seed " << seed;
      }
    }
  }
}

TEST(Beam, StrainFieldProperties) {
  const BeamCase cc = make_case(CaseKind::CC);
  const auto field = strain_field([&](double x) { return analytical_curvature(cc, x); }, cc, default_xi_grid(), default_zeta_grid());
  ASSERT_EQ(field.xi_grid.size(), 201u);
  ASSERT_EQ(field.zeta_grid.size(), 41u);
  EXPECT_EQ(field.max_abs_error(), 0.0);
  const std::size_t mid = 20;  // zeta = 0
  EXPECT_EQ(field.zeta_grid[mid], 0.0);
  for (std::size_t i = 0; i < field.xi_grid.size(); ++i) {
    EXPECT_EQ(field.strain[i][mid], 0.0);
    for (std::size_t j = 0; j < field.zeta_grid.size(); ++j) EXPECT_EQ(field.strain[i][j], -field.strain[i][40 - j]);
  }
  // xi = 0, zeta = 0.05: -0.05/12
  EXPECT_NEAR(field.strain[0][40], -0.05 / 12.0, 1e-17);
}

TEST(Beam, StrainCsvLayout) {
  const BeamCase ss = make_case(CaseKind::SS);
  const auto field = strain_field([&](double x) { return analytical_curvature(ss, x); }, ss, {0.0, 0.5}, {-0.05, 0.0, 0.05});
  const std::string csv = strain_csv(field, false, "unit");
  EXPECT_EQ(csv.substr(0, 18), "# manifest: unit\nx");
  EXPECT_NE(csv.find("xi,-0.050000000000000003,0,0.050000000000000003\n"), std::string::npos);
  EXPECT_NE(csv.find("\n0.5,"), std::string::npos);
}

}  // namespace
}  // namespace beampinn
