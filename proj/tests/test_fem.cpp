#include <gtest/gtest.h>

#include <beampinn/fem.hpp>

#include <cmath>

namespace beampinn {
namespace {

TEST(Fem, ElementStiffnessSymmetricWithRigidModes) {
  const double h = 0.2;
  const Eigen::Matrix4d k = element_stiffness(h);
  EXPECT_EQ(k, k.transpose());
  EXPECT_LT((k * Eigen::Vector4d(1, 0, 1, 0)).norm(), 1e-10);
  EXPECT_LT((k * Eigen::Vector4d(0, 1, h, 1)).norm(), 1e-10);
}

TEST(Fem, SingleClampedElementIsFullyConstrained) {
  const auto m = assemble(make_case(CaseKind::CC), 1);
  EXPECT_EQ(m.constrained_dofs.size(), 4u);
  const auto u = solve(m);
  EXPECT_EQ(u.norm(), 0.0);
  EXPECT_EQ(fem_deflection(m, u, 0.5), 0.0);
  EXPECT_GT(analytical_deflection(make_case(CaseKind::CC), 0.5), 0.0);
}

TEST(Fem, AssembledStiffnessNullspace) {
  const auto m = assemble(make_case(CaseKind::SS), 10);
  const auto n = static_cast<Eigen::Index>(m.dofs());
  Eigen::VectorXd translation = Eigen::VectorXd::Zero(n), rotation = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i <= m.n_elem; ++i) {
    translation(static_cast<Eigen::Index>(2 * i)) = 1.0;
    rotation(static_cast<Eigen::Index>(2 * i)) = static_cast<double>(i) * m.h;
    rotation(static_cast<Eigen::Index>(2 * i + 1)) = 1.0;
  }
  EXPECT_LT((m.stiffness * translation).norm(), 1e-9);
  EXPECT_LT((m.stiffness * rotation).norm(), 1e-9);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.stiffness);
  const double top = eig.eigenvalues().maxCoeff();
  int nullity = 0;
  for (Eigen::Index i = 0; i < n; ++i) nullity += std::abs(eig.eigenvalues()(i)) < 1e-10 * top;
  EXPECT_EQ(nullity, 2);
}

TEST(Fem, TotalLoadIsResultant) {
  for (double q : {1.0, 3.5}) {
    const auto m = assemble(make_case(CaseKind::CV, q), 7);
    double s = 0.0;
    for (std::size_t i = 0; i <= m.n_elem; ++i) s += m.load(static_cast<Eigen::Index>(2 * i));
    EXPECT_NEAR(s, q, 1e-14 * q);
  }
}

TEST(Fem, NodalExactness) {
  for (CaseKind k : kAllCases) {
    const BeamCase c = make_case(k);
    const auto m = assemble(c, 50);
    const auto u = solve(m);
    double ymax = 0.0, err = 0.0;
    for (std::size_t i = 0; i <= m.n_elem; ++i) {
      const double x = static_cast<double>(i) * m.h;
      const double y = analytical_deflection(c, x);
      ymax = std::max(ymax, std::abs(y));
      err = std::max(err, std::abs(u(static_cast<Eigen::Index>(2 * i)) - y));
      EXPECT_NEAR(u(static_cast<Eigen::Index>(2 * i + 1)), analytical_jet(c, x).d[1], 1e-9 * 0.2);
    }
    EXPECT_LT(err / ymax, 1e-10) << to_string(k);
  }
}

TEST(Fem, ReferenceDeflections) {
  const auto ss = assemble(make_case(CaseKind::SS), 50);
  EXPECT_NEAR(solve(ss)(50), 5.0 / 384.0, 1e-10 * 5.0 / 384.0);
  const auto cv = assemble(make_case(CaseKind::CV, 2.0), 50);
  EXPECT_NEAR(solve(cv)(100), 2.0 / 8.0, 1e-10 * 2.0 / 8.0);
}

TEST(Fem, CurvatureIsPiecewiseLinear) {
  const auto m = assemble(make_case(CaseKind::CC), 8);
  const auto u = solve(m);
  for (std::size_t e = 0; e < m.n_elem; ++e) {
    const double a = (static_cast<double>(e) + 0.1) * m.h, b = (static_cast<double>(e) + 0.9) * m.h;
    EXPECT_NEAR(fem_curvature(m, u, 0.5 * (a + b)), 0.5 * (fem_curvature(m, u, a) + fem_curvature(m, u, b)), 1e-12);
  }
}

TEST(Fem, ClampedEndCurvature) {
  const auto m = assemble(make_case(CaseKind::CC), 50);
  EXPECT_NEAR(fem_curvature(m, solve(m), 0.0), 1.0 / 12.0, m.h * m.h);
}

double max_curvature_error(CaseKind k, std::size_t n) {
  const BeamCase c = make_case(k);
  const auto m = assemble(c, n);
  const auto u = solve(m);
  double err = 0.0;
  for (double x : uniform_grid(0.0, 1.0, 2001)) err = std::max(err, std::abs(fem_curvature(m, u, x) - analytical_curvature(c, x)));
  return err;
}

TEST(Fem, CurvatureConvergesAtSecondOrder) {
  for (CaseKind k : kAllCases) {
    const double e25 = max_curvature_error(k, 25), e50 = max_curvature_error(k, 50), e100 = max_curvature_error(k, 100);
    EXPECT_NEAR(std::log2(e25 / e50), 2.0, 0.2) << to_string(k);
    EXPECT_NEAR(std::log2(e50 / e100), 2.0, 0.2) << to_string(k);
  }
}

TEST(Fem, CurvatureErrorRepeatsPerElement) {
  // Interpolation error of a quadratic by the element's linear curvature has
  // the same shape on every element: zero at two interior points, extreme at
  // the element ends.
  const BeamCase c = make_case(CaseKind::CC);
  const auto m = assemble(c, 10);
  const auto u = solve(m);
  auto err = [&](std::size_t e, double t) {
    const double x = (static_cast<double>(e) + t) * m.h;
    return fem_curvature(m, u, x) - analytical_curvature(c, x);
  };
  const double h2 = m.h * m.h;
  for (std::size_t e = 0; e < m.n_elem; ++e) {
    EXPECT_NEAR(err(e, 1e-13), -h2 / 12.0, 1e-12);
    EXPECT_NEAR(err(e, 1.0), -h2 / 12.0, 1e-12);
    EXPECT_NEAR(err(e, 0.5), h2 / 24.0, 1e-12);
    const double r = 0.5 - std::sqrt(3.0) / 6.0;
    EXPECT_NEAR(err(e, r), 0.0, 1e-12);
    EXPECT_NEAR(err(e, 1.0 - r), 0.0, 1e-12);
  }
}

TEST(Fem, StrainFieldLayoutMatchesAnalytical) {
  const auto m = assemble(make_case(CaseKind::SS), 50);
  const auto field = fem_strain_field(m, solve(m));
  EXPECT_EQ(field.strain.size(), 201u);
  EXPECT_EQ(field.strain[0].size(), 41u);
  EXPECT_GT(field.max_abs_error(), 0.0);
  EXPECT_LT(field.max_abs_error(), 0.05 * m.h * m.h / 12.0 * 1.0001);
}

TEST(Fem, RejectsZeroElements) { EXPECT_THROW(assemble(make_case(CaseKind::CC), 0), contract_violation); }

}  // namespace
}  // namespace beampinn
