#include <gtest/gtest.h>

#include <beampinn/quadrature.hpp>

#include <cmath>

namespace beampinn {
namespace {

TEST(Quadrature, MidpointRule) {
  const auto r = gauss_legendre(1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r.nodes[0], 0.5);
  EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
}

TEST(Quadrature, TwoPointRule) {
  const auto r = gauss_legendre(2);
  const double off = 1.0 / (2.0 * std::sqrt(3.0));
  EXPECT_NEAR(r.nodes[0], 0.5 - off, 1e-15);
  EXPECT_NEAR(r.nodes[1], 0.5 + off, 1e-15);
  EXPECT_NEAR(r.nodes[0], 0.211324865, 1e-9);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-15);
  EXPECT_NEAR(r.integrate([](double x) { return x * x * x; }), 0.25, 1e-16);
}

TEST(Quadrature, OutOfRangeIsRejected) {
  EXPECT_THROW(gauss_legendre(0), contract_violation);
  EXPECT_THROW(gauss_legendre(129), contract_violation);
}

TEST(Quadrature, WeightsSumToOneAndRuleIsSymmetric) {
  for (std::size_t n : {1u, 2u, 3u, 7u, 32u, 64u, 127u, 128u}) {
    const auto r = gauss_legendre(n);
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-14) << n;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_GT(r.nodes[i], 0.0);
      EXPECT_LT(r.nodes[i], 1.0);
      EXPECT_NEAR(r.nodes[i] + r.nodes[n - 1 - i], 1.0, 1e-15);
      EXPECT_NEAR(r.weights[i], r.weights[n - 1 - i], 1e-15);
      if (i > 0) EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
    }
  }
}

TEST(Quadrature, ExactForPolynomialsUpToDegree2nMinus1) {
  for (std::size_t n = 1; n <= 24; ++n) {
    const auto r = gauss_legendre(n);
    for (std::size_t k = 0; k <= 2 * n - 1; ++k) {
      const double got = r.integrate([k](double x) { return std::pow(x, static_cast<double>(k)); });
      const double want = 1.0 / static_cast<double>(k + 1);
      EXPECT_LE(std::abs(got - want) / want, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, NewtonConvergesQuicklyWithSmallResidual) {
  for (std::size_t n = 1; n <= kMaxQuadraturePoints; ++n) {
    const auto r = gauss_legendre(n);
    EXPECT_LE(r.newton_steps, 20u) << n;
    for (double node : r.nodes) {
      const auto [pn, dpn] = legendre_with_derivative(n, 2.0 * node - 1.0);
      EXPECT_LE(std::abs(pn / dpn), 1e-15) << n;
    }
  }
}

}  // namespace
}  // namespace beampinn
