#include <gtest/gtest.h>

#include <beampinn/network.hpp>

#include "support/oracles.hpp"

namespace beampinn {
namespace {

using testing::Real;

TEST(Network, DefaultArchitectureParameterCount) {
  EXPECT_EQ(parameter_count(default_shapes()), 4353u);
  EXPECT_EQ(parameter_count(diagnostic_shapes()), 321u);
  EXPECT_EQ(init(0, default_shapes()).size(), 4353u);
}

TEST(Network, InitIsDeterministicWithZeroBiases) {
  const MlpParams a = init(0, default_shapes());
  const MlpParams b = init(0, default_shapes());
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_NE(a.theta, init(1, default_shapes()).theta);
  for (std::size_t l = 0; l < a.layer_shapes.size(); ++l) {
    const auto [in, out] = a.layer_shapes[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) EXPECT_LE(std::abs(a.theta[a.weight_offset(l) + i]), limit);
    for (std::size_t i = 0; i < out; ++i) EXPECT_EQ(a.theta[a.bias_offset(l) + i], 0.0);
  }
}

TEST(Network, InconsistentShapesAreRejected) {
  EXPECT_THROW(init(0, {{1, 4}, {5, 1}}), contract_violation);
  EXPECT_THROW(init(0, {{2, 4}, {4, 1}}), contract_violation);
  EXPECT_THROW(init(0, {}), contract_violation);
  MlpParams p = init(0, default_shapes());
  p.theta.pop_back();
  EXPECT_THROW(p.validate(), contract_violation);
}

TEST(Network, ZeroParamsGiveZeroOutput) {
  const MlpParams p = zero_params(default_shapes());
  for (double xi : {0.0, 0.25, 1.0}) EXPECT_EQ(forward(p, xi).d[0], 0.0);
}

TEST(Network, SingleNeuronChain) {
  // y = tanh(tanh(xi)): y(0) = 0, y'(0) = 1.
  MlpParams p = zero_params({{1, 1}, {1, 1}});
  p.theta = {1.0, 0.0, 1.0, 0.0};
  const Jet4 y = forward(p, 0.0);
  EXPECT_DOUBLE_EQ(y.d[0], 0.0);
  EXPECT_DOUBLE_EQ(y.d[1], 1.0);
}

TEST(Network, JetMatchesFiniteDifferencesInXi) {
  const MlpParams p = init(3, default_shapes());
  const Jet4 y = forward(p, 0.5);
  const auto fd = testing::fd_derivatives([&](Real x) { return testing::reference_forward(p, x).d[0]; }, 0.5L, 1e-2L);
  for (std::size_t k = 1; k < 5; ++k) {
    const double tol = k <= 3 ? 1e-5 : 1e-3;
    EXPECT_LE(testing::relative_error(y.d[k], static_cast<double>(fd[k])), tol) << "order " << k;
  }
}

TEST(Network, BatchedAndSinglePointEvaluationsAgree) {
  const MlpParams p = init(9, default_shapes());
  const std::vector<double> xi{0.0, 0.3, 0.8, 1.0};
  Tape tape;
  const NodeRef out = forward(p, xi, tape);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const Jet4 single = forward(p, xi[i]);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(tape.jet(out, i).d[k], single.d[k], 1e-13 * (1 + std::abs(single.d[k])));
  }
}

TEST(Network, TaylorExtrapolationIsFifthOrder) {
  const MlpParams p = init(4, default_shapes());
  const double x0 = 0.4;
  const Jet4 j = forward(p, x0);
  double prev = 0.0;
  for (double dx : {0.04, 0.02}) {
    const double taylor = j.d[0] + j.d[1] * dx + j.d[2] * dx * dx / 2 + j.d[3] * std::pow(dx, 3) / 6 + j.d[4] * std::pow(dx, 4) / 24;
    const double err = std::abs(forward(p, x0 + dx).d[0] - taylor);
    if (prev > 0.0) EXPECT_GT(prev / err, 20.0);  // ~2^5 = 32 when halving dx
    prev = err;
  }
}

TEST(Network, OddUnderParameterNegationWithZeroBiases) {
  const MlpParams p = init(8, default_shapes());
  MlpParams neg = p;
  for (double& t : neg.theta) t = -t;
  for (double xi : {0.1, 0.5, 0.9}) {
    const Jet4 a = forward(p, xi);
    const Jet4 b = forward(neg, xi);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(a.d[k], -b.d[k], 1e-14 * (1 + std::abs(a.d[k])));
  }
}

TEST(Network, JsonRoundTripIsExact) {
  const MlpParams p = init(12, diagnostic_shapes());
  const MlpParams q = params_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(p.theta, q.theta);
  EXPECT_EQ(p.layer_shapes, q.layer_shapes);
  EXPECT_EQ(p.tanh_output, q.tanh_output);
}

}  // namespace
}  // namespace beampinn
