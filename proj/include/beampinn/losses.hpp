#pragma once

// Loss formulations for the beam problem, evaluated by Gauss-Legendre
// quadrature with parameter gradients from a single reverse sweep.
//
//   strong_penalty   sum_g w_g (y''''(xi_g) - q)^2 + sum_i Gamma_i[y]^2
//   strong_embedded  same residual on y = f N; only the non-Dirichlet
//                    operators remain as penalties (none for CC)
//   energy_embedded  sum_g w_g (1/2 y''(xi_g)^2 - q y(xi_g)) on y = f N

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "beampinn/beam.hpp"
#include "beampinn/jets.hpp"
#include "beampinn/network.hpp"
#include "beampinn/quadrature.hpp"
#include "beampinn/tape.hpp"

namespace beampinn {

enum class Formulation { strong_penalty, strong_embedded, energy_embedded };

inline std::string_view to_string(Formulation f) {
  switch (f) {
    case Formulation::strong_penalty: return "strong_penalty";
    case Formulation::strong_embedded: return "strong_embedded";
    case Formulation::energy_embedded: return "energy_embedded";
  }
  return "?";
}

inline std::optional<Formulation> parse_formulation(std::string_view s) {
  if (s == "strong_penalty") return Formulation::strong_penalty;
  if (s == "strong_embedded") return Formulation::strong_embedded;
  if (s == "energy_embedded") return Formulation::energy_embedded;
  return std::nullopt;
}

inline bool uses_ansatz(Formulation f) { return f != Formulation::strong_penalty; }

/// Whether operator i of the case contributes a penalty term under `f`.
inline bool is_penalized(Formulation f, const BoundaryOperator& op) {
  switch (f) {
    case Formulation::strong_penalty: return true;
    case Formulation::strong_embedded: return !op.is_dirichlet();
    case Formulation::energy_embedded: return false;
  }
  return false;
}

struct LossBreakdown {
  double total = 0.0;
  double residual = 0.0;  // integral term (strong residual or energy functional)
  std::vector<double> bc_terms;                 // penalties included in total, in operator order
  std::array<double, 4> boundary_residuals{};   // Gamma_i[y] for all four operators, penalized or not
  std::vector<double> gradient;                 // d total / d theta; empty when not requested

  double bc_sum() const {
    double s = 0.0;
    for (double v : bc_terms) s += v;
    return s;
  }
  bool finite() const {
    if (!std::isfinite(total)) return false;
    for (double g : gradient)
      if (!std::isfinite(g)) return false;
    return true;
  }
};

/// Reusable evaluator for one (case, formulation, rule) triple. Not thread safe:
/// it owns the tape. Use one evaluator per thread.
class LossEvaluator {
 public:
  LossEvaluator(BeamCase beam, Formulation formulation, QuadratureRule rule)
      : case_(beam), formulation_(formulation), rule_(std::move(rule)) {
    expects(rule_.size() >= 1, "LossEvaluator: empty quadrature rule");
    points_ = rule_.nodes;
    points_.push_back(0.0);
    points_.push_back(1.0);
    if (uses_ansatz(formulation_)) {
      factors_.reserve(points_.size());
      for (double x : points_) factors_.push_back(ansatz(case_, x));
    }
  }

  const BeamCase& beam() const { return case_; }
  Formulation formulation() const { return formulation_; }
  const QuadratureRule& rule() const { return rule_; }

  LossBreakdown operator()(const MlpParams& params, bool with_gradient = true) {
    const NodeRef out = record(params);
    const std::size_t n_quad = rule_.size();
    const Tape::Block& y = tape_.value(out);
    Tape::Block seed;
    if (with_gradient) seed = Tape::Block::Zero(y.rows(), y.cols());

    LossBreakdown lb;
    const double q = case_.q_hat;
    for (std::size_t g = 0; g < n_quad; ++g) {
      const double w = rule_.weights[g];
      if (formulation_ == Formulation::energy_embedded) {
        const double d0 = y(0, Tape::col(g, 0));
        const double d2 = y(0, Tape::col(g, 2));
        lb.residual += w * (0.5 * d2 * d2 - q * d0);
        if (with_gradient) {
          seed(0, Tape::col(g, 2)) += w * d2;
          seed(0, Tape::col(g, 0)) -= w * q;
        }
      } else {
        const double r = y(0, Tape::col(g, 4)) - q;
        lb.residual += w * r * r;
        if (with_gradient) seed(0, Tape::col(g, 4)) += 2.0 * w * r;
      }
    }
    lb.total = lb.residual;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& op = case_.operators[i];
      const std::size_t p = boundary_point(op);
      const double v = y(0, Tape::col(p, op.order));
      lb.boundary_residuals[i] = v;
      if (!is_penalized(formulation_, op)) continue;
      lb.bc_terms.push_back(v * v);
      lb.total += v * v;
      if (with_gradient) seed(0, Tape::col(p, op.order)) += 2.0 * v;
    }
    if (with_gradient) lb.gradient = tape_.backward(out, seed);
    return lb;
  }

  /// Jets of the represented deflection (network, or ansatz times network).
  std::vector<Jet4> solution_jets(const MlpParams& params, std::span<const double> xi) {
    Tape tape;
    NodeRef out = forward(params, xi, tape);
    if (uses_ansatz(formulation_)) {
      std::vector<Jet4> f;
      f.reserve(xi.size());
      for (double x : xi) f.push_back(ansatz(case_, x));
      out = tape.mul_const(out, f);
    }
    std::vector<Jet4> jets(xi.size());
    for (std::size_t p = 0; p < xi.size(); ++p) jets[p] = tape.jet(out, p);
    return jets;
  }

  /// Rows d Gamma_i[y] / d theta for all four operators of the case.
  Eigen::MatrixXd boundary_jacobian(const MlpParams& params) {
    const NodeRef out = record(params);
    Eigen::MatrixXd jac(4, static_cast<Eigen::Index>(params.size()));
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& op = case_.operators[i];
      const auto g = tape_.backward(out, boundary_point(op), op.order);
      jac.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    }
    return jac;
  }

  /// Stacked least-squares residuals r and their Jacobian for the strong
  /// formulations: sqrt(w_g) (y''''(xi_g) - q) followed by the penalized
  /// boundary values, so that the strong loss equals |r|^2.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> residual_system(const MlpParams& params) {
    expects(formulation_ != Formulation::energy_embedded, "residual_system: energy loss is not least squares");
    const NodeRef out = record(params);
    const Tape::Block& y = tape_.value(out);
    std::vector<std::pair<std::size_t, std::size_t>> entries;  // (point, order)
    std::vector<double> scales;
    for (std::size_t g = 0; g < rule_.size(); ++g) {
      entries.emplace_back(g, 4);
      scales.push_back(std::sqrt(rule_.weights[g]));
    }
    for (const auto& op : case_.operators) {
      if (!is_penalized(formulation_, op)) continue;
      entries.emplace_back(boundary_point(op), op.order);
      scales.push_back(1.0);
    }
    const auto m = static_cast<Eigen::Index>(entries.size());
    Eigen::VectorXd r(m);
    Eigen::MatrixXd jac(m, static_cast<Eigen::Index>(params.size()));
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto [p, k] = entries[static_cast<std::size_t>(i)];
      const double s = scales[static_cast<std::size_t>(i)];
      const double offset = (k == 4) ? case_.q_hat : 0.0;
      r(i) = s * (y(0, Tape::col(p, k)) - offset);
      const auto g = tape_.backward(out, p, k);
      jac.row(i) = s * Eigen::Map<const Eigen::RowVectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
    }
    return {r, jac};
  }

 private:
  NodeRef record(const MlpParams& params) {
    NodeRef out = forward(params, points_, tape_);
    if (uses_ansatz(formulation_)) out = tape_.mul_const(out, factors_);
    return out;
  }

  std::size_t boundary_point(const BoundaryOperator& op) const {
    return rule_.size() + (op.location == 0.0 ? 0 : 1);
  }

  BeamCase case_;
  Formulation formulation_;
  QuadratureRule rule_;
  std::vector<double> points_;
  std::vector<Jet4> factors_;
  Tape tape_;
};

inline LossBreakdown evaluate_loss(Formulation f, const MlpParams& params, const BeamCase& c,
                                   const QuadratureRule& rule, bool with_gradient = true) {
  LossEvaluator ev(c, f, rule);
  return ev(params, with_gradient);
}

inline LossBreakdown strong_penalty_loss(const MlpParams& params, const BeamCase& c, const QuadratureRule& rule) {
  return evaluate_loss(Formulation::strong_penalty, params, c, rule);
}

inline LossBreakdown strong_embedded_loss(const MlpParams& params, const BeamCase& c, const QuadratureRule& rule) {
  return evaluate_loss(Formulation::strong_embedded, params, c, rule);
}

inline LossBreakdown energy_loss(const MlpParams& params, const BeamCase& c, const QuadratureRule& rule) {
  return evaluate_loss(Formulation::energy_embedded, params, c, rule);
}

/// Loss of a flat parameter vector, as consumed by optimizers and diagnostics.
using LossFunction = std::function<LossBreakdown(std::span<const double> theta)>;

/// Binds an evaluator to a network architecture.
inline LossFunction make_loss_function(LossEvaluator& evaluator, const MlpParams& architecture) {
  auto scratch = std::make_shared<MlpParams>(architecture);
  return [&evaluator, scratch](std::span<const double> theta) {
    scratch->theta.assign(theta.begin(), theta.end());
    return evaluator(*scratch);
  };
}

/// Energy functional of an arbitrary deflection jet field (no network).
template <class F>
double energy_functional(F&& deflection_jet, double q_hat, const QuadratureRule& rule) {
  return rule.integrate([&](double x) {
    const Jet4 j = deflection_jet(x);
    return 0.5 * j.d[2] * j.d[2] - q_hat * j.d[0];
  });
}

}  // namespace beampinn
