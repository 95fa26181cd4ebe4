#pragma once

// Loss-landscape conditioning diagnostics.
//
// Coefficient space: every network output carries an implicit component in
// the null space span{1, xi, xi^2, xi^3} of d^4/dxi^4. The boundary loss
// restricted to that component is |B c|^2 with B the boundary operators
// applied to the monomial basis, so its Hessian is H_c = 2 B^T B.
//
// Weight space: near a converged boundary loss the Hessian of the boundary
// penalties reduces to the Gauss-Newton form 2 J^T J, where J is the 4 x n
// Jacobian of the boundary residuals. It has at most four nonzero
// ("active") eigenvalues, 2 sigma_i(J)^2.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "beampinn/beam.hpp"
#include "beampinn/losses.hpp"

namespace beampinn {

class diagnostic_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using BoundaryMatrix = Eigen::Matrix4d;

/// Row i holds operator i applied to [1, xi, xi^2, xi^3].
inline BoundaryMatrix boundary_matrix(const BeamCase& c) {
  BoundaryMatrix b = BoundaryMatrix::Zero();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& op = c.operators[i];
    for (std::size_t j = op.order; j < 4; ++j) {
      double coef = 1.0;
      for (std::size_t m = 0; m < op.order; ++m) coef *= static_cast<double>(j - m);
      b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = coef * std::pow(op.location, static_cast<double>(j - op.order));
    }
  }
  return b;
}

struct CoefficientHessian {
  Eigen::Matrix4d hessian;
  std::array<double, 4> eigenvalues{};  // descending
  double kappa = 0.0;
};

inline std::array<double, 4> singular_values(const BoundaryMatrix& b) {
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(b);
  const auto s = svd.singularValues();
  return {s(0), s(1), s(2), s(3)};
}

inline CoefficientHessian hessian_coefficient_space(const BoundaryMatrix& b) {
  const auto sv = singular_values(b);
  expects(sv[3] > 1e-12 * sv[0], "hessian_coefficient_space: boundary matrix is singular");
  CoefficientHessian out;
  out.hessian = 2.0 * b.transpose() * b;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(out.hessian, Eigen::EigenvaluesOnly);
  for (std::size_t i = 0; i < 4; ++i) out.eigenvalues[i] = eig.eigenvalues()(3 - static_cast<Eigen::Index>(i));
  out.kappa = out.eigenvalues[0] / out.eigenvalues[3];
  return out;
}

struct SpectrumRecord {
  std::size_t iteration = 0;
  std::array<double, 4> active_eigs{};  // descending
  double max_inactive = 0.0;            // 0 unless computed in validation mode
  double kappa = 0.0;                   // +inf when J is rank deficient
};

/// All eigenvalues of the dense n x n matrix 2 J^T J, descending.
inline std::vector<double> dense_gauss_newton_eigenvalues(const Eigen::MatrixXd& jac) {
  const Eigen::MatrixXd h = 2.0 * jac.transpose() * jac;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  std::vector<double> ev(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

/// Active spectrum of 2 J^T J from the thin SVD of J. With `validate`, the
/// dense product is also formed and its fifth eigenvalue is reported as
/// max_inactive.
inline SpectrumRecord gauss_newton_bc_spectrum(const Eigen::MatrixXd& jac, bool validate = false) {
  expects(jac.rows() == 4, "gauss_newton_bc_spectrum: J must have 4 rows");
  expects(jac.allFinite(), "gauss_newton_bc_spectrum: J is not finite");
  SpectrumRecord rec;
  const Eigen::MatrixXd jt = jac.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jt);
  const auto s = svd.singularValues();
  for (Eigen::Index i = 0; i < 4; ++i) rec.active_eigs[static_cast<std::size_t>(i)] = 2.0 * s(i) * s(i);
  const double rank_tol = std::numeric_limits<double>::epsilon() * static_cast<double>(jac.cols()) * s(0);
  rec.kappa = (s(3) > rank_tol && s(3) > 0.0) ? rec.active_eigs[0] / rec.active_eigs[3]
                                                : std::numeric_limits<double>::infinity();
  if (validate && jac.cols() > 4) rec.max_inactive = std::abs(dense_gauss_newton_eigenvalues(jac)[4]);
  return rec;
}

inline SpectrumRecord boundary_spectrum(LossEvaluator& evaluator, const MlpParams& params, std::size_t iteration = 0,
                                        bool validate = false) {
  SpectrumRecord rec = gauss_newton_bc_spectrum(evaluator.boundary_jacobian(params), validate);
  rec.iteration = iteration;
  return rec;
}

struct HessianProbe {
  double step = 1e-5;
  double tau_relative = 1e-7;
};

struct HessianSpectrum {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::size_t n_negative = 0;
  double asymmetry = 0.0;            // max|H - H^T| / max|H| before symmetrization
  std::vector<double> eigenvalues;   // ascending
};

/// Dense Hessian by central differences of the gradient, column by column,
/// then a full symmetric eigensolve. Eigenvalues below -tau count as
/// negative, tau = tau_relative * max|lambda|.
inline HessianSpectrum full_hessian_spectrum(std::span<const double> theta, const LossFunction& loss_fn,
                                             HessianProbe probe = {}) {
  const auto n = static_cast<Eigen::Index>(theta.size());
  Eigen::MatrixXd h(n, n);
  std::vector<double> x(theta.begin(), theta.end());
  for (Eigen::Index j = 0; j < n; ++j) {
    const double orig = x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(j)] = orig + probe.step;
    const auto plus = loss_fn(x);
    x[static_cast<std::size_t>(j)] = orig - probe.step;
    const auto minus = loss_fn(x);
    x[static_cast<std::size_t>(j)] = orig;
    if (!plus.finite() || !minus.finite()) throw diagnostic_error("full_hessian_spectrum: non-finite gradient while probing");
    for (Eigen::Index i = 0; i < n; ++i)
      h(i, j) = (plus.gradient[static_cast<std::size_t>(i)] - minus.gradient[static_cast<std::size_t>(i)]) / (2.0 * probe.step);
  }
  HessianSpectrum out;
  const double scale = h.cwiseAbs().maxCoeff();
  out.asymmetry = scale > 0.0 ? (h - h.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  out.lambda_min = ev(0);
  out.lambda_max = ev(n - 1);
  const double tau = probe.tau_relative * std::max(std::abs(out.lambda_min), std::abs(out.lambda_max));
  for (double v : out.eigenvalues)
    if (v < -tau) ++out.n_negative;
  return out;
}

/// Quadratic model |r0 + J (theta - theta0)|^2 of a strong-form loss around
/// theta0. Its Hessian is exactly the Gauss-Newton matrix 2 J^T J.
inline LossFunction gauss_newton_surrogate(LossEvaluator& evaluator, const MlpParams& params) {
  auto [r0, jac] = evaluator.residual_system(params);
  const Eigen::VectorXd theta0 = Eigen::Map<const Eigen::VectorXd>(params.theta.data(), static_cast<Eigen::Index>(params.size()));
  return [r0 = std::move(r0), jac = std::move(jac), theta0](std::span<const double> theta) {
    const Eigen::Map<const Eigen::VectorXd> t(theta.data(), static_cast<Eigen::Index>(theta.size()));
    const Eigen::VectorXd r = r0 + jac * (t - theta0);
    LossBreakdown lb;
    lb.total = lb.residual = r.squaredNorm();
    const Eigen::VectorXd g = 2.0 * jac.transpose() * r;
    lb.gradient.assign(g.data(), g.data() + g.size());
    return lb;
  };
}

}  // namespace beampinn
