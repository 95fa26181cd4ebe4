#pragma once

// Hermite-cubic Euler-Bernoulli beam elements (EI = 1) on [0, 1].
// Two dofs per node, ordered (deflection, slope); node i sits at xi = i h.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "beampinn/beam.hpp"

namespace beampinn {

struct FemModel {
  BeamCase beam;
  std::size_t n_elem = 0;
  double h = 0.0;
  Eigen::MatrixXd stiffness;  // unconstrained, (2n+2) x (2n+2)
  Eigen::VectorXd load;
  std::vector<std::size_t> constrained_dofs;

  std::size_t dofs() const { return 2 * n_elem + 2; }
};

inline Eigen::Matrix4d element_stiffness(double h) {
  Eigen::Matrix4d k;
  const double h2 = h * h;
  k << 12, 6 * h, -12, 6 * h,
       6 * h, 4 * h2, -6 * h, 2 * h2,
       -12, -6 * h, 12, -6 * h,
       6 * h, 2 * h2, -6 * h, 4 * h2;
  return k / (h2 * h);
}

/// Consistent nodal load of a uniform load q over one element.
inline Eigen::Vector4d element_load(double q, double h) {
  return q * h * Eigen::Vector4d(0.5, h / 12.0, 0.5, -h / 12.0);
}

inline FemModel assemble(const BeamCase& c, std::size_t n_elem) {
  expects(n_elem >= 1, "assemble: need at least one element");
  FemModel m;
  m.beam = c;
  m.n_elem = n_elem;
  m.h = 1.0 / static_cast<double>(n_elem);
  const auto n = static_cast<Eigen::Index>(m.dofs());
  m.stiffness = Eigen::MatrixXd::Zero(n, n);
  m.load = Eigen::VectorXd::Zero(n);
  const Eigen::Matrix4d ke = element_stiffness(m.h);
  const Eigen::Vector4d fe = element_load(c.q_hat, m.h);
  for (std::size_t e = 0; e < n_elem; ++e) {
    const auto base = static_cast<Eigen::Index>(2 * e);
    m.stiffness.block<4, 4>(base, base) += ke;
    m.load.segment<4>(base) += fe;
  }
  const std::size_t last = 2 * n_elem;
  switch (c.kind) {
    case CaseKind::CV: m.constrained_dofs = {0, 1}; break;
    case CaseKind::SS: m.constrained_dofs = {0, last}; break;
    case CaseKind::CC: m.constrained_dofs = {0, 1, last, last + 1}; break;
  }
  return m;
}

/// Nodal (deflection, slope) vector; constrained dofs are zero.
inline Eigen::VectorXd solve(const FemModel& m) {
  const std::size_t n = m.dofs();
  std::vector<Eigen::Index> free;
  for (std::size_t i = 0; i < n; ++i)
    if (std::find(m.constrained_dofs.begin(), m.constrained_dofs.end(), i) == m.constrained_dofs.end())
      free.push_back(static_cast<Eigen::Index>(i));
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (free.empty()) return u;
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd k(nf, nf);
  Eigen::VectorXd f(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    f(i) = m.load(free[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < nf; ++j) k(i, j) = m.stiffness(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  expects(llt.info() == Eigen::Success, "fem solve: constrained stiffness is not positive definite");
  Eigen::VectorXd uf = llt.solve(f);
  // Refinement with residuals in extended precision.
  using Ext = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> k_ext = k.cast<long double>();
  for (int it = 0; it < 3; ++it) {
    const Ext r = f.cast<long double>() - k_ext * uf.cast<long double>();
    uf += llt.solve(r.cast<double>());
  }
  // Normwise backward error; cond(K) grows like n^4, so |Ku - f| / |f| cannot
  // reach 1e-12 in double at useful mesh sizes.
  const double scale = k.lpNorm<Eigen::Infinity>() * uf.lpNorm<Eigen::Infinity>() + f.lpNorm<Eigen::Infinity>();
  expects((k * uf - f).lpNorm<Eigen::Infinity>() <= 1e-12 * scale, "fem solve: residual check failed");
  for (Eigen::Index i = 0; i < nf; ++i) u(free[static_cast<std::size_t>(i)]) = uf(i);
  return u;
}

namespace detail {

/// Element index and local coordinate t in [0, 1]. A point on a shared node
/// belongs to the element on its left.
inline std::pair<std::size_t, double> locate(const FemModel& m, double xi) {
  const double s = xi * static_cast<double>(m.n_elem);
  const double e_real = std::ceil(s - 1e-9) - 1.0;
  const auto e = static_cast<std::size_t>(std::clamp(e_real, 0.0, static_cast<double>(m.n_elem - 1)));
  return {e, s - static_cast<double>(e)};
}

}  // namespace detail

inline double fem_deflection(const FemModel& m, const Eigen::VectorXd& u, double xi) {
  const auto [e, t] = detail::locate(m, xi);
  const auto b = static_cast<Eigen::Index>(2 * e);
  const double h = m.h;
  const double t2 = t * t, t3 = t2 * t;
  return (1 - 3 * t2 + 2 * t3) * u(b) + h * (t - 2 * t2 + t3) * u(b + 1) + (3 * t2 - 2 * t3) * u(b + 2) +
         h * (t3 - t2) * u(b + 3);
}

/// Second derivative of the Hermite interpolant: linear within an element.
inline double fem_curvature(const FemModel& m, const Eigen::VectorXd& u, double xi) {
  const auto [e, t] = detail::locate(m, xi);
  const auto b = static_cast<Eigen::Index>(2 * e);
  const double h = m.h;
  return ((-6 + 12 * t) * u(b) + h * (-4 + 6 * t) * u(b + 1) + (6 - 12 * t) * u(b + 2) + h * (-2 + 6 * t) * u(b + 3)) /
         (h * h);
}

inline StrainField fem_strain_field(const FemModel& m, const Eigen::VectorXd& u,
                                    std::vector<double> xi_grid = default_xi_grid(),
                                    std::vector<double> zeta_grid = default_zeta_grid()) {
  return strain_field([&](double x) { return fem_curvature(m, u, x); }, m.beam, std::move(xi_grid), std::move(zeta_grid));
}

}  // namespace beampinn
